#pragma once

// Subcommands behind the xwin executable. Each one turns a RunConfig into a
// Report (a flat table plus a meta block) that renders as CSV or JSON.

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include <cstdio>
#include <future>
#include <ostream>
#include <variant>

#include "xwin/config.hpp"
#include "xwin/constraints.hpp"
#include "xwin/radial.hpp"
#include "xwin/spectrum.hpp"

namespace xwin::cli {

using json = nlohmann::ordered_json;
using cplx = std::complex<double>;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { ok = 0, config_error = 2, numerical_failure = 3, discrepancy = 4 };

using Cell = std::variant<std::monostate, long, double, std::string, bool>;

struct Report {
    std::string command;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    json meta = json::object();
    std::vector<std::string> summary;  // trailing "# ..." lines in CSV
    bool discrepancy = false;          // coefficient routes disagree beyond tolerance
};

inline Report make_report(std::string command, std::vector<std::string> columns) {
    Report r;
    r.command = std::move(command);
    r.columns = std::move(columns);
    return r;
}

// ---- formatting -----------------------------------------------------------

inline std::string format_number(double v, int precision) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

/// The double a rendered number parses back to.
inline double rounded(double v, int precision) { return std::strtod(format_number(v, precision).c_str(), nullptr); }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string render_cell(const Cell& c, int precision) {
    return std::visit(
        [&](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) return "";
            else if constexpr (std::is_same_v<V, long>) return std::to_string(v);
            else if constexpr (std::is_same_v<V, double>) return format_number(v, precision);
            else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
            else return csv_field(v);
        },
        c);
}

inline json cell_json(const Cell& c, int precision) {
    return std::visit(
        [&](const auto& v) -> json {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) return nullptr;
            else if constexpr (std::is_same_v<V, double>) {
                if (!std::isfinite(v)) return format_number(v, precision);
                return rounded(v, precision);
            } else
                return v;
        },
        c);
}

/// Rounds every floating value inside a JSON tree.
inline json round_json(const json& j, int precision) {
    if (j.is_number_float()) {
        double v = j.get<double>();
        if (!std::isfinite(v)) return format_number(v, precision);
        return rounded(v, precision);
    }
    if (j.is_array() || j.is_object()) {
        json out = j;
        for (auto it = out.begin(); it != out.end(); ++it) *it = round_json(*it, precision);
        return out;
    }
    return j;
}

inline void write_csv(const Report& r, std::ostream& os, int precision) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << render_cell(row[i], precision);
        os << "\n";
    }
    for (const auto& s : r.summary) os << "# " << s << "\n";
}

inline void write_json(const Report& r, std::ostream& os, int precision) {
    json out;
    out["meta"] = round_json(r.meta, precision);
    out["results"] = json::array();
    for (const auto& row : r.rows) {
        json o = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = cell_json(row[i], precision);
        out["results"].push_back(std::move(o));
    }
    os << out.dump(2) << "\n";
}

// ---- shared pieces --------------------------------------------------------

inline json base_meta(const config::RunConfig& c, const std::string& command) {
    json m;
    m["command"] = command;
    m["versions"] = {{"xwin", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    json cfg = config::to_json(c);
    m["profile"] = cfg["profile"];
    m["profile"]["description"] = config::make_profile(c.profile).describe();
    m["tolerances"] = cfg["solver"]["tolerances"];
    m["constants"] = cfg["constants"];
    m["config"] = cfg;
    return m;
}

inline std::vector<int> l_values(const config::RunConfig& c) {
    std::vector<int> ls;
    for (int l = c.l_min; l <= c.l_max; ++l) ls.push_back(l);
    return ls;
}

/// Chain-rule against closed-form coefficients on [0.3, 1.5] for each l.
inline void check_routes(const config::RunConfig& c, const EtaProfile& prof, Report& rep) {
    double worst = 0.0, where = 0.0;
    int worst_l = c.l_min;
    for (int l : l_values(c)) {
        auto cmp = radial::compare_routes(radial::epsilon_ode(prof, l, c.energy, c.constants), 0.3, 1.5);
        if (cmp.max_rel() > worst) {
            worst = cmp.max_rel();
            where = cmp.max_rel_p >= cmp.max_rel_q ? cmp.worst_eps_p : cmp.worst_eps_q;
            worst_l = l;
        }
    }
    rep.meta["route_agreement"] = {{"max_rel", worst}, {"eps", where}, {"l", worst_l}, {"tolerance", c.tol_agreement},
                                   {"range", {0.3, 1.5}}};
    rep.discrepancy = worst > c.tol_agreement;
}

inline void add_energy_scales(const config::RunConfig& c, Report& rep) {
    double rc = c.profile.rho_c;
    rep.meta["scales"] = {{"energy_unit", energy_unit(c.constants, rc)},
                          {"omega", oscillation_scale(c.constants, rc)},
                          {"casimir", casimir_scale(c.constants, rc)},
                          {"mass_quantum_z1", constraints::mass_quantum(1, rc, c.constants)}};
}

// ---- commands -------------------------------------------------------------

inline Report cmd_brackets(const config::RunConfig& c) {
    using namespace constraints;
    auto prof = config::make_profile(c.profile);
    Report rep = make_report("brackets", {"pair", "expression", "r", "value_re", "value_im", "hbar_r", "anomaly"});
    rep.meta = base_meta(c, "brackets");
    add_energy_scales(c, rep);
    auto structure = DiracStructure::build(ConstraintSet::build(c.window_scale));
    auto table = commutator_table(structure);
    auto eta = prof.r_source();
    double s = c.window_scale == WindowScale::sqrt2 ? std::sqrt(2.0) : 1.0;
    double hbar = c.constants.hbar;
    for (const auto& e : table) {
        std::string pair = "[" + std::string(sym::info(e.a).name) + "," + std::string(sym::info(e.b).name) + "]";
        std::string expr = sym::to_string(e.commutator);
        for (double r : c.r_samples) {
            auto d = eta(r, 3);
            sym::EvalPoint pt;
            pt.eta = eta;
            pt.set(sym::Var::r, r).set(sym::Var::theta, M_PI / 2).set(sym::Var::phi, 0.0);
            pt.set(sym::Var::rho, s * d[0]).set(sym::Var::sigma, M_PI / 4).set(sym::Var::p_r, c.p_r);
            pt.set(sym::Var::p_theta, 0.0).set(sym::Var::p_phi, 0.0).set(sym::Var::p_sigma, 0.0);
            pt.set(sym::Var::p_rho, s * d[1] * c.p_r);
            pt.set(sym::Param::hbar, hbar).set(sym::Param::m, c.constants.m).set(sym::Param::rho_c, c.profile.rho_c);
            cplx v = sym::eval_numeric(e.commutator, pt);
            double hr = hbar / (1.0 + s * s * d[1] * d[1]);
            double anomaly = (e.a == sym::Var::p_r && e.b == sym::Var::p_rho) ? anomaly_term(prof, r, hbar) : 0.0;
            rep.rows.push_back({pair, expr, r, v.real(), v.imag(), hr, anomaly});
        }
    }
    rep.meta["anomaly_expression"] = sym::to_string(anomaly_expr());
    return rep;
}

inline Report cmd_classify(const config::RunConfig& c) {
    auto prof = config::make_profile(c.profile);
    Report rep = make_report("classify", {"l", "eps", "kind", "limit_P", "limit_Q", "slope_P", "slope_Q", "consistent", "diagnostics"});
    rep.meta = base_meta(c, "classify");
    rep.meta["energy"] = json::array({c.energy.real(), c.energy.imag()});
    check_routes(c, prof, rep);
    for (int l : l_values(c)) {
        auto ode = radial::epsilon_ode(prof, l, c.energy, c.constants);
        for (double x : c.eps_points) {
            auto r = radial::classify(ode, x);
            bool consistent = r.probe_P.consistent && r.probe_Q.consistent;
            rep.rows.push_back({static_cast<long>(l), x, std::string(radial::point_kind_name(r.kind)), r.limit_P,
                                r.limit_Q, r.probe_P.slope, r.probe_Q.slope, consistent, r.diagnostics});
        }
    }
    return rep;
}

inline Report cmd_solve(const config::RunConfig& c) {
    auto prof = config::make_profile(c.profile);
    Report rep = make_report("solve", {"eps", "R_series_re", "R_series_im", "R_numeric_re", "R_numeric_im", "abs_diff"});
    rep.meta = base_meta(c, "solve");
    check_routes(c, prof, rep);
    int l = c.l_min, k = c.k_set.front();
    auto ode = radial::epsilon_ode(prof, l, c.energy, c.constants);
    int degree = c.series_degree;
    auto t = spectrum::taylor_coeffs(ode, std::max(0, degree - 1));
    auto a = spectrum::frobenius_coeffs(t, k, c.energy, 1.0, degree, cplx(c.a1));
    std::vector<double> xs;
    for (int i = 0; i < c.eps_samples; ++i) xs.push_back(c.eps_lo + (c.eps_hi - c.eps_lo) * i / (c.eps_samples - 1));
    auto [R0, dR0] = spectrum::series_eval(a, k, 1.0);
    auto sol = radial::integrate_numeric(ode, R0, dR0, 1.0, xs, c.tol_integrator);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cplx rs = spectrum::series_eval(a, k, xs[i]).first;
        double diff = std::abs(rs - sol.R[i]);
        worst = std::max(worst, diff);
        scale = std::max(scale, std::abs(sol.R[i]));
        rep.rows.push_back({xs[i], rs.real(), rs.imag(), sol.R[i].real(), sol.R[i].imag(), diff});
    }
    double rel = scale > 0.0 ? worst / scale : worst;
    rep.meta["solve"] = {{"l", l},
                         {"k", k},
                         {"energy", json::array({c.energy.real(), c.energy.imag()})},
                         {"series_degree", degree},
                         {"a1", c.a1},
                         {"integrator_error_estimate", sol.error_estimate},
                         {"integrator_steps", sol.steps}};
    rep.meta["summary"] = {{"max_abs_diff", worst}, {"max_rel_diff", rel}};
    rep.summary.push_back("max_abs_diff=" + format_number(worst, c.precision) +
                          " max_rel_diff=" + format_number(rel, c.precision));
    return rep;
}

inline Report cmd_spectrum(const config::RunConfig& c) {
    auto prof = config::make_profile(c.profile);
    Report rep = make_report("spectrum",
               {"k", "n", "l", "E_bar_re", "E_bar_im", "E_SI_re", "E_SI_im", "l2_plus_l", "remainder_f_re",
                "remainder_f_im", "rejected", "eta_residual_re", "eta_residual_im"});
    rep.meta = base_meta(c, "spectrum");
    add_energy_scales(c, rep);
    check_routes(c, prof, rep);
    spectrum::SweepOptions base;
    base.ks = c.k_set;
    base.n_max = c.truncation;
    // one job per l, gathered in l order
    std::vector<std::future<std::vector<spectrum::SpectrumEntry>>> jobs;
    for (int l : l_values(c)) {
        spectrum::SweepOptions o = base;
        o.l_min = o.l_max = l;
        jobs.push_back(std::async(std::launch::async, [o, &prof, &c] { return spectrum::spectrum_sweep(prof, o, c.constants); }));
    }
    std::vector<spectrum::SpectrumEntry> all;
    for (auto& j : jobs) {
        auto part = j.get();
        all.insert(all.end(), part.begin(), part.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return std::tie(a.k, a.n, a.l) < std::tie(b.k, b.n, b.l);
    });
    double worst_residual = 0.0;
    json notes = json::array();
    for (const auto& s : all) {
        std::vector<Cell> row{static_cast<long>(s.k), static_cast<long>(s.n), static_cast<long>(s.l)};
        if (s.e_bar) {
            row.insert(row.end(), {s.e_bar->real(), s.e_bar->imag(), s.energy.real(), s.energy.imag(), s.kk_term,
                                   s.remainder.real(), s.remainder.imag()});
            worst_residual = std::max(worst_residual, s.residual / std::max(s.residual_scale, 1e-300));
        } else {
            row.insert(row.end(), {Cell{}, Cell{}, Cell{}, Cell{}, s.kk_term, Cell{}, Cell{}});
            notes.push_back({{"k", s.k}, {"n", s.n}, {"l", s.l}, {"note", s.note}});
        }
        row.push_back(s.rejected);
        if (!s.eta_conditions.empty()) {
            row.push_back(s.eta_conditions[0].real());
            row.push_back(s.eta_conditions[0].imag());
        } else {
            row.insert(row.end(), {Cell{}, Cell{}});
        }
        rep.rows.push_back(std::move(row));
    }
    rep.meta["rejected_branches"] = notes;
    rep.meta["max_scaled_residual"] = worst_residual;
    if (worst_residual > c.tol_determinant)
        throw spectrum::SpectrumError("determinant residual " + format_number(worst_residual, 6) +
                                      " exceeds tolerance " + format_number(c.tol_determinant, 6));
    return rep;
}

inline Report cmd_eta_conditions(const config::RunConfig& c, int order) {
    auto prof = config::make_profile(c.profile);
    Report rep = make_report("eta-conditions",
               {"l", "m", "expression", "residual_re", "residual_im", "E_bar_re", "E_bar_im", "a1_re", "a1_im"});
    rep.meta = base_meta(c, "eta-conditions");
    rep.meta["order"] = order;
    check_routes(c, prof, rep);
    json fixed = json::array();
    for (int l : l_values(c)) {
        auto t = spectrum::taylor_coeffs(radial::epsilon_ode(prof, l, 0.0, c.constants), order);
        auto ec = spectrum::eta_boundary_conditions(t, order);
        Cell er = ec.e_bar ? Cell{ec.e_bar->real()} : Cell{}, ei = ec.e_bar ? Cell{ec.e_bar->imag()} : Cell{};
        fixed.push_back({{"l", l}, {"inconsistent", ec.inconsistent}, {"conditions", ec.residuals.size()}});
        for (std::size_t i = 0; i < ec.residuals.size(); ++i)
            rep.rows.push_back({static_cast<long>(l), static_cast<long>(ec.equations[i]), ec.expressions[i],
                                ec.residuals[i].real(), ec.residuals[i].imag(), er, ei, ec.a1.real(), ec.a1.imag()});
    }
    rep.meta["per_l"] = fixed;
    return rep;
}

// ---- driver ---------------------------------------------------------------

struct Options {
    std::string command;
    std::string config_path;
    std::optional<std::string> format;
    std::optional<std::string> out;
    bool strict = false;
    std::optional<int> l;
    std::optional<int> order;
};

/// Applies command-line overrides to a parsed configuration.
inline config::RunConfig apply_overrides(config::RunConfig c, const Options& o) {
    if (o.format) {
        if (*o.format != "csv" && *o.format != "json") throw config::ConfigError("--format", "expected csv or json");
        c.format = *o.format;
    }
    if (o.out) c.out_path = *o.out;
    if (o.l) {
        if (*o.l < 0) throw config::ConfigError("--l", "must be non-negative");
        c.l_min = c.l_max = *o.l;
    }
    if (o.order) {
        if (*o.order < 0) throw config::ConfigError("--order", "must be non-negative");
        if (o.command == "solve") {
            if (*o.order > c.profile.derivative_cap + 1)
                throw config::ConfigError("--order", "series degree exceeds derivative_cap + 1");
            c.series_degree = *o.order;
        } else {
            if (*o.order > c.profile.derivative_cap - 3)
                throw config::ConfigError("--order", "truncation exceeds derivative_cap - 3");
            c.truncation = *o.order;
        }
    }
    return c;
}

inline Report dispatch(const config::RunConfig& c, const std::string& command) {
    if (command == "brackets") return cmd_brackets(c);
    if (command == "classify") return cmd_classify(c);
    if (command == "solve") return cmd_solve(c);
    if (command == "spectrum") return cmd_spectrum(c);
    if (command == "eta-conditions") return cmd_eta_conditions(c, std::max(2, c.truncation));
    throw config::ConfigError("", "unknown command " + command);
}

inline void render(const Report& r, const config::RunConfig& c, std::ostream& os) {
    if (c.format == "json") write_json(r, os, c.precision);
    else write_csv(r, os, c.precision);
}

}  // namespace xwin::cli

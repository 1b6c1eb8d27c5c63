#pragma once

// Run configuration for the command-line front end. The file is a single JSON
// document; every key is checked and anything unexpected is an error that
// names its key path.

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xwin/constraints.hpp"
#include "xwin/profiles.hpp"
#include "xwin/units.hpp"

namespace xwin::config {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error("config error at " + (path.empty() ? std::string("<root>") : path) + ": " + msg),
          path_(path) {}
    const std::string& key_path() const { return path_; }

private:
    std::string path_;
};

struct ProfileConfig {
    std::string variant = "damped_oscillatory";
    json parameters = {{"alpha", 1.0}, {"beta", 1.0}};
    double rho_c = 1.0;
    int derivative_cap = 14;
};

struct RunConfig {
    ProfileConfig profile;
    int l_min = 0;
    int l_max = 3;
    std::vector<int> k_set{0, 1};
    int truncation = 4;
    int series_degree = 12;
    double tol_integrator = 1e-12;
    double tol_determinant = 1e-8;
    double tol_agreement = 1e-9;
    Constants constants = Constants::natural();
    constraints::WindowScale window_scale = constraints::WindowScale::unit;
    std::string format = "csv";
    std::string out_path;
    int precision = 12;
    std::vector<double> r_samples{1.5, 2.0, 3.0};
    double p_r = 1.0;
    std::vector<double> eps_points{0.0, 1.0};
    double eps_lo = 0.85;
    double eps_hi = 1.15;
    int eps_samples = 31;
    std::complex<double> energy = 2.0;
    double a1 = 0.0;
};

namespace detail {

/// Cursor over one JSON object that remembers which keys were read.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::optional<Node> object(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        return Node(*v, child(key));
    }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) throw ConfigError(child(key), "expected a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = get(key)) {
            if (!v->is_number_integer()) throw ConfigError(child(key), "expected an integer");
            out = v->get<int>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = get(key)) {
            if (!v->is_string()) throw ConfigError(child(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) throw ConfigError(child(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) throw ConfigError(child(key) + "[" + std::to_string(i) + "]", "expected a number");
                out.push_back((*v)[i].get<double>());
            }
        }
    }

    void integers(const std::string& key, std::vector<int>& out) {
        if (const json* v = get(key)) {
            if (!v->is_array()) throw ConfigError(child(key), "expected an array of integers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number_integer())
                    throw ConfigError(child(key) + "[" + std::to_string(i) + "]", "expected an integer");
                out.push_back((*v)[i].get<int>());
            }
        }
    }

    /// Energies may be a number or [re, im].
    void complex(const std::string& key, std::complex<double>& out) {
        if (const json* v = get(key)) {
            if (v->is_number()) out = v->get<double>();
            else if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
                out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
            else
                throw ConfigError(child(key), "expected a number or [re, im]");
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(child(it.key()), "unknown key");
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) throw ConfigError(path, msg);
}

}  // namespace detail

/// Profile from a variant name and parameter map.
inline EtaProfile make_profile(const ProfileConfig& pc, const std::string& path = "profile") {
    using detail::require;
    detail::Node p(pc.parameters, path + ".parameters");
    EtaProfile out = EtaProfile::zero(pc.rho_c);
    const std::string& v = pc.variant;
    auto need = [&](const std::string& key) {
        double x = 0.0;
        require(p.has(key), p.child(key), "missing parameter");
        p.number(key, x);
        return x;
    };
    auto coeffs = [&]() {
        std::vector<double> c;
        require(p.has("coeffs"), p.child("coeffs"), "missing parameter");
        p.numbers("coeffs", c);
        require(!c.empty(), p.child("coeffs"), "needs at least one coefficient");
        return c;
    };
    if (v == "zero") {
        out = EtaProfile::zero(pc.rho_c);
    } else if (v == "constant") {
        out = EtaProfile::constant(need("value"), pc.rho_c);
    } else if (v == "interior_quadratic") {
        double a = need("alpha");
        out = EtaProfile::interior_quadratic(a, need("beta"), pc.rho_c);
    } else if (v == "damped_oscillatory") {
        double a = need("alpha");
        out = EtaProfile::damped_oscillatory(a, need("beta"), pc.rho_c);
    } else if (v == "taylor_at_boundary") {
        out = EtaProfile::taylor_at_boundary(coeffs(), pc.rho_c);
    } else if (v == "polynomial") {
        std::string chart = "r";
        double center = 0.0;
        p.string("chart", chart);
        p.number("center", center);
        require(chart == "r" || chart == "epsilon", p.child("chart"), "expected \"r\" or \"epsilon\"");
        out = EtaProfile::polynomial(chart == "r" ? Chart::r : Chart::epsilon, center, coeffs(), pc.rho_c);
    } else {
        throw ConfigError(path + ".variant", "unknown variant \"" + v + "\"");
    }
    p.finish();
    return out.with_cap(pc.derivative_cap);
}

inline RunConfig parse(const json& j) {
    using detail::require;
    RunConfig c;
    detail::Node root(j, "");
    if (auto p = root.object("profile")) {
        if (p->has("variant")) c.profile.parameters = json::object();
        p->string("variant", c.profile.variant);
        if (const json* prm = p->get("parameters")) {
            require(prm->is_object(), "profile.parameters", "expected an object");
            c.profile.parameters = *prm;
        }
        p->number("rho_c", c.profile.rho_c);
        p->integer("derivative_cap", c.profile.derivative_cap);
        require(c.profile.rho_c > 0.0, "profile.rho_c", "must be positive");
        require(c.profile.derivative_cap >= 3 && c.profile.derivative_cap <= 24, "profile.derivative_cap",
                "must lie in [3, 24]");
        p->finish();
    }
    if (auto q = root.object("quantum")) {
        q->integer("l_min", c.l_min);
        q->integer("l_max", c.l_max);
        q->integers("k", c.k_set);
        require(c.l_min >= 0, "quantum.l_min", "must be non-negative");
        require(c.l_min <= c.l_max, "quantum.l_max", "must not be below l_min");
        require(!c.k_set.empty(), "quantum.k", "must not be empty");
        for (std::size_t i = 0; i < c.k_set.size(); ++i)
            require(c.k_set[i] == 0 || c.k_set[i] == 1, "quantum.k[" + std::to_string(i) + "]", "must be 0 or 1");
        q->finish();
    }
    if (auto s = root.object("solver")) {
        s->integer("truncation", c.truncation);
        s->integer("series_degree", c.series_degree);
        if (auto t = s->object("tolerances")) {
            t->number("integrator", c.tol_integrator);
            t->number("determinant", c.tol_determinant);
            t->number("agreement", c.tol_agreement);
            require(c.tol_integrator > 0.0, "solver.tolerances.integrator", "must be positive");
            require(c.tol_determinant > 0.0, "solver.tolerances.determinant", "must be positive");
            require(c.tol_agreement > 0.0, "solver.tolerances.agreement", "must be positive");
            t->finish();
        }
        s->finish();
    }
    require(c.truncation >= 0, "solver.truncation", "must be non-negative");
    require(c.truncation <= c.profile.derivative_cap - 3, "solver.truncation",
            "must not exceed derivative_cap - 3 = " + std::to_string(c.profile.derivative_cap - 3));
    require(c.series_degree >= 0, "solver.series_degree", "must be non-negative");
    require(c.series_degree <= c.profile.derivative_cap + 1, "solver.series_degree",
            "must not exceed derivative_cap + 1 = " + std::to_string(c.profile.derivative_cap + 1));
    if (auto k = root.object("constants")) {
        std::string units = "natural", scale = "unit";
        k->string("units", units);
        require(units == "natural" || units == "SI", "constants.units", "expected \"natural\" or \"SI\"");
        if (units == "SI") c.constants = Constants::si(1.0);
        k->number("hbar", c.constants.hbar);
        k->number("m", c.constants.m);
        k->number("c", c.constants.c);
        require(c.constants.hbar > 0.0, "constants.hbar", "must be positive");
        require(c.constants.m > 0.0, "constants.m", "must be positive");
        require(c.constants.c > 0.0, "constants.c", "must be positive");
        k->string("window_scale", scale);
        require(scale == "unit" || scale == "sqrt2", "constants.window_scale", "expected \"unit\" or \"sqrt2\"");
        c.window_scale = scale == "unit" ? constraints::WindowScale::unit : constraints::WindowScale::sqrt2;
        k->finish();
    }
    if (auto o = root.object("output")) {
        o->string("format", c.format);
        o->string("path", c.out_path);
        o->integer("precision", c.precision);
        require(c.format == "csv" || c.format == "json", "output.format", "expected \"csv\" or \"json\"");
        require(c.precision >= 1 && c.precision <= 17, "output.precision", "must lie in [1, 17]");
        o->finish();
    }
    if (auto p = root.object("probe")) {
        p->numbers("r_samples", c.r_samples);
        p->number("p_r", c.p_r);
        p->numbers("eps_points", c.eps_points);
        std::vector<double> range{c.eps_lo, c.eps_hi};
        p->numbers("eps_range", range);
        require(range.size() == 2, "probe.eps_range", "expected [lo, hi]");
        c.eps_lo = range[0];
        c.eps_hi = range[1];
        require(c.eps_lo < c.eps_hi, "probe.eps_range", "lo must be below hi");
        require(!(c.eps_lo <= 0.0 && c.eps_hi >= 0.0), "probe.eps_range", "must exclude eps = 0");
        p->integer("eps_samples", c.eps_samples);
        require(c.eps_samples >= 2, "probe.eps_samples", "must be at least 2");
        p->complex("energy", c.energy);
        p->number("a1", c.a1);
        for (std::size_t i = 0; i < c.r_samples.size(); ++i)
            require(c.r_samples[i] > 0.0, "probe.r_samples[" + std::to_string(i) + "]", "must be positive");
        p->finish();
    }
    root.finish();
    make_profile(c.profile);  // validates the parameter map
    return c;
}

inline RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse(j);
}

/// Normalised echo of a configuration; parse(to_json(c)) reproduces c.
inline json to_json(const RunConfig& c) {
    json j;
    j["profile"] = {{"variant", c.profile.variant},
                    {"parameters", c.profile.parameters},
                    {"rho_c", c.profile.rho_c},
                    {"derivative_cap", c.profile.derivative_cap}};
    j["quantum"] = {{"l_min", c.l_min}, {"l_max", c.l_max}, {"k", c.k_set}};
    j["solver"] = {{"truncation", c.truncation},
                   {"series_degree", c.series_degree},
                   {"tolerances",
                    {{"integrator", c.tol_integrator}, {"determinant", c.tol_determinant}, {"agreement", c.tol_agreement}}}};
    j["constants"] = {{"units", units_name(c.constants.units)},
                      {"hbar", c.constants.hbar},
                      {"m", c.constants.m},
                      {"c", c.constants.c},
                      {"window_scale", constraints::scale_name(c.window_scale)}};
    j["output"] = {{"format", c.format}, {"path", c.out_path}, {"precision", c.precision}};
    j["probe"] = {{"r_samples", c.r_samples},
                  {"p_r", c.p_r},
                  {"eps_points", c.eps_points},
                  {"eps_range", {c.eps_lo, c.eps_hi}},
                  {"eps_samples", c.eps_samples},
                  {"energy", json::array({c.energy.real(), c.energy.imag()})},
                  {"a1", c.a1}};
    return j;
}

}  // namespace xwin::config

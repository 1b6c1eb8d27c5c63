#pragma once

// Radial equation R'' + P R' + Q R = 0 of the reduced 3d problem, in the r
// chart and in the dimensionless chart eps = rho_c / r, plus singular-point
// classification by limit probing and an adaptive integrator used as an
// independent check on series solutions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "xwin/jet.hpp"
#include "xwin/profiles.hpp"
#include "xwin/symbolic.hpp"
#include "xwin/units.hpp"

namespace xwin::radial {

using cplx = std::complex<double>;

/// Coefficient Taylor data around a point: P as a jet, Q = q_const + E_bar * q_energy.
struct CoefficientJets {
    Jet<> p;
    Jet<> q_const;
    Jet<> q_energy;
};

/// How the eps-chart coefficients are produced.
///   chain_rule: mechanical transform of the r-chart equation (authoritative)
///   closed_form: the closed eps-chart formulas
enum class Route { chain_rule, closed_form };

class RadialODE {
public:
    RadialODE(Chart chart, const EtaProfile& profile, int l, cplx e_bar, Constants k = Constants::natural())
        : chart_(chart), r_profile_(profile.to_r()), eps_profile_(profile.to_epsilon()), l_(l), e_bar_(e_bar),
          k_(k) {
        if (chart == Chart::window) throw DomainError("radial equation lives in the r or eps chart");
        if (l < 0) throw std::invalid_argument("l must be nonnegative");
        k_.validate();
    }

    Chart chart() const { return chart_; }
    int l() const { return l_; }
    double L() const { return static_cast<double>(l_) * (l_ + 1); }
    cplx e_bar() const { return e_bar_; }
    double rho_c() const { return r_profile_.rho_c(); }
    const Constants& constants() const { return k_; }
    const EtaProfile& r_profile() const { return r_profile_; }
    const EtaProfile& eps_profile() const { return eps_profile_; }
    /// Dimensional energy E = E_bar hbar^2 / (2 m rho_c^2).
    cplx energy() const { return e_bar_ * energy_unit(k_, rho_c()); }

    RadialODE in_chart(Chart c) const {
        RadialODE o = *this;
        o.chart_ = c;
        return o;
    }
    RadialODE with_energy(cplx e_bar) const {
        RadialODE o = *this;
        o.e_bar_ = e_bar;
        return o;
    }
    RadialODE with_l(int l) const {
        RadialODE o = *this;
        o.l_ = l;
        return o;
    }

    // ---- r chart ----

    /// hbar'(r) / (2 hbar(r)) + 2/r with hbar(r) = hbar / (1 + eta'^2), through jets of hbar(r).
    double P_planck(double r) const {
        check_r(r);
        Jet<> eta = r_profile_.jet(r, 2) * rho_c();
        Jet<> d1 = eta.derivative();
        Jet<> h = k_.hbar / (1.0 + d1 * d1);
        return h[1] / (2.0 * h[0]) + 2.0 / r;
    }

    /// Coefficient ratio of the operator form: -eta' eta'' / (1 + eta'^2) + 2/r.
    double P_ratio(double r) const {
        check_r(r);
        auto d = r_derivs(r, 2);
        return -d[1] * d[2] / (1.0 + d[1] * d[1]) + 2.0 / r;
    }

    /// -(l(l+1)/r^2 - 2mE/hbar^2) (1 + eta'^2), i.e. -(l(l+1) hbar^2/r^2 - 2mE)/(hbar hbar(r)).
    cplx Q_r(double r) const {
        check_r(r);
        auto d = r_derivs(r, 1);
        double rc = rho_c();
        return -(L() / (r * r) - e_bar_ / (rc * rc)) * (1.0 + d[1] * d[1]);
    }

    // ---- eps chart ----

    double P_closed(double eps) const {
        check_eps(eps);
        auto d = eps_profile_.eval(eps, 2);
        double e3 = eps * eps * eps;
        return -e3 * d[1] * (2.0 * d[1] + eps * d[2]) / (1.0 + eps * e3 * d[1] * d[1]);
    }
    cplx Q_closed(double eps) const {
        check_eps(eps);
        auto d = eps_profile_.eval(eps, 1);
        double e2 = eps * eps, e4 = e2 * e2;
        return -(1.0 / e4) * (e2 * L() - e_bar_) * (1.0 + e4 * d[1] * d[1]);
    }
    double P_chain(double eps) const {
        check_eps(eps);
        double r = rho_c() / eps;
        return 2.0 / eps - rho_c() / (eps * eps) * P_ratio(r);
    }
    cplx Q_chain(double eps) const {
        check_eps(eps);
        double r = rho_c() / eps;
        double s = rho_c() / (eps * eps);
        return s * s * Q_r(r);
    }
    /// Size of the cancelling terms in P_chain (2/eps on both sides).
    double P_chain_scale(double eps) const { return 2.0 / std::abs(eps); }

    // ---- chart-dispatched ----

    double P(double x) const { return chart_ == Chart::r ? P_ratio(x) : P_chain(x); }
    cplx Q(double x) const { return chart_ == Chart::r ? Q_r(x) : Q_chain(x); }

    /// Taylor jets of the coefficients around x (eps chart; order = number of terms - 1).
    CoefficientJets jets(double eps0, int order, Route route = Route::chain_rule) const {
        check_eps(eps0);
        const auto n = static_cast<std::size_t>(order);
        Jet<> e = Jet<>::variable(eps0, n);
        Jet<> e2 = e * e, e4 = e2 * e2;
        CoefficientJets out;
        if (route == Route::closed_form) {
            Jet<> eta = eps_profile_.jet(eps0, order + 2);
            Jet<> d1 = eta.derivative().truncated(n), d2 = eta.derivative().derivative().truncated(n);
            Jet<> w = 1.0 + e4 * d1 * d1;
            out.p = -(e2 * e) * d1 * (2.0 * d1 + e * d2) / w;
            out.q_const = -L() * w / e2;
            out.q_energy = w / e4;
            return out;
        }
        // eta(r) as a series in (r - r0), pushed through r(eps) = rho_c / eps
        double rc = rho_c();
        Jet<> r = rc / e;
        Jet<> eta_r = r_profile_.jet(rc / eps0, order + 2) * rc;
        auto push = [&](const Jet<>& f) { return compose(f.truncated(n).coeffs(), r); };
        Jet<> d1 = push(eta_r.derivative()), d2 = push(eta_r.derivative().derivative());
        Jet<> w = 1.0 + d1 * d1;
        Jet<> p_r = -(d1 * d2) / w + 2.0 / r;
        Jet<> s = rc / e2;
        out.p = 2.0 / e - s * p_r;
        out.q_const = -(s * s) * L() * w / (r * r);
        out.q_energy = w / e4;
        return out;
    }

private:
    std::vector<double> r_derivs(double r, int n) const {
        auto d = r_profile_.eval(r, n);
        for (auto& v : d) v *= rho_c();
        return d;
    }
    static void check_r(double r) {
        if (r == 0.0) throw sym::SingularEvaluation("r");
    }
    static void check_eps(double eps) {
        if (eps == 0.0) throw sym::SingularEvaluation("eps");
    }

    Chart chart_;
    EtaProfile r_profile_;
    EtaProfile eps_profile_;
    int l_;
    cplx e_bar_;
    Constants k_;
};

/// The r-chart radial equation for dimensional energy E.
inline RadialODE build_radial(const EtaProfile& profile, int l, cplx energy, Constants k = Constants::natural()) {
    return RadialODE(Chart::r, profile, l, energy / energy_unit(k, profile.rho_c()), k);
}

/// Same equation in the eps chart.
inline RadialODE transform_epsilon(const RadialODE& ode) { return ode.in_chart(Chart::epsilon); }

/// The eps-chart equation directly from a dimensionless energy.
inline RadialODE epsilon_ode(const EtaProfile& profile, int l, cplx e_bar, Constants k = Constants::natural()) {
    return RadialODE(Chart::epsilon, profile, l, e_bar, k);
}

/// Relative difference that does not blow up when both sides are results of
/// cancellation: |a - b| / max(|a|, |b|, scale).
inline double relative_difference(cplx a, cplx b, double scale = 0.0) {
    double d = std::abs(a - b);
    double m = std::max({std::abs(a), std::abs(b), scale});
    return m == 0.0 ? 0.0 : d / m;
}

struct RouteComparison {
    double max_rel_p = 0.0;
    double max_rel_q = 0.0;
    double worst_eps_p = 0.0;
    double worst_eps_q = 0.0;
    double max_rel() const { return std::max(max_rel_p, max_rel_q); }
};

/// Compares the two eps-chart coefficient constructions on [a, b].
inline RouteComparison compare_routes(const RadialODE& ode, double a, double b, int samples = 200) {
    RouteComparison c;
    for (int i = 0; i < samples; ++i) {
        double eps = a + (b - a) * i / (samples - 1);
        double rp = relative_difference(ode.P_chain(eps), ode.P_closed(eps), ode.P_chain_scale(eps));
        double rq = relative_difference(ode.Q_chain(eps), ode.Q_closed(eps));
        if (rp > c.max_rel_p) c.max_rel_p = rp, c.worst_eps_p = eps;
        if (rq > c.max_rel_q) c.max_rel_q = rq, c.worst_eps_q = eps;
    }
    return c;
}

// ---- classification ------------------------------------------------------

enum class PointKind { ordinary, regular, irregular, inconclusive };

inline const char* point_kind_name(PointKind k) {
    switch (k) {
        case PointKind::ordinary: return "ordinary";
        case PointKind::regular: return "regular";
        case PointKind::irregular: return "irregular";
        case PointKind::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Growth exponent of |f(x)| ~ |x - x0|^s approaching x0.
struct LimitProbe {
    double slope = 0.0;
    double slope_near = 0.0;  // fit over the closest half of the samples
    double slope_far = 0.0;
    double last_value = 0.0;  // |f| at the closest sample
    bool zero = false;        // identically zero on the probe
    bool consistent = true;
    bool diverges() const { return !zero && slope < -kSlopeThreshold; }
    bool vanishes() const { return zero || slope > kSlopeThreshold; }
    static constexpr double kSlopeThreshold = 0.01;
};

struct SingularityReport {
    double point = 0.0;
    double limit_P = 0.0;  // |lim (eps - eps_i) P|, +inf when divergent
    double limit_Q = 0.0;  // |lim (eps - eps_i)^2 Q|, +inf when divergent
    LimitProbe probe_P, probe_Q, probe_P_raw, probe_Q_raw;
    PointKind kind = PointKind::inconclusive;
    std::string diagnostics;
};

namespace detail {

inline double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly, std::size_t from,
                        std::size_t to) {
    double n = static_cast<double>(to - from), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = from; i < to; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Envelope max |f| over sub-samples between consecutive probe points, so that
// oscillating coefficients do not fake a limit through their zeros.
template <class F>
LimitProbe probe(F&& f, double x0, int side, int k_min = 4, int k_max = 20, double delta = 0.1, int sub = 16) {
    std::vector<double> lx, ly;
    double last = 0.0;
    bool all_zero = true;
    for (int k = k_min; k <= k_max; ++k) {
        double h = std::ldexp(delta, -k);
        double env = 0.0;
        for (int j = 0; j < sub; ++j) {
            double hh = h * (1.0 + static_cast<double>(j) / sub);
            env = std::max(env, std::abs(f(x0 + side * hh, hh)));
        }
        if (env != 0.0) all_zero = false;
        lx.push_back(std::log(h));
        ly.push_back(std::log(std::max(env, std::numeric_limits<double>::min())));
        last = env;
    }
    LimitProbe p;
    p.last_value = last;
    if (all_zero || last < 1e-300) {
        p.zero = true;
        p.slope = p.slope_near = p.slope_far = std::numeric_limits<double>::infinity();
        return p;
    }
    std::size_t n = lx.size(), half = n / 2;
    p.slope = fit_slope(lx, ly, 0, n);
    p.slope_far = fit_slope(lx, ly, 0, half + 1);
    p.slope_near = fit_slope(lx, ly, half, n);
    bool dn = p.slope_near < -LimitProbe::kSlopeThreshold, df = p.slope_far < -LimitProbe::kSlopeThreshold;
    p.consistent = dn == df;
    return p;
}

}  // namespace detail

/// Classifies eps_i by the two limit criteria (eps - eps_i) P and (eps - eps_i)^2 Q.
/// eps_i = 0 is approached from the right, any other point from the left.
inline SingularityReport classify(const RadialODE& ode, double point) {
    SingularityReport rep;
    rep.point = point;
    int side = point == 0.0 ? 1 : -1;
    auto P = [&](double x) { return cplx(ode.P(x)); };
    auto Q = [&](double x) { return ode.Q(x); };
    rep.probe_P = detail::probe([&](double x, double h) { return h * P(x); }, point, side);
    rep.probe_Q = detail::probe([&](double x, double h) { return h * h * Q(x); }, point, side);
    rep.probe_P_raw = detail::probe([&](double x, double) { return P(x); }, point, side);
    rep.probe_Q_raw = detail::probe([&](double x, double) { return Q(x); }, point, side);
    auto limit = [](const LimitProbe& p) {
        if (p.vanishes()) return 0.0;
        if (p.diverges()) return std::numeric_limits<double>::infinity();
        return p.last_value;
    };
    rep.limit_P = limit(rep.probe_P);
    rep.limit_Q = limit(rep.probe_Q);
    std::ostringstream diag;
    diag.precision(6);
    diag << "slopes (eps-eps_i)P: " << rep.probe_P.slope << " [" << rep.probe_P.slope_far << ", "
         << rep.probe_P.slope_near << "], (eps-eps_i)^2Q: " << rep.probe_Q.slope << " [" << rep.probe_Q.slope_far
         << ", " << rep.probe_Q.slope_near << "]";
    if (!rep.probe_P.consistent || !rep.probe_Q.consistent) {
        rep.kind = PointKind::inconclusive;
        diag << "; exponent drifts between the far and near halves of the probe";
    } else if (rep.probe_P.diverges() || rep.probe_Q.diverges()) {
        rep.kind = PointKind::irregular;
    } else if (!rep.probe_P_raw.diverges() && !rep.probe_Q_raw.diverges()) {
        rep.kind = PointKind::ordinary;
    } else {
        rep.kind = PointKind::regular;
    }
    rep.diagnostics = diag.str();
    return rep;
}

// ---- numeric integration -------------------------------------------------

class IntegrationFailure : public std::runtime_error {
public:
    IntegrationFailure(const std::string& what, double where)
        : std::runtime_error(what + " at eps = " + std::to_string(where)), where_(where) {}
    double location() const { return where_; }

private:
    double where_;
};

struct Solution {
    std::vector<double> x;
    std::vector<cplx> R;
    std::vector<cplx> dR;
    double error_estimate = 0.0;  // max |R(tol) - R(tol/100)| over the samples
    std::size_t steps = 0;
};

namespace detail {

using State = std::array<double, 4>;  // Re R, Im R, Re R', Im R'

inline Solution integrate_once(const RadialODE& ode, cplx R0, cplx dR0, double x0, const std::vector<double>& samples,
                               double tol) {
    namespace odeint = boost::numeric::odeint;
    using stepper_t = odeint::runge_kutta_fehlberg78<State>;
    using controlled_t = odeint::controlled_runge_kutta<stepper_t>;
    controlled_t stepper(controlled_t::error_checker_type(tol, tol));
    auto rhs = [&](const State& s, State& ds, double x) {
        cplx R(s[0], s[1]), dR(s[2], s[3]);
        cplx dd = -ode.P(x) * dR - ode.Q(x) * R;
        ds = {s[2], s[3], dd.real(), dd.imag()};
    };
    State s{R0.real(), R0.imag(), dR0.real(), dR0.imag()};
    Solution out;
    double x = x0;
    double span = samples.empty() ? 0.0 : std::abs(samples.back() - x0);
    double dt = std::copysign(std::max(span, 1e-3) * 1e-3, samples.empty() ? 1.0 : samples.back() - x0);
    for (double target : samples) {
        double dir = target >= x ? 1.0 : -1.0;
        while (std::abs(target - x) > 1e-15 * std::max(1.0, std::abs(x))) {
            if (std::abs(dt) > std::abs(target - x)) dt = target - x;
            dt = std::copysign(std::abs(dt), dir);
            double before = x;
            auto res = stepper.try_step(rhs, s, x, dt);
            if (res == odeint::fail) {
                if (std::abs(dt) < 1e-13 * std::max(1.0, std::abs(x)))
                    throw IntegrationFailure("step size underflow", x);
                continue;
            }
            ++out.steps;
            if (!(std::isfinite(s[0]) && std::isfinite(s[1]) && std::isfinite(s[2]) && std::isfinite(s[3])))
                throw IntegrationFailure("non-finite state", before);
            if (out.steps > 5000000) throw IntegrationFailure("step budget exhausted", x);
        }
        x = target;
        out.x.push_back(target);
        out.R.emplace_back(s[0], s[1]);
        out.dR.emplace_back(s[2], s[3]);
    }
    return out;
}

}  // namespace detail

/// Integrates R'' + P R' + Q R = 0 from x0 with (R, R') = (R0, dR0) and
/// reports R at the sample points (any order; both sides of x0 are
/// integrated outward separately). The error estimate compares with a run at
/// tol / 100.
inline Solution integrate_numeric(const RadialODE& ode, cplx R0, cplx dR0, double x0,
                                  const std::vector<double>& samples, double tol = 1e-12) {
    if (!(tol > 0.0)) throw std::invalid_argument("integration tolerance must be positive");
    for (double t : samples)
        if (x0 == 0.0 || t == 0.0 || (t > 0.0) != (x0 > 0.0))
            throw IntegrationFailure("range touches the singular point", 0.0);
    std::vector<std::size_t> lo, hi;
    for (std::size_t i = 0; i < samples.size(); ++i) (samples[i] < x0 ? lo : hi).push_back(i);
    std::sort(lo.begin(), lo.end(), [&](auto a, auto b) { return samples[a] > samples[b]; });
    std::sort(hi.begin(), hi.end(), [&](auto a, auto b) { return samples[a] < samples[b]; });
    Solution out;
    out.x = samples;
    out.R.resize(samples.size());
    out.dR.resize(samples.size());
    for (const auto* side : {&lo, &hi}) {
        if (side->empty()) continue;
        std::vector<double> pts;
        for (auto i : *side) pts.push_back(samples[i]);
        Solution a = detail::integrate_once(ode, R0, dR0, x0, pts, tol);
        Solution b = detail::integrate_once(ode, R0, dR0, x0, pts, tol * 1e-2);
        for (std::size_t j = 0; j < pts.size(); ++j) {
            out.R[(*side)[j]] = a.R[j];
            out.dR[(*side)[j]] = a.dR[j];
            out.error_estimate = std::max(out.error_estimate, std::abs(a.R[j] - b.R[j]));
        }
        out.steps += a.steps;
    }
    return out;
}

/// Convenience form returning R at a single target.
inline cplx integrate_to(const RadialODE& ode, cplx R0, cplx dR0, double x0, double x1, double tol = 1e-12) {
    return integrate_numeric(ode, R0, dR0, x0, {x1}, tol).R.back();
}

}  // namespace xwin::radial

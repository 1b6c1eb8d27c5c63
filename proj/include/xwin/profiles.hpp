#pragma once

// Window distribution profiles eta. Every profile is a closed-form function of
// its native chart variable (r, eps = rho_c/r, or the window radius rho) and
// is evaluated through jets, so all requested derivatives are exact.
//
// Values are dimensionless: eval() returns eta_bar = eta / rho_c and its
// derivatives with respect to the native chart variable.

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "xwin/jet.hpp"
#include "xwin/symbolic.hpp"

namespace xwin {

enum class Chart { r, epsilon, window };

inline const char* chart_name(Chart c) {
    switch (c) {
        case Chart::r: return "r";
        case Chart::epsilon: return "epsilon";
        case Chart::window: return "rho";
    }
    return "?";
}

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline constexpr int kDefaultDerivativeCap = 10;

namespace variant {

struct Zero {};
struct Constant {
    double value;
};
/// eta_1(rho) = rho^2 + alpha*rho_c*rho + beta*rho_c^2, window interior.
struct InteriorQuadratic {
    double alpha;
    double beta;
};
/// eta(eps) = rho_c * eps * exp(-beta*eps) * sin(alpha/eps).
struct DampedOscillatory {
    double alpha;
    double beta;
};
/// eta_bar(eps) = sum_j c_j (eps - 1)^j.
struct TaylorAtBoundary {
    std::vector<double> coeffs;
};
/// eta_bar(x) = sum_j c_j (x - center)^j in the given chart.
struct Polynomial {
    Chart chart;
    double center;
    std::vector<double> coeffs;
};
/// User closure over jets, eta_bar as a function of the chart variable.
struct Custom {
    Chart chart;
    std::string name;
    std::function<Jet<>(const Jet<>&)> fn;
};

}  // namespace variant

using ProfileVariant = std::variant<variant::Zero, variant::Constant, variant::InteriorQuadratic,
                                    variant::DampedOscillatory, variant::TaylorAtBoundary, variant::Polynomial,
                                    variant::Custom>;

class EtaProfile {
public:
    using JetFn = std::function<Jet<>(const Jet<>&)>;

    EtaProfile(ProfileVariant v, double rho_c = 1.0, int cap = kDefaultDerivativeCap)
        : variant_(std::move(v)), rho_c_(rho_c), cap_(cap) {
        if (!(rho_c_ > 0.0)) throw std::invalid_argument("rho_c must be positive");
        build();
    }

    static EtaProfile zero(double rho_c = 1.0) { return EtaProfile(variant::Zero{}, rho_c); }
    static EtaProfile constant(double v, double rho_c = 1.0) { return EtaProfile(variant::Constant{v}, rho_c); }
    static EtaProfile interior_quadratic(double alpha, double beta, double rho_c = 1.0) {
        return EtaProfile(variant::InteriorQuadratic{alpha, beta}, rho_c);
    }
    static EtaProfile damped_oscillatory(double alpha, double beta, double rho_c = 1.0) {
        return EtaProfile(variant::DampedOscillatory{alpha, beta}, rho_c);
    }
    static EtaProfile taylor_at_boundary(std::vector<double> c, double rho_c = 1.0) {
        return EtaProfile(variant::TaylorAtBoundary{std::move(c)}, rho_c);
    }
    static EtaProfile polynomial(Chart chart, double center, std::vector<double> c, double rho_c = 1.0) {
        return EtaProfile(variant::Polynomial{chart, center, std::move(c)}, rho_c);
    }
    static EtaProfile custom(Chart chart, std::string name, JetFn fn, double rho_c = 1.0) {
        return EtaProfile(variant::Custom{chart, std::move(name), std::move(fn)}, rho_c);
    }

    const ProfileVariant& variant() const { return variant_; }
    Chart chart() const { return chart_; }
    double rho_c() const { return rho_c_; }
    int cap() const { return cap_; }
    /// Same profile with a different derivative-order cap.
    EtaProfile with_cap(int cap) const {
        if (cap < 0) throw std::invalid_argument("negative derivative cap");
        EtaProfile p = *this;
        p.cap_ = cap;
        return p;
    }
    double scale() const { return scale_; }
    bool is_zero() const { return std::holds_alternative<variant::Zero>(variant_) || scale_ == 0.0; }

    /// [eta_bar, eta_bar', ..., eta_bar^(max_order)] at x in the native chart.
    std::vector<double> eval(double x, int max_order) const { return jet(x, max_order).derivatives(); }

    /// Taylor jet of eta_bar around x in the native chart.
    Jet<> jet(double x, int max_order) const {
        if (max_order < 0) throw std::invalid_argument("negative derivative order");
        if (max_order > cap_)
            throw DomainError("derivative order " + std::to_string(max_order) + " exceeds profile cap " +
                              std::to_string(cap_));
        check_domain(x);
        Jet<> out = fn_(Jet<>::variable(x, static_cast<std::size_t>(max_order)));
        if (scale_ != 1.0) out *= scale_;
        return out;
    }

    /// Same profile re-expressed in the eps chart (eps = rho_c / r).
    EtaProfile to_epsilon() const { return rechart(Chart::epsilon); }
    /// Same profile re-expressed in the r chart.
    EtaProfile to_r() const { return rechart(Chart::r); }

    /// Profile multiplied by a constant factor.
    EtaProfile scaled(double s) const {
        EtaProfile p = *this;
        p.scale_ *= s;
        return p;
    }

    /// Profile rescaled so that eta_bar at the window boundary (eps = 1,
    /// r = rho_c) equals `boundary_value`.
    EtaProfile normalized(double boundary_value) const {
        double at = boundary_eval();
        if (at == 0.0) throw DomainError("profile vanishes on the boundary; cannot normalize");
        return scaled(boundary_value / at);
    }
    /// Normalization with the default boundary value (c0 for boundary Taylor data, else 1).
    EtaProfile normalized() const {
        if (auto* t = std::get_if<variant::TaylorAtBoundary>(&variant_); t && !t->coeffs.empty())
            return normalized(t->coeffs[0]);
        return normalized(1.0);
    }

    /// Dimensional r-chart derivatives eta^(k)(r), for symbolic evaluation.
    sym::EtaFn r_source() const {
        EtaProfile rp = chart_ == Chart::r ? *this : to_r();
        return [rp](double r, int max_order) {
            auto d = rp.eval(r, max_order);
            for (auto& v : d) v *= rp.rho_c();
            return d;
        };
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(12);
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, variant::Zero>) os << "zero";
                else if constexpr (std::is_same_v<V, variant::Constant>) os << "constant(" << v.value << ")";
                else if constexpr (std::is_same_v<V, variant::InteriorQuadratic>)
                    os << "interior_quadratic(alpha=" << v.alpha << ", beta=" << v.beta << ")";
                else if constexpr (std::is_same_v<V, variant::DampedOscillatory>)
                    os << "damped_oscillatory(alpha=" << v.alpha << ", beta=" << v.beta << ")";
                else if constexpr (std::is_same_v<V, variant::TaylorAtBoundary>) {
                    os << "taylor_at_boundary(";
                    for (std::size_t i = 0; i < v.coeffs.size(); ++i) os << (i ? ", " : "") << v.coeffs[i];
                    os << ")";
                } else if constexpr (std::is_same_v<V, variant::Polynomial>) {
                    os << "polynomial[" << chart_name(v.chart) << ", center=" << v.center << "](";
                    for (std::size_t i = 0; i < v.coeffs.size(); ++i) os << (i ? ", " : "") << v.coeffs[i];
                    os << ")";
                } else
                    os << "custom[" << chart_name(v.chart) << "](" << v.name << ")";
            },
            variant_);
        if (scale_ != 1.0) os << "*" << scale_;
        os << " rho_c=" << rho_c_;
        if (rechart_) os << " in " << chart_name(chart_);
        return os.str();
    }

private:
    static Jet<> poly(const std::vector<double>& c, const Jet<>& t) {
        Jet<> out(t.order());
        for (std::size_t j = c.size(); j-- > 0;) {
            out = out * t;
            out += c[j];
        }
        return out;
    }

    void build() {
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, variant::Zero>) {
                    chart_ = Chart::epsilon;
                    fn_ = [](const Jet<>& x) { return Jet<>(x.order()); };
                } else if constexpr (std::is_same_v<V, variant::Constant>) {
                    chart_ = Chart::epsilon;
                    double c = v.value;
                    fn_ = [c](const Jet<>& x) { return Jet<>(x.order(), c); };
                } else if constexpr (std::is_same_v<V, variant::InteriorQuadratic>) {
                    // in units of rho_c: eta_1/rho_c as a function of rho
                    chart_ = Chart::window;
                    double a = v.alpha, b = v.beta, rc = rho_c_;
                    fn_ = [a, b, rc](const Jet<>& rho) { return (rho * rho + a * rc * rho) / rc + b * rc; };
                } else if constexpr (std::is_same_v<V, variant::DampedOscillatory>) {
                    chart_ = Chart::epsilon;
                    double a = v.alpha, b = v.beta;
                    fn_ = [a, b](const Jet<>& e) { return e * exp(-b * e) * sin(a / e); };
                    min_exclusive_ = 0.0;
                } else if constexpr (std::is_same_v<V, variant::TaylorAtBoundary>) {
                    chart_ = Chart::epsilon;
                    auto c = v.coeffs;
                    fn_ = [c](const Jet<>& e) { return poly(c, e - 1.0); };
                } else if constexpr (std::is_same_v<V, variant::Polynomial>) {
                    chart_ = v.chart;
                    auto c = v.coeffs;
                    double x0 = v.center;
                    fn_ = [c, x0](const Jet<>& x) { return poly(c, x - x0); };
                } else {
                    chart_ = v.chart;
                    fn_ = v.fn;
                }
            },
            variant_);
    }

    void check_domain(double x) const {
        if (!std::isfinite(x)) throw DomainError("non-finite chart value");
        if (min_exclusive_ && !(x > *min_exclusive_)) {
            std::ostringstream os;
            os << "profile " << describe() << " is undefined at " << chart_name(chart_) << " = " << x;
            if (x == 0.0 && chart_ == Chart::epsilon) os << " (fundamental singularity at eps = 0)";
            throw DomainError(os.str());
        }
    }

    double boundary_eval() const {
        double x = chart_ == Chart::r ? rho_c_ : 1.0;
        return eval(x, 0)[0];
    }

    EtaProfile rechart(Chart target) const {
        if (target == chart_) return *this;
        if (chart_ == Chart::window || target == Chart::window)
            throw DomainError("window-interior profiles have no r / eps chart");
        EtaProfile p = *this;
        JetFn inner = fn_;
        double rc = rho_c_;
        double s = scale_;
        // eps = rho_c / r and r = rho_c / eps are the same map
        p.fn_ = [inner, rc, s](const Jet<>& x) {
            Jet<> y = rc / x;
            Jet<> out = inner(y);
            return s == 1.0 ? out : out * s;
        };
        p.scale_ = 1.0;
        p.chart_ = target;
        p.min_exclusive_ = 0.0;
        p.rechart_ = true;
        return p;
    }

    ProfileVariant variant_;
    double rho_c_;
    int cap_;
    Chart chart_ = Chart::epsilon;
    JetFn fn_;
    double scale_ = 1.0;
    std::optional<double> min_exclusive_;
    bool rechart_ = false;
};

}  // namespace xwin

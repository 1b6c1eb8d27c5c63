#pragma once

// Phase-space calculus on top of the exact algebra: Poisson brackets, strong
// substitution of the solved window constraints, and numeric evaluation.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "xwin/expr.hpp"

namespace xwin::sym {

/// Canonical Poisson bracket sum_i (da/dq_i db/dp_i - da/dp_i db/dq_i).
inline Expr poisson_bracket(const Expr& a, const Expr& b, int cap = kDefaultMaxEtaOrder) {
    Expr out;
    for (int pair = 1; pair <= 5; ++pair) {
        Var q = coordinate(pair);
        Var p = momentum(pair);
        Expr da_dq = differentiate(a, q, cap);
        Expr db_dp = differentiate(b, p, cap);
        if (!da_dq.is_zero() && !db_dp.is_zero()) out += da_dq * db_dp;
        Expr da_dp = differentiate(a, p, cap);
        Expr db_dq = differentiate(b, q, cap);
        if (!da_dp.is_zero() && !db_dq.is_zero()) out -= da_dp * db_dq;
    }
    return out;
}

/// Replaces every occurrence of one canonical variable.
inline Expr substitute(const Expr& e, Var v, const Expr& value) {
    return substitute(e, [&](const Atom& a) -> std::optional<Expr> {
        if (a.kind == AtomKind::var && a.index == static_cast<int>(v)) return value;
        return std::nullopt;
    });
}

/// Imposes the window constraints strongly:
///   rho -> s*eta(r), sigma -> pi/4, p_sigma -> 0, p_rho -> s*eta'(r)*p_r
/// where s is the window scale (sqrt2 for the literal constraint form).
inline Expr substitute_strong(const Expr& e, const Expr& scale = sqrt2()) {
    const Expr rho = scale * eta(0);
    const Expr sigma = pi() * Expr(Rational{1, 4});
    const Expr p_rho = scale * eta(1) * var(Var::p_r);
    return substitute(e, [&](const Atom& a) -> std::optional<Expr> {
        if (a.kind != AtomKind::var) return std::nullopt;
        switch (static_cast<Var>(a.index)) {
            case Var::rho: return rho;
            case Var::sigma: return sigma;
            case Var::p_sigma: return Expr{};
            case Var::p_rho: return p_rho;
            default: return std::nullopt;
        }
    });
}

// ---- numeric evaluation -------------------------------------------------

class SingularEvaluation : public SymbolicError {
public:
    explicit SingularEvaluation(std::string subexpr)
        : SymbolicError("singular evaluation: " + subexpr + " vanishes"), subexpr_(std::move(subexpr)) {}
    const std::string& subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

class UnboundSymbol : public SymbolicError {
public:
    using SymbolicError::SymbolicError;
};

/// Dimensional derivatives [eta(r), eta'(r), ..., eta^(max_order)(r)].
using EtaFn = std::function<std::vector<double>(double r, int max_order)>;

/// Values for the free symbols of an expression.
struct EvalPoint {
    std::array<std::optional<double>, kVarCount> vars{};
    std::array<std::optional<double>, kParamNames.size()> params{};
    EtaFn eta;

    EvalPoint& set(Var v, double x) {
        vars[static_cast<int>(v)] = x;
        return *this;
    }
    EvalPoint& set(Param p, double x) {
        params[static_cast<int>(p)] = x;
        return *this;
    }
};

namespace detail {

class Evaluator {
public:
    explicit Evaluator(const EvalPoint& pt) : pt_(pt) {}

    std::complex<double> expr(const Expr& e) {
        std::complex<double> n = poly(e.numerator());
        for (const auto& f : e.denominator()) {
            std::complex<double> d = poly(f.base);
            if (d == 0.0) throw SingularEvaluation(detail::poly_string(f.base));
            n /= std::pow(d, f.exp);
        }
        return n;
    }

private:
    std::complex<double> poly(const Poly& p) {
        std::complex<double> acc = 0.0;
        for (const auto& [m, c] : p.terms()) {
            std::complex<double> t = c.to_double();
            for (const auto& [a, k] : m) {
                std::complex<double> v = atom(a);
                if (k < 0 && v == 0.0) throw SingularEvaluation(detail::atom_name(a));
                t *= k == 1 ? v : std::pow(v, k);
            }
            acc += t;
        }
        return acc;
    }

    std::complex<double> atom(const Atom& a) {
        switch (a.kind) {
            case AtomKind::named:
                switch (static_cast<Named>(a.index)) {
                    case Named::pi: return std::numbers::pi;
                    case Named::sqrt2: return std::numbers::sqrt2;
                    case Named::imag: return {0.0, 1.0};
                }
                break;
            case AtomKind::param: {
                const auto& v = pt_.params[a.index];
                if (!v) throw UnboundSymbol("unbound parameter " + std::string(kParamNames[a.index]));
                return *v;
            }
            case AtomKind::var: {
                const auto& v = pt_.vars[a.index];
                if (!v) throw UnboundSymbol("unbound variable " + std::string(kCanonicalVars[a.index].name));
                return *v;
            }
            case AtomKind::eta: {
                if (!pt_.eta) throw UnboundSymbol("no eta profile supplied");
                const auto& r = pt_.vars[static_cast<int>(Var::r)];
                if (!r) throw UnboundSymbol("unbound variable r (needed by eta)");
                if (static_cast<int>(eta_cache_.size()) <= a.index) eta_cache_ = pt_.eta(*r, std::max(a.index, 3));
                return eta_cache_.at(a.index);
            }
            case AtomKind::sin: return std::sin(expr(*a.arg));
            case AtomKind::cos: return std::cos(expr(*a.arg));
        }
        return 0.0;
    }

    const EvalPoint& pt_;
    std::vector<double> eta_cache_;
};

}  // namespace detail

/// Floating evaluation of an expression at a point. Throws UnboundSymbol for
/// missing bindings and SingularEvaluation (naming the vanishing
/// subexpression) on division by zero.
inline std::complex<double> eval_numeric(const Expr& e, const EvalPoint& pt) {
    return detail::Evaluator(pt).expr(e);
}

/// Planck function hbar(r) = hbar / (1 + eta'(r)^2).
inline Expr planck_function() { return param(Param::hbar) * (Expr(1) + eta(1).pow(2)).inverse(); }

}  // namespace xwin::sym

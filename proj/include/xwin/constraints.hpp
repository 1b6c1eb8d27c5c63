#pragma once

// Second-class constraint system of a particle in 3d space with a 2d extra
// window: consistency, linearisation, the constraint bracket matrix Delta,
// the Dirac structure Omega and the derived commutator / quantisation data.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "xwin/profiles.hpp"
#include "xwin/symbolic.hpp"
#include "xwin/units.hpp"

namespace xwin::constraints {

using sym::Expr;
using sym::Param;
using sym::Var;

template <std::size_t N>
using ExprMatrix = std::array<std::array<Expr, N>, N>;

/// Coefficient s of the solved window radius rho = s*eta(r).
///   sqrt2: the literal solved constraint (both polar components equal eta).
///   unit:  rho = eta(r); the normalisation behind hbar(r) = hbar/(1+eta'^2)
///          and rho_hat = eta(r).
enum class WindowScale { sqrt2, unit };

inline Expr scale_expr(WindowScale s) { return s == WindowScale::sqrt2 ? sym::sqrt2() : Expr(1); }
inline const char* scale_name(WindowScale s) { return s == WindowScale::sqrt2 ? "sqrt2" : "unit"; }

class NotSecondClass : public sym::SymbolicError {
public:
    using sym::SymbolicError::SymbolicError;
};

inline Expr hamiltonian_3d() {
    using namespace sym;
    Expr r2 = var(Var::r).pow(2);
    return (var(Var::p_r).pow(2) + var(Var::p_theta).pow(2) / r2 +
            var(Var::p_phi).pow(2) / (r2 * sin(var(Var::theta)).pow(2))) /
           (Expr(2) * param(Param::m));
}

inline Expr hamiltonian_2d() {
    using namespace sym;
    return (var(Var::p_rho).pow(2) + var(Var::p_sigma).pow(2) / var(Var::rho).pow(2)) / (Expr(2) * param(Param::m));
}

/// Polar (unsolved) primaries rho cos(sigma) - eta, rho sin(sigma) - eta.
inline std::array<Expr, 2> polar_primaries() {
    using namespace sym;
    Expr rho = var(Var::rho), sigma = var(Var::sigma);
    return {rho * cos(sigma) - eta(0), rho * sin(sigma) - eta(0)};
}

struct ConstraintSet {
    std::array<Expr, 2> primaries;    // rho - s*eta(r), sigma - pi/4 + 2 pi z
    std::array<Expr, 2> secondaries;  // p_sigma, p_rho - s*eta'(r)*p_r
    Expr hamiltonian_3d;
    Expr hamiltonian_2d;
    int multiplier_count = 2;
    WindowScale scale = WindowScale::sqrt2;
    int winding = 0;

    static ConstraintSet build(WindowScale scale = WindowScale::sqrt2, int winding = 0) {
        using namespace sym;
        Expr s = scale_expr(scale);
        ConstraintSet c;
        c.primaries = {var(Var::rho) - s * eta(0),
                       var(Var::sigma) - pi() * Expr(Rational{1, 4}) + Expr(2 * winding) * pi()};
        c.secondaries = {var(Var::p_sigma), var(Var::p_rho) - s * eta(1) * var(Var::p_r)};
        c.hamiltonian_3d = constraints::hamiltonian_3d();
        c.hamiltonian_2d = constraints::hamiltonian_2d();
        c.scale = scale;
        c.winding = winding;
        return c;
    }

    /// H_T = H3 + H2 + lambda_i phi_i.
    Expr total_hamiltonian() const {
        using namespace sym;
        return hamiltonian_3d + hamiltonian_2d + param(Param::lambda1) * primaries[0] +
               param(Param::lambda2) * primaries[1];
    }

    /// phi1, phi2, psi1, psi2 in bracket-matrix order.
    std::array<Expr, 4> all() const { return {primaries[0], primaries[1], secondaries[0], secondaries[1]}; }

    Expr strong(const Expr& e) const { return sym::substitute_strong(e, scale_expr(scale)); }
};

/// {phi_i, H_T} for the given primaries.
inline std::array<Expr, 2> consistency_step(const std::array<Expr, 2>& primaries, const Expr& total_hamiltonian) {
    return {sym::poisson_bracket(primaries[0], total_hamiltonian),
            sym::poisson_bracket(primaries[1], total_hamiltonian)};
}

inline std::array<Expr, 2> consistency_step(const ConstraintSet& set) {
    return consistency_step(set.primaries, set.total_hamiltonian());
}

struct Linearization {
    std::array<Expr, 2> secondaries;  // p_sigma - p_sigma*, p_rho - p_rho*
    std::vector<std::string> log;
};

/// Reduces raw secondaries to constraints linear in the window momenta:
/// imposes the coordinate constraints (rho, sigma), solves the two resulting
/// equations for (p_rho, p_sigma) and returns p_sigma - p_sigma*,
/// p_rho - p_rho*. Terms dropped by the coordinate substitution are logged.
inline Linearization linearize_secondaries(const std::array<Expr, 2>& raw, WindowScale scale) {
    using namespace sym;
    Expr s = scale_expr(scale);
    Expr rho_val = s * eta(0);
    Expr sigma_val = pi() * Expr(Rational{1, 4});
    Linearization out;
    std::array<Expr, 2> a, b, c;
    for (int i = 0; i < 2; ++i) {
        Expr reduced = substitute(substitute(raw[i], Var::rho, rho_val), Var::sigma, sigma_val);
        Expr dropped = raw[i] - reduced;
        if (!dropped.is_zero())
            out.log.push_back("secondary " + std::to_string(i + 1) + ": dropped terms proportional to primaries: " +
                              to_string(dropped));
        a[i] = differentiate(reduced, Var::p_rho);
        b[i] = differentiate(reduced, Var::p_sigma);
        if (!differentiate(a[i], Var::p_rho).is_zero() || !differentiate(b[i], Var::p_sigma).is_zero() ||
            !differentiate(a[i], Var::p_sigma).is_zero())
            throw SymbolicError("secondary constraint is not linear in the window momenta");
        c[i] = substitute(substitute(reduced, Var::p_rho, Expr{}), Var::p_sigma, Expr{});
    }
    Expr det = a[0] * b[1] - a[1] * b[0];
    if (det.is_zero()) throw SymbolicError("secondaries do not determine the window momenta");
    Expr p_rho_star = (b[0] * c[1] - b[1] * c[0]) / det;
    Expr p_sigma_star = (a[1] * c[0] - a[0] * c[1]) / det;
    out.log.push_back("solved: p_rho = " + to_string(p_rho_star) + ", p_sigma = " + to_string(p_sigma_star));
    out.secondaries = {var(Var::p_sigma) - p_sigma_star, var(Var::p_rho) - p_rho_star};
    return out;
}

// ---- matrices ------------------------------------------------------------

template <std::size_t N>
Expr determinant(const ExprMatrix<N>& m) {
    if constexpr (N == 1) {
        return m[0][0];
    } else {
        Expr det;
        for (std::size_t j = 0; j < N; ++j) {
            if (m[0][j].is_zero()) continue;
            ExprMatrix<N - 1> minor;
            for (std::size_t r = 1; r < N; ++r)
                for (std::size_t c = 0, k = 0; c < N; ++c)
                    if (c != j) minor[r - 1][k++] = m[r][c];
            Expr term = m[0][j] * determinant<N - 1>(minor);
            det = (j % 2 == 0) ? det + term : det - term;
        }
        return det;
    }
}

/// Inverse through the adjugate: inv = adj(m) / det(m).
template <std::size_t N>
ExprMatrix<N> adjugate_inverse(const ExprMatrix<N>& m, const Expr& det) {
    ExprMatrix<N> inv;
    Expr inv_det = det.inverse();
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            ExprMatrix<N - 1> minor;
            for (std::size_t r = 0, rr = 0; r < N; ++r) {
                if (r == j) continue;
                for (std::size_t c = 0, cc = 0; c < N; ++c)
                    if (c != i) minor[rr][cc++] = m[r][c];
                ++rr;
            }
            Expr cof = determinant<N - 1>(minor);
            if ((i + j) % 2 == 1) cof = -cof;
            inv[i][j] = cof * inv_det;
        }
    return inv;
}

/// Delta_ab = {chi_a, chi_b}, strong-substituted.
inline ExprMatrix<4> build_delta(const ConstraintSet& set) {
    auto chi = set.all();
    ExprMatrix<4> d;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            d[a][b] = set.strong(sym::poisson_bracket(chi[a], chi[b]));
            d[b][a] = -d[a][b];
        }
    if (determinant<4>(d).is_zero()) throw NotSecondClass("constraint bracket matrix is singular: not second-class");
    return d;
}

struct DiracStructure {
    ConstraintSet set;
    ExprMatrix<4> delta;
    Expr delta_det;
    ExprMatrix<4> delta_inverse;
    ExprMatrix<sym::kVarCount> omega;

    static DiracStructure build(const ConstraintSet& set);
};

/// Dirac bracket {A,B} - {A,chi_a} Delta^-1_ab {chi_b,B}, strong-substituted.
inline Expr dirac_bracket(const Expr& a, const Expr& b, const ConstraintSet& set, const ExprMatrix<4>& delta_inverse) {
    auto chi = set.all();
    Expr out = sym::poisson_bracket(a, b);
    std::array<Expr, 4> left, right;
    for (int k = 0; k < 4; ++k) {
        left[k] = sym::poisson_bracket(a, chi[k]);
        right[k] = sym::poisson_bracket(chi[k], b);
    }
    for (int i = 0; i < 4; ++i) {
        if (left[i].is_zero()) continue;
        for (int j = 0; j < 4; ++j) {
            if (right[j].is_zero() || delta_inverse[i][j].is_zero()) continue;
            out -= left[i] * delta_inverse[i][j] * right[j];
        }
    }
    return set.strong(out);
}

inline Expr dirac_bracket(const Expr& a, const Expr& b, const DiracStructure& s) {
    return dirac_bracket(a, b, s.set, s.delta_inverse);
}

inline Expr dirac_bracket(Var a, Var b, const DiracStructure& s) { return s.omega[static_cast<int>(a)][static_cast<int>(b)]; }

inline DiracStructure DiracStructure::build(const ConstraintSet& set) {
    DiracStructure s;
    s.set = set;
    s.delta = build_delta(set);
    s.delta_det = determinant<4>(s.delta);
    s.delta_inverse = adjugate_inverse<4>(s.delta, s.delta_det);
    for (auto& row : s.delta_inverse)
        for (auto& e : row) e = set.strong(e);
    for (int i = 0; i < sym::kVarCount; ++i) {
        s.omega[i][i] = Expr{};
        for (int j = i + 1; j < sym::kVarCount; ++j) {
            s.omega[i][j] = dirac_bracket(sym::var(static_cast<Var>(i)), sym::var(static_cast<Var>(j)), set,
                                          s.delta_inverse);
            s.omega[j][i] = -s.omega[i][j];
        }
    }
    return s;
}

/// Window factor 1 + s^2 eta'^2 of the reduced structure (Delta_{phi1,psi2}).
inline Expr window_factor(WindowScale scale) {
    Expr s = scale_expr(scale);
    return Expr(1) + s * s * sym::eta(1).pow(2);
}

/// Planck function hbar / (1 + s^2 eta'^2) of the given structure.
inline Expr planck_function(WindowScale scale) { return sym::param(Param::hbar) * window_factor(scale).inverse(); }

struct CommutatorEntry {
    Var a;
    Var b;
    Expr bracket;      // Dirac bracket
    Expr commutator;   // i*hbar*bracket
    Expr planck_coef;  // X in [a,b] = i*hbar(r)*X
    bool listed;       // appears in the reference commutator tables
};

/// All 45 commutators [z_I, z_J] = i*hbar*{z_I, z_J}_D. The nine listed pairs
/// come first in their listed order, then the rest in z_I order.
inline std::vector<CommutatorEntry> commutator_table(const DiracStructure& s) {
    using namespace sym;
    static constexpr std::array<std::pair<Var, Var>, 9> listed{{
        {Var::r, Var::p_r},
        {Var::theta, Var::p_theta},
        {Var::phi, Var::p_phi},
        {Var::p_r, Var::rho},
        {Var::p_r, Var::p_rho},
        {Var::p_r, Var::p_sigma},
        {Var::p_rho, Var::rho},
        {Var::p_rho, Var::p_sigma},
        {Var::p_rho, Var::r},
    }};
    Expr ih = imag() * param(Param::hbar);
    Expr factor = window_factor(s.set.scale);
    auto make = [&](Var a, Var b, bool in_table) {
        Expr br = dirac_bracket(a, b, s);
        return CommutatorEntry{a, b, br, ih * br, br * factor, in_table};
    };
    std::vector<CommutatorEntry> out;
    for (auto [a, b] : listed) out.push_back(make(a, b, true));
    for (int i = 0; i < kVarCount; ++i)
        for (int j = i + 1; j < kVarCount; ++j) {
            Var a = static_cast<Var>(i), b = static_cast<Var>(j);
            bool seen = false;
            for (auto [x, y] : listed)
                if ((x == a && y == b) || (x == b && y == a)) seen = true;
            if (!seen) out.push_back(make(a, b, false));
        }
    return out;
}

/// Symbolic form of the O(hbar^2) term in [p_r, p_rho]:
///   1/2 hbar(r)^2 (eta''' - 2 eta' eta''^2 / (1 + eta'^2)).
inline Expr anomaly_expr() {
    using namespace sym;
    Expr w = Expr(1) + eta(1).pow(2);
    Expr h = sym::planck_function();
    return Expr(Rational{1, 2}) * h * h * (eta(3) - Expr(2) * eta(1) * eta(2).pow(2) / w);
}

/// Direct evaluation of the anomaly term at r for a profile.
inline double anomaly_term(const EtaProfile& profile, double r, double hbar = 1.0) {
    auto d = profile.r_source()(r, 3);
    double w = 1.0 + d[1] * d[1];
    double h = hbar / w;
    return 0.5 * h * h * (d[3] - 2.0 * d[1] * d[2] * d[2] / w);
}

/// Mass quantum z*hbar/(2 rho_c). In SI the momentum-like value is divided by c;
/// this is a documented reading of the reference formula, which has no c.
inline double mass_quantum(long z, double rho_c, const Constants& k = Constants::natural()) {
    if (!(rho_c > 0.0)) throw std::invalid_argument("rho_c must be positive");
    double q = 0.5 * static_cast<double>(z) * k.hbar / rho_c;
    return k.units == Units::si ? q / k.c : q;
}

enum class RepKind { differential, multiplicative, c_number, null };

struct OperatorRep {
    std::string name;
    RepKind kind;
    Expr coefficient;  // differential: prefactor of d/dvar; multiplicative / c-number: the value
    std::optional<Var> wrt;
};

/// Operator representation of the reduced phase space in position basis.
inline std::vector<OperatorRep> representation_report(const DiracStructure& s) {
    using namespace sym;
    Expr minus_i = -imag();
    Expr hr = planck_function(s.set.scale);
    Expr hbar = param(Param::hbar);
    Expr sigma = pi() * Expr(Rational{1, 4}) + Expr(2 * s.set.winding) * pi();
    return {
        {"p_r", RepKind::differential, minus_i * hr, Var::r},
        {"p_theta", RepKind::differential, minus_i * hbar, Var::theta},
        {"p_phi", RepKind::differential, minus_i * hbar, Var::phi},
        {"p_rho", RepKind::differential, minus_i * hr, Var::rho},
        {"rho", RepKind::multiplicative, scale_expr(s.set.scale) * eta(0), std::nullopt},
        {"sigma", RepKind::c_number, sigma, std::nullopt},
        {"p_sigma", RepKind::null, Expr{}, std::nullopt},
    };
}

}  // namespace xwin::constraints

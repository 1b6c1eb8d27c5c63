#pragma once

// Series solutions around the window boundary eps = 1 and the energy spectrum
// that follows from truncating the coefficient recurrence.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "xwin/radial.hpp"
#include "xwin/units.hpp"

namespace xwin::spectrum {

using cplx = std::complex<double>;

class SpectrumError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Recurrence pivot vanishes with a nonzero right-hand side: the second
/// solution needs a logarithm, which is not implemented.
class ResonanceError : public SpectrumError {
public:
    ResonanceError(int k, int index)
        : SpectrumError("logarithmic Frobenius case: pivot vanishes at lambda = " + std::to_string(index) +
                        " for k = " + std::to_string(k)),
          index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

class StructuralDegeneracy : public SpectrumError {
public:
    using SpectrumError::SpectrumError;
};

class NotRegular : public SpectrumError {
public:
    NotRegular(const radial::SingularityReport& rep)
        : SpectrumError(std::string("eps = ") + std::to_string(rep.point) + " is " +
                        radial::point_kind_name(rep.kind) + ": " + rep.diagnostics),
          report_(rep) {}
    const radial::SingularityReport& report() const { return report_; }

private:
    radial::SingularityReport report_;
};

// ---- Taylor data ---------------------------------------------------------

/// Taylor coefficients at eps = 1 of P (p) and of Q = A + E_bar B.
struct TaylorCoeffs {
    std::vector<cplx> p;
    std::vector<cplx> A;
    std::vector<cplx> B;
    int l = 0;
    double eta_prime = 0.0;  // eta_bar'(1) in the eps chart

    // closed-form kappa route: kappa = -(1 + eps^4 eta_bar'^2) / eps^4, raw derivatives at 1
    std::vector<double> kappa;

    int order() const { return static_cast<int>(p.size()) - 1; }
    double L() const { return static_cast<double>(l) * (l + 1); }
    cplx q(int n, cplx e) const { return n < 0 || n > order() ? cplx{} : A[n] + e * B[n]; }

    /// q_n from the reference kappa formula:
    ///   kappa^(n)(L - E) + n L (kappa^(n-1) + (n-1) kappa^(n-2)).
    cplx q_kappa_reference(int n, cplx e) const { return q_kappa(n, e, 1.0); }
    /// Leibniz expansion of kappa (eps^2 L - E): the kappa^(n-1) term carries a 2.
    cplx q_kappa_leibniz(int n, cplx e) const { return q_kappa(n, e, 2.0); }

private:
    cplx q_kappa(int n, cplx e, double first) const {
        auto k = [&](int j) { return j < 0 ? 0.0 : kappa.at(j); };
        return k(n) * (L() - e) + n * L() * (first * k(n - 1) + (n - 1) * k(n - 2));
    }
};

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// Taylor coefficients of the eps-chart equation at eps = 1 through order N
/// (chain-rule coefficients), plus the kappa derivatives for the closed form.
inline TaylorCoeffs taylor_coeffs(const radial::RadialODE& ode, int N) {
    if (N < 0) throw std::invalid_argument("negative truncation order");
    int cap = ode.eps_profile().cap();
    if (N + 2 > cap)
        throw DomainError("Taylor order " + std::to_string(N) + " needs eta derivatives of order " +
                          std::to_string(N + 2) + " beyond the profile cap " + std::to_string(cap));
    auto jets = ode.jets(1.0, N, radial::Route::chain_rule);
    TaylorCoeffs t;
    t.l = ode.l();
    for (int n = 0; n <= N; ++n) {
        t.p.emplace_back(jets.p[n]);
        t.A.emplace_back(jets.q_const[n]);
        t.B.emplace_back(jets.q_energy[n]);
    }
    Jet<> eta = ode.eps_profile().jet(1.0, N + 1);
    Jet<> d1 = eta.derivative();
    Jet<> e = Jet<>::variable(1.0, static_cast<std::size_t>(N));
    Jet<> e4 = e * e * e * e;
    t.kappa = (-(1.0 + e4 * d1 * d1) / e4).derivatives();
    t.eta_prime = d1[0];
    return t;
}

/// Relation between the closed kappa form and the Taylor coefficients: the
/// measured ratio q_kappa / q at a reference energy for each n.
struct NormalizationReport {
    std::vector<cplx> ratio_reference;   // q_kappa_reference(n) / q(n)
    std::vector<cplx> ratio_leibniz;   // q_kappa_leibniz(n) / q(n)
    std::vector<double> factorials;    // n!
    std::vector<double> rel_dev_reference;  // |ratio_reference / n! - 1|
    std::vector<double> rel_dev_leibniz;
    cplx reference_energy;
};

inline NormalizationReport normalization_report(const TaylorCoeffs& t, cplx e_ref) {
    NormalizationReport r;
    r.reference_energy = e_ref;
    for (int n = 0; n <= t.order(); ++n) {
        cplx q = t.q(n, e_ref);
        double f = factorial(n);
        cplx rp = t.q_kappa_reference(n, e_ref) / q, rl = t.q_kappa_leibniz(n, e_ref) / q;
        r.ratio_reference.push_back(rp);
        r.ratio_leibniz.push_back(rl);
        r.factorials.push_back(f);
        r.rel_dev_reference.push_back(std::abs(rp / f - 1.0));
        r.rel_dev_leibniz.push_back(std::abs(rl / f - 1.0));
    }
    return r;
}

// ---- exponents and recurrence -------------------------------------------

struct Exponents {
    cplx k1, k2;
    bool double_root = false;
    bool integer_gap = false;  // exponents differ by a positive integer
};

/// Roots of k(k-1) + p0 k + q0 = 0, larger real part first.
inline Exponents indicial_exponents(cplx p0, cplx q0) {
    cplx b = p0 - 1.0;
    cplx disc = std::sqrt(b * b - 4.0 * q0);
    Exponents e{(-b + disc) / 2.0, (-b - disc) / 2.0};
    if (e.k1.real() < e.k2.real()) std::swap(e.k1, e.k2);
    e.double_root = std::abs(disc) < 1e-12;
    double gap = (e.k1 - e.k2).real();
    e.integer_gap = !e.double_root && std::abs((e.k1 - e.k2).imag()) < 1e-12 && std::abs(gap - std::round(gap)) < 1e-12;
    return e;
}

/// Exponents of the eps-chart equation at a point, after classifying it.
inline Exponents indicial_exponents(const radial::RadialODE& ode, double point = 1.0) {
    auto rep = radial::classify(ode, point);
    if (rep.kind == radial::PointKind::irregular || rep.kind == radial::PointKind::inconclusive)
        throw NotRegular(rep);
    // both limits are finite; they are zero at an ordinary point
    return indicial_exponents(cplx(rep.limit_P), cplx(rep.limit_Q));
}

/// Coefficients a_0..a_N of R = sum a_m (eps - 1)^(m + k) from
///   (m+k)(m+k-1) a_m + sum_j p_j (m-1-j+k) a_{m-1-j} + sum_j q_j a_{m-2-j} = 0.
/// For k = 0 the m = 1 pivot vanishes and a_1 is free (default 0).
inline std::vector<cplx> frobenius_coeffs(const TaylorCoeffs& t, int k, cplx e_bar, cplx a0, int N,
                                          std::optional<cplx> a1 = std::nullopt) {
    if (a0 == 0.0 && !(k == 0 && a1 && *a1 != 0.0)) throw std::invalid_argument("a0 must be nonzero");
    std::vector<cplx> a(static_cast<std::size_t>(N) + 1, 0.0);
    a[0] = a0;
    auto P = [&](int j) { return j <= t.order() ? t.p[j] : cplx{}; };
    for (int m = 1; m <= N; ++m) {
        cplx rhs = 0.0;
        for (int j = 0; j <= m - 1; ++j) rhs += P(j) * static_cast<double>(m - 1 - j + k) * a[m - 1 - j];
        for (int j = 0; j <= m - 2; ++j) rhs += t.q(j, e_bar) * a[m - 2 - j];
        double pivot = static_cast<double>((m + k) * (m + k - 1));
        if (pivot == 0.0) {
            if (std::abs(rhs) > 1e-14 * std::max(1.0, std::abs(a0))) throw ResonanceError(k, m);
            a[m] = (m == 1 && a1) ? *a1 : 0.0;
            continue;
        }
        a[m] = -rhs / pivot;
    }
    if (t.order() < N - 2)
        throw DomainError("Taylor data of order " + std::to_string(t.order()) + " cannot feed " + std::to_string(N) +
                          " series coefficients");
    return a;
}

/// Partial sum and its derivative at eps.
inline std::pair<cplx, cplx> series_eval(const std::vector<cplx>& a, int k, double eps) {
    double t = eps - 1.0;
    cplx R = 0.0, dR = 0.0;
    for (std::size_t m = a.size(); m-- > 0;) {
        double e = static_cast<double>(m) + k;
        R += a[m] * std::pow(t, e);
        if (e != 0.0) dR += a[m] * e * std::pow(t, e - 1.0);
    }
    return {R, dR};
}

// ---- determinant condition ----------------------------------------------

using CMatrix = Eigen::MatrixXcd;

/// Truncated homogeneous system on (a_0..a_n) for exponent k.
///   k = 0: equations m = 2..n+2 (a_{n+1}, a_{n+2} dropped)
///   k = 1: equations m = 1..n+1 (a_{n+1} dropped)
inline CMatrix truncated_system(const TaylorCoeffs& t, int k, int n, cplx e_bar) {
    if (k != 0 && k != 1) throw std::invalid_argument("exponent must be 0 or 1");
    CMatrix M = CMatrix::Zero(n + 1, n + 1);
    auto P = [&](int j) { return j >= 0 && j <= t.order() ? t.p[j] : cplx{}; };
    for (int row = 0; row <= n; ++row) {
        int m = k == 0 ? row + 2 : row + 1;
        for (int c = 0; c <= n; ++c) {
            cplx v = P(m - 1 - c) * static_cast<double>(c + k) + t.q(m - 2 - c, e_bar);
            if (c == m) v += static_cast<double>((m + k) * (m + k - 1));
            M(row, c) = v;
        }
    }
    return M;
}

/// Leftover equations beyond the square system, as rows acting on (a_0..a_n).
inline CMatrix overflow_rows(const TaylorCoeffs& t, int k, int n, cplx e_bar, int count) {
    CMatrix M = CMatrix::Zero(count, n + 1);
    auto P = [&](int j) { return j >= 0 && j <= t.order() ? t.p[j] : cplx{}; };
    for (int i = 0; i < count; ++i) {
        int m = (k == 0 ? n + 2 : n + 1) + 1 + i;
        for (int c = 0; c <= n; ++c) M(i, c) = P(m - 1 - c) * static_cast<double>(c + k) + t.q(m - 2 - c, e_bar);
    }
    return M;
}

struct SpectrumEntry {
    int k = 0;
    int n = 0;
    int l = 0;
    std::optional<cplx> e_bar;  // empty for a rejected continuous branch
    cplx energy = 0.0;          // dimensional E = E_bar hbar^2 / (2 m rho_c^2)
    double residual = 0.0;      // |det M(E_bar)|
    double residual_scale = 0.0;  // Hadamard bound prod_i |row_i| of the magnitude system
    double kk_term = 0.0;       // l^2 + l
    cplx remainder = 0.0;       // f = E_bar - l(l+1)
    bool complex_entry = false;   // nonzero transition width
    bool rejected = false;
    std::string note;
    std::vector<cplx> null_vector;     // (a_0..a_n), a_0 = 1 when possible
    std::vector<cplx> eta_conditions;  // leftover equations on the null vector (k = 1)
};

/// Monomial coefficients c_0..c_d of the polynomial through (x_i, y_i).
inline std::vector<cplx> interpolate(const std::vector<cplx>& x, const std::vector<cplx>& y) {
    int n = static_cast<int>(x.size());
    CMatrix V(n, n);
    Eigen::VectorXcd b(n);
    for (int i = 0; i < n; ++i) {
        cplx p = 1.0;
        for (int j = 0; j < n; ++j, p *= x[i]) V(i, j) = p;
        b(i) = y[i];
    }
    Eigen::VectorXcd c = V.fullPivLu().solve(b);
    return {c.data(), c.data() + n};
}

/// Roots of sum c_i u^i via the companion matrix, each polished by Newton.
inline std::vector<cplx> polynomial_roots(std::vector<cplx> c) {
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    int d = static_cast<int>(c.size()) - 1;
    if (d < 1) return {};
    CMatrix comp = CMatrix::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
    std::vector<cplx> roots;
    for (int i = 0; i < d; ++i) {
        cplx z = es.eigenvalues()(i);
        for (int it = 0; it < 4; ++it) {
            cplx f = 0.0, df = 0.0;
            for (int j = d; j >= 0; --j) {
                df = df * z + f;
                f = f * z + c[j];
            }
            if (df == 0.0) break;
            cplx step = f / df;
            z -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
        }
        roots.push_back(z);
    }
    return roots;
}

/// Same system built from |p_j|, |A_j|, |B_j| and |E|: entry magnitudes without
/// cancellation, so a root cannot shrink its own residual scale.
inline CMatrix magnitude_system(const TaylorCoeffs& t, int k, int n, cplx e_bar) {
    TaylorCoeffs a = t;
    for (auto* v : {&a.p, &a.A, &a.B})
        for (auto& x : *v) x = std::abs(x);
    return truncated_system(a, k, n, std::abs(e_bar));
}

inline double hadamard_bound(const CMatrix& M) {
    double b = 1.0;
    for (int i = 0; i < M.rows(); ++i) b *= std::max(M.row(i).norm(), std::numeric_limits<double>::min());
    return b;
}

inline std::vector<cplx> null_vector(const CMatrix& M) {
    Eigen::JacobiSVD<CMatrix> svd(M, Eigen::ComputeFullV);
    Eigen::VectorXcd v = svd.matrixV().col(M.cols() - 1);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    cplx norm = std::abs(v(0)) > 1e-8 * std::abs(v(big)) ? v(0) : v(big);
    v /= norm;
    return {v.data(), v.data() + v.size()};
}

inline cplx snap(cplx z) {
    if (std::abs(z.imag()) < 1e-9 * std::max(std::abs(z.real()), 1.0)) return {z.real(), 0.0};
    return z;
}

/// Fills in the derived fields of an entry with a root.
inline void finish_entry(SpectrumEntry& s, const TaylorCoeffs& t, const Constants& k, double rho_c) {
    s.kk_term = t.L();
    if (s.e_bar) {
        s.energy = *s.e_bar * energy_unit(k, rho_c);
        s.remainder = *s.e_bar - t.L();
        s.complex_entry = s.e_bar->imag() != 0.0;
    }
}

/// Roots E_bar of det M(E_bar) for exponent k and truncation n. The
/// determinant is interpolated on n + 2 Chebyshev energies (its degree is at
/// most n + 1 because every q_n is affine in E_bar).
inline std::vector<SpectrumEntry> determinant_spectrum(const TaylorCoeffs& t, int k, int n,
                                                       const Constants& consts = Constants::natural(),
                                                       double rho_c = 1.0) {
    if (n < 0) throw std::invalid_argument("negative truncation order");
    double center = t.L(), radius = std::max(1.0, t.L());
    int samples = n + 2;
    std::vector<cplx> u(samples), d(samples);
    for (int i = 0; i < samples; ++i) {
        u[i] = std::cos(M_PI * (i + 0.5) / samples);
        d[i] = truncated_system(t, k, n, center + radius * u[i]).determinant();
    }
    auto c = interpolate(u, d);
    double cmax = 0.0;
    for (auto v : c) cmax = std::max(cmax, std::abs(v));
    if (cmax == 0.0)
        throw StructuralDegeneracy("determinant vanishes identically for k = " + std::to_string(k) +
                                   ", n = " + std::to_string(n));
    for (auto& v : c)
        if (std::abs(v) < 1e-13 * cmax) v = 0.0;
    std::vector<SpectrumEntry> out;
    for (cplx z : polynomial_roots(c)) {
        SpectrumEntry s;
        s.k = k;
        s.n = n;
        s.l = t.l;
        cplx e = snap(center + radius * z);
        s.e_bar = e;
        CMatrix M = truncated_system(t, k, n, e);
        s.residual = std::abs(M.determinant());
        s.residual_scale = hadamard_bound(magnitude_system(t, k, n, e));
        s.null_vector = null_vector(M);
        if (k == 1) {
            CMatrix extra = overflow_rows(t, k, n, e, 1);
            Eigen::VectorXcd a = Eigen::Map<const Eigen::VectorXcd>(s.null_vector.data(), n + 1);
            Eigen::VectorXcd r = extra * a;
            s.eta_conditions.assign(r.data(), r.data() + r.size());
        }
        finish_entry(s, t, consts, rho_c);
        out.push_back(std::move(s));
    }
    // conjugate pairs share a real part up to rounding, so compare it coarsely
    auto key = [](double v) {
        double step = 1e-9 * std::pow(10.0, std::floor(std::log10(std::max(1.0, std::abs(v)))));
        return std::round(v / step);
    };
    std::sort(out.begin(), out.end(), [&](const SpectrumEntry& a, const SpectrumEntry& b) {
        double ka = key(a.e_bar->real()), kb = key(b.e_bar->real());
        if (ka != kb) return ka < kb;
        return a.e_bar->imag() < b.e_bar->imag();
    });
    if (k == 0 && n == 0) {
        // q0 = B0 (E - L): the E-independent factor B0 = 1 + eta_bar'(1)^2 is the other branch
        SpectrumEntry rej;
        rej.k = 0;
        rej.n = 0;
        rej.l = t.l;
        rej.rejected = true;
        std::ostringstream os;
        os.precision(12);
        os << "continuous branch 1 + eta_bar'(1)^2 = 0 (eta_bar'(1) = +-i; literal reading eta_bar(1) = "
              "exp(i pi (z + 1/2))) causes divergence at eps = 1; here 1 + eta_bar'(1)^2 = "
           << t.B[0].real();
        rej.note = os.str();
        rej.residual = std::abs(t.B[0]);
        finish_entry(rej, t, consts, rho_c);
        out.push_back(std::move(rej));
    }
    return out;
}

struct FirstExcited {
    SpectrumEntry entry;   // k = 1, n = 1 determinant root
    cplx closed_form;      // L + (p0^2 - p1) / (1 + eta_bar'(1)^2)
    cplx literal_reading;  // L - (p0 + p1) / (1 + eta_bar'(1)^2), diagnostic only
};

inline FirstExcited first_excited(const TaylorCoeffs& t, const Constants& consts = Constants::natural(),
                                  double rho_c = 1.0) {
    auto roots = determinant_spectrum(t, 1, 1, consts, rho_c);
    if (roots.empty()) throw StructuralDegeneracy("k = 1, n = 1 determinant has no root");
    FirstExcited f{roots.front(), 0.0, 0.0};
    double w = 1.0 + t.eta_prime * t.eta_prime;
    f.closed_form = t.L() + (t.p[0] * t.p[0] - t.p[1]) / t.B[0];
    f.literal_reading = t.L() - (t.p[0] + t.p[1]) / w;
    return f;
}

// ---- boundary conditions on eta -------------------------------------------

struct EtaConditions {
    cplx a0 = 1.0;
    cplx a1 = 0.0;
    std::optional<cplx> e_bar;   // fixed by the m = 2 equation
    bool inconsistent = false;   // m = 2 equation cannot hold for any energy
    std::vector<int> equations;  // m of each residual
    std::vector<cplx> residuals;
    std::vector<std::string> expressions;
};

/// k = 1 truncation to (a_0, a_1): equation m = 1 fixes a_1, m = 2 fixes the
/// energy, and m = 3..order+1 are left over as conditions on the Taylor data
/// of the coefficients (hence on eta derivatives at eps = 1). Conditions whose
/// coefficients all vanish are omitted.
inline EtaConditions eta_boundary_conditions(const TaylorCoeffs& t, int order = 2) {
    if (order < 2) throw std::invalid_argument("order must be at least 2");
    if (t.order() < order) throw DomainError("Taylor data too short for the requested order");
    EtaConditions c;
    c.a1 = -t.p[0] * c.a0 / 2.0;
    // m = 2: 2 p0 a1 + (p1 + q0) a0 = 0, q0 = A0 + E B0
    cplx rhs = -(2.0 * t.p[0] * c.a1 + t.p[1] * c.a0) / c.a0;
    if (t.B[0] != 0.0)
        c.e_bar = (rhs - t.A[0]) / t.B[0];
    else if (std::abs(rhs - t.A[0]) > 1e-14)
        c.inconsistent = true;
    cplx e = c.e_bar.value_or(0.0);
    auto P = [&](int j) { return j >= 0 && j <= t.order() ? t.p[j] : cplx{}; };
    for (int m = 3; m <= order + 1; ++m) {
        std::vector<std::pair<cplx, std::string>> terms;
        std::array<cplx, 2> a{c.a0, c.a1};
        std::array<const char*, 2> an{"a0", "a1"};
        bool nontrivial = false;
        cplx res = 0.0;
        std::string expr;
        for (int col = 0; col <= 1; ++col) {
            int jp = m - 1 - col, jq = m - 2 - col;
            cplx coef = P(jp) * static_cast<double>(col + 1) + t.q(jq, e);
            if (P(jp) != 0.0 || t.A[std::min(jq, t.order())] != 0.0 || t.B[std::min(jq, t.order())] != 0.0)
                nontrivial = true;
            res += coef * a[col];
            std::string f = (col + 1 == 1 ? "" : std::to_string(col + 1) + "*") + "p" + std::to_string(jp);
            expr += (expr.empty() ? "" : " + ") + std::string(an[col]) + "*(" + f + " + q" + std::to_string(jq) + ")";
        }
        if (!nontrivial) continue;
        c.equations.push_back(m);
        c.residuals.push_back(res);
        c.expressions.push_back(expr);
    }
    return c;
}

// ---- sweep ---------------------------------------------------------------

struct SweepOptions {
    int l_min = 0;
    int l_max = 3;
    std::vector<int> ks{0, 1};
    int n_max = 6;
    bool all_orders = true;  // every n in 0..n_max, otherwise n_max only
};

/// Spectrum for every (l, k, n). Entries come out ordered by (l, k, n, Re E, Im E)
/// with rejected branches last within their block.
inline std::vector<SpectrumEntry> spectrum_sweep(const EtaProfile& profile, const SweepOptions& o,
                                                 const Constants& consts = Constants::natural()) {
    if (o.l_min < 0 || o.l_max < o.l_min) throw std::invalid_argument("bad l range");
    std::vector<SpectrumEntry> out;
    for (int l = o.l_min; l <= o.l_max; ++l) {
        auto ode = radial::epsilon_ode(profile, l, 0.0, consts);
        auto t = taylor_coeffs(ode, o.n_max + 2);
        for (int k : o.ks)
            for (int n = o.all_orders ? 0 : o.n_max; n <= o.n_max; ++n) {
                if (k == 1 && n == 0) continue;  // a single row with no energy dependence
                auto part = determinant_spectrum(t, k, n, consts, profile.rho_c());
                out.insert(out.end(), part.begin(), part.end());
            }
    }
    return out;
}

}  // namespace xwin::spectrum

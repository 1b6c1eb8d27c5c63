#pragma once

// Minimal exact algebra over the 5d phase space.
//
// An Expr is kept in one canonical shape: a Laurent polynomial numerator with
// exact rational coefficients over atoms, divided by a product of
// multi-term polynomial factors raised to positive powers. Every operation
// returns canonical output, so structural equality is semantic equality for
// everything this toolkit builds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xwin/rational.hpp"

namespace xwin::sym {

/// The ten canonical phase-space variables, in z_I order.
enum class Var : std::uint8_t { r, theta, phi, rho, sigma, p_r, p_theta, p_phi, p_rho, p_sigma };

inline constexpr int kVarCount = 10;
inline constexpr int kDefaultMaxEtaOrder = 10;

struct CanonicalVar {
    Var id;
    std::string_view name;
    bool momentum;
    int pair;  // 1..5
};

inline constexpr std::array<CanonicalVar, kVarCount> kCanonicalVars{{
    {Var::r, "r", false, 1},
    {Var::theta, "theta", false, 2},
    {Var::phi, "phi", false, 3},
    {Var::rho, "rho", false, 4},
    {Var::sigma, "sigma", false, 5},
    {Var::p_r, "p_r", true, 1},
    {Var::p_theta, "p_theta", true, 2},
    {Var::p_phi, "p_phi", true, 3},
    {Var::p_rho, "p_rho", true, 4},
    {Var::p_sigma, "p_sigma", true, 5},
}};

inline constexpr const CanonicalVar& info(Var v) { return kCanonicalVars[static_cast<int>(v)]; }
inline constexpr Var coordinate(int pair) { return static_cast<Var>(pair - 1); }
inline constexpr Var momentum(int pair) { return static_cast<Var>(pair + 4); }

/// Model parameters; lambda1 / lambda2 are the Lagrange multipliers of the total Hamiltonian.
enum class Param : std::uint8_t { hbar, m, rho_c, E, l, alpha, beta, lambda1, lambda2 };
inline constexpr std::array<std::string_view, 9> kParamNames{"hbar",  "m",    "rho_c",   "E",      "l",
                                                             "alpha", "beta", "lambda1", "lambda2"};

/// Exactly represented irrational constants.
enum class Named : std::uint8_t { pi, sqrt2, imag };
inline constexpr std::array<std::string_view, 3> kNamedNames{"pi", "sqrt2", "I"};

class SymbolicError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DerivativeOrderError : public SymbolicError {
public:
    DerivativeOrderError(int order, int cap)
        : SymbolicError("eta derivative of order " + std::to_string(order) + " exceeds the configured cap " +
                        std::to_string(cap)),
          order_(order) {}
    int order() const { return order_; }

private:
    int order_;
};

class Expr;

// Atoms sort as: named constants < params < vars < eta derivatives < sin < cos.
enum class AtomKind : std::uint8_t { named, param, var, eta, sin, cos };

struct Atom {
    AtomKind kind;
    int index;                         // Named / Param / Var ordinal, or eta derivative order
    std::shared_ptr<const Expr> arg;  // argument of sin / cos
};

using Monomial = std::vector<std::pair<Atom, int>>;  // sorted by atom, nonzero exponents

int compare(const Atom& a, const Atom& b);
int compare(const Expr& a, const Expr& b);

inline int compare_mono_lex(const Monomial& a, const Monomial& b) {
    // Lexicographic from the greatest atom downwards.
    auto ia = a.rbegin();
    auto ib = b.rbegin();
    while (ia != a.rend() && ib != b.rend()) {
        int c = compare(ia->first, ib->first);
        if (c != 0) return c > 0 ? (ia->second > 0 ? 1 : -1) : (ib->second > 0 ? -1 : 1);
        if (ia->second != ib->second) return ia->second < ib->second ? -1 : 1;
        ++ia;
        ++ib;
    }
    if (ia != a.rend()) return ia->second > 0 ? 1 : -1;
    if (ib != b.rend()) return ib->second > 0 ? -1 : 1;
    return 0;
}

inline int total_degree(const Monomial& m) {
    int d = 0;
    for (const auto& [a, e] : m) d += e;
    return d;
}

/// Graded lexicographic monomial order.
inline int compare_mono(const Monomial& a, const Monomial& b) {
    int da = total_degree(a);
    int db = total_degree(b);
    if (da != db) return da < db ? -1 : 1;
    return compare_mono_lex(a, b);
}

struct MonoLess {
    bool operator()(const Monomial& a, const Monomial& b) const { return compare_mono(a, b) < 0; }
};

/// Product of two monomials with sqrt2^2 -> 2 and I^2 -> -1 folded into the returned coefficient.
inline std::pair<Rational, Monomial> mono_mul(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.reserve(a.size() + b.size());
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && compare(ia->first, ib->first) < 0)) {
            out.push_back(*ia++);
        } else if (ia == a.end() || compare(ib->first, ia->first) < 0) {
            out.push_back(*ib++);
        } else {
            int e = ia->second + ib->second;
            if (e != 0) out.emplace_back(ia->first, e);
            ++ia;
            ++ib;
        }
    }
    Rational coef{1};
    for (auto it = out.begin(); it != out.end();) {
        if (it->first.kind != AtomKind::named) {
            ++it;
            continue;
        }
        auto named = static_cast<Named>(it->first.index);
        if (named == Named::sqrt2) {
            int e = it->second;
            int q = e >= 0 ? e / 2 : -((-e + 1) / 2);
            int rem = e - 2 * q;
            for (int i = 0; i < (q >= 0 ? q : -q); ++i) coef = q >= 0 ? coef * Rational{2} : coef / Rational{2};
            if (rem == 0) {
                it = out.erase(it);
                continue;
            }
            it->second = rem;
        } else if (named == Named::imag) {
            int rem = ((it->second % 4) + 4) % 4;
            if (rem >= 2) coef = -coef;
            if (rem % 2 == 0) {
                it = out.erase(it);
                continue;
            }
            it->second = 1;
        }
        ++it;
    }
    return {coef, std::move(out)};
}

/// Sparse polynomial over atoms with exact rational coefficients.
class Poly {
public:
    using Terms = std::map<Monomial, Rational, MonoLess>;

    Poly() = default;
    explicit Poly(Rational c) {
        if (!c.is_zero()) terms_.emplace(Monomial{}, c);
    }
    Poly(Monomial m, Rational c) { add_term(std::move(m), c); }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    Rational constant_value() const {
        auto it = terms_.find(Monomial{});
        return it == terms_.end() ? Rational{0} : it->second;
    }

    void add_term(Monomial m, Rational c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(std::move(m), c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    const std::pair<const Monomial, Rational>& leading() const { return *terms_.rbegin(); }

    friend Poly operator+(Poly a, const Poly& b) {
        for (const auto& [m, c] : b.terms_) a.add_term(m, c);
        return a;
    }
    friend Poly operator-(Poly a, const Poly& b) {
        for (const auto& [m, c] : b.terms_) a.add_term(m, -c);
        return a;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly out;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                auto [k, m] = mono_mul(ma, mb);
                out.add_term(std::move(m), ca * cb * k);
            }
        return out;
    }
    Poly scaled(const Rational& c) const {
        Poly out;
        for (const auto& [m, v] : terms_) out.add_term(m, v * c);
        return out;
    }
    Poly times(const Monomial& mono) const {
        Poly out;
        for (const auto& [m, v] : terms_) {
            auto [k, p] = mono_mul(m, mono);
            out.add_term(std::move(p), v * k);
        }
        return out;
    }
    Poly pow(int n) const {
        Poly out{Rational{1}};
        Poly base = *this;
        while (n > 0) {
            if (n & 1) out = out * base;
            n >>= 1;
            if (n) base = base * base;
        }
        return out;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return compare(a, b) == 0; }

    friend int compare(const Poly& a, const Poly& b) {
        auto ia = a.terms_.rbegin();
        auto ib = b.terms_.rbegin();
        for (; ia != a.terms_.rend() && ib != b.terms_.rend(); ++ia, ++ib) {
            int c = compare_mono(ia->first, ib->first);
            if (c != 0) return c;
            if (ia->second != ib->second) return ia->second < ib->second ? -1 : 1;
        }
        if (ia != a.terms_.rend()) return 1;
        if (ib != b.terms_.rend()) return -1;
        return 0;
    }

private:
    Terms terms_;
};

inline Monomial mono_inverse(const Monomial& m) {
    Monomial out = m;
    for (auto& [a, e] : out) e = -e;
    return out;
}

/// Exact division of polynomials; nullopt when the divisor does not divide.
/// Negative exponents in the dividend are cleared before dividing.
inline std::optional<Poly> exact_divide(const Poly& num, const Poly& den) {
    if (den.is_zero()) throw SymbolicError("polynomial division by zero");
    if (num.is_zero()) return Poly{};
    Monomial shift;
    {
        Monomial mins;
        for (const auto& [m, c] : num.terms())
            for (const auto& [a, e] : m) {
                if (e >= 0) continue;
                auto it = std::find_if(mins.begin(), mins.end(), [&](const auto& p) { return compare(p.first, a) == 0; });
                if (it == mins.end())
                    mins.emplace_back(a, e);
                else
                    it->second = std::min(it->second, e);
            }
        std::sort(mins.begin(), mins.end(), [](const auto& x, const auto& y) { return compare(x.first, y.first) < 0; });
        shift = mins;
    }
    Poly p = shift.empty() ? num : num.times(mono_inverse(shift));
    const auto& [lm, lc] = den.leading();
    Poly q;
    std::size_t guard = 0;
    const std::size_t limit = 64 * (num.size() + 4) * (den.size() + 4);
    while (!p.is_zero()) {
        if (++guard > limit) return std::nullopt;
        const auto& [pm, pc] = p.leading();
        // pm / lm must be a monomial with nonnegative exponents
        auto [k, ratio] = mono_mul(pm, mono_inverse(lm));
        if (std::any_of(ratio.begin(), ratio.end(), [](const auto& x) { return x.second < 0; })) return std::nullopt;
        Poly t{ratio, pc * k / lc};
        q = q + t;
        p = p - t * den;
    }
    if (!(q * den == (shift.empty() ? num : num.times(mono_inverse(shift))))) return std::nullopt;
    return shift.empty() ? q : q.times(shift);
}

/// Denominator factor: primitive multi-term polynomial to a positive power.
struct Factor {
    Poly base;
    int exp;
};

class Expr {
public:
    Expr() = default;
    Expr(Rational c) : num_(c) {}  // NOLINT(google-explicit-constructor)
    Expr(std::int64_t c) : num_(Rational{c}) {}  // NOLINT(google-explicit-constructor)
    Expr(int c) : num_(Rational{c}) {}  // NOLINT(google-explicit-constructor)

    static Expr atom(Atom a) { return from_poly(Poly{Monomial{{std::move(a), 1}}, Rational{1}}); }
    static Expr from_poly(Poly p) {
        Expr e;
        e.num_ = std::move(p);
        return e;
    }
    /// Builds num / prod(den) and cancels every factor that divides the numerator.
    static Expr make(Poly num, std::vector<Factor> den);

    const Poly& numerator() const { return num_; }
    const std::vector<Factor>& denominator() const { return den_; }

    bool is_zero() const { return num_.is_zero(); }
    bool is_rational() const { return den_.empty() && num_.is_constant(); }
    std::optional<Rational> as_rational() const {
        if (!is_rational()) return std::nullopt;
        return num_.constant_value();
    }

    Expr operator-() const {
        Expr e = *this;
        e.num_ = e.num_.scaled(Rational{-1});
        return e;
    }
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b) { return a * b.inverse(); }
    Expr& operator+=(const Expr& o) { return *this = *this + o; }
    Expr& operator-=(const Expr& o) { return *this = *this - o; }
    Expr& operator*=(const Expr& o) { return *this = *this * o; }

    Expr inverse() const;
    Expr pow(int n) const;

    friend bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

    friend int compare(const Expr& a, const Expr& b) {
        int c = compare(a.num_, b.num_);
        if (c != 0) return c;
        if (a.den_.size() != b.den_.size()) return a.den_.size() < b.den_.size() ? -1 : 1;
        for (std::size_t i = 0; i < a.den_.size(); ++i) {
            c = compare(a.den_[i].base, b.den_[i].base);
            if (c != 0) return c;
            if (a.den_[i].exp != b.den_[i].exp) return a.den_[i].exp < b.den_[i].exp ? -1 : 1;
        }
        return 0;
    }

private:
    Poly num_;
    std::vector<Factor> den_;  // sorted by base, distinct bases
};

// ---- atoms --------------------------------------------------------------

inline int compare(const Atom& a, const Atom& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    if (a.kind == AtomKind::sin || a.kind == AtomKind::cos) return compare(*a.arg, *b.arg);
    if (a.index != b.index) return a.index < b.index ? -1 : 1;
    return 0;
}

inline Expr named(Named n) { return Expr::atom({AtomKind::named, static_cast<int>(n), nullptr}); }
inline Expr param(Param p) { return Expr::atom({AtomKind::param, static_cast<int>(p), nullptr}); }
inline Expr var(Var v) { return Expr::atom({AtomKind::var, static_cast<int>(v), nullptr}); }
inline Expr pi() { return named(Named::pi); }
inline Expr sqrt2() { return named(Named::sqrt2); }
inline Expr imag() { return named(Named::imag); }

/// k-th formal derivative of the window profile, eta^(k)(r).
inline Expr eta(int order = 0, int cap = kDefaultMaxEtaOrder) {
    if (order < 0) throw SymbolicError("negative eta derivative order");
    if (order > cap) throw DerivativeOrderError(order, cap);
    return Expr::atom({AtomKind::eta, order, nullptr});
}

namespace detail {

// sin(j*pi/4) for j = 0..7 as (rational, sqrt2 multiplier) pairs: value = a + b*sqrt2.
inline Expr sin_quarter_pi(int j) {
    j = ((j % 8) + 8) % 8;
    const Expr half_sqrt2 = sqrt2() * Expr(Rational{1, 2});
    switch (j) {
        case 0: return Expr(0);
        case 1: return half_sqrt2;
        case 2: return Expr(1);
        case 3: return half_sqrt2;
        case 4: return Expr(0);
        case 5: return -half_sqrt2;
        case 6: return Expr(-1);
        default: return -half_sqrt2;
    }
}

// If e == c*pi with 4c an integer, returns 4c.
inline std::optional<std::int64_t> quarter_pi_multiple(const Expr& e) {
    if (e.is_zero()) return 0;
    if (!e.denominator().empty() || e.numerator().size() != 1) return std::nullopt;
    const auto& [m, c] = *e.numerator().terms().begin();
    if (m.size() != 1 || m[0].second != 1 || m[0].first.kind != AtomKind::named ||
        static_cast<Named>(m[0].first.index) != Named::pi)
        return std::nullopt;
    Rational four_c = c * Rational{4};
    if (!four_c.is_integer()) return std::nullopt;
    return four_c.num();
}

}  // namespace detail

inline Expr sin(const Expr& arg) {
    if (auto j = detail::quarter_pi_multiple(arg)) return detail::sin_quarter_pi(static_cast<int>(*j % 8));
    return Expr::atom({AtomKind::sin, 0, std::make_shared<const Expr>(arg)});
}

inline Expr cos(const Expr& arg) {
    if (auto j = detail::quarter_pi_multiple(arg)) return detail::sin_quarter_pi(static_cast<int>(*j % 8) + 2);
    return Expr::atom({AtomKind::cos, 0, std::make_shared<const Expr>(arg)});
}

// ---- canonicalisation ---------------------------------------------------

namespace detail {

inline void sort_factors(std::vector<Factor>& den) {
    std::sort(den.begin(), den.end(), [](const Factor& a, const Factor& b) { return compare(a.base, b.base) < 0; });
    std::vector<Factor> merged;
    for (auto& f : den) {
        if (f.exp == 0) continue;
        if (!merged.empty() && merged.back().base == f.base)
            merged.back().exp += f.exp;
        else
            merged.push_back(std::move(f));
    }
    den = std::move(merged);
}

// Splits p = c * mono * prim where prim has nonnegative exponents, no common atom
// factor and unit leading coefficient.
struct Content {
    Rational coef;
    Monomial mono;
    Poly primitive;
};

inline Content extract_content(const Poly& p) {
    Monomial mins;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        if (first) {
            mins = m;
            first = false;
            continue;
        }
        Monomial next;
        auto ia = mins.begin();
        auto ib = m.begin();
        while (ia != mins.end() || ib != m.end()) {
            if (ib == m.end() || (ia != mins.end() && compare(ia->first, ib->first) < 0)) {
                if (ia->second < 0) next.emplace_back(ia->first, ia->second);
                ++ia;
            } else if (ia == mins.end() || compare(ib->first, ia->first) < 0) {
                if (ib->second < 0) next.emplace_back(ib->first, ib->second);
                ++ib;
            } else {
                int e = std::min(ia->second, ib->second);
                if (e != 0) next.emplace_back(ia->first, e);
                ++ia;
                ++ib;
            }
        }
        mins = std::move(next);
    }
    // named constants (sqrt2, I) are units here; leave them in the primitive part
    mins.erase(std::remove_if(mins.begin(), mins.end(),
                              [](const auto& x) {
                                  return x.first.kind == AtomKind::named &&
                                         static_cast<Named>(x.first.index) != Named::pi;
                              }),
               mins.end());
    Poly prim = mins.empty() ? p : p.times(mono_inverse(mins));
    // integer coefficients with gcd 1 and a positive leading coefficient
    std::int64_t g = 0;
    std::int64_t l = 1;
    for (const auto& [m, c] : prim.terms()) {
        g = std::gcd(g, c.num() < 0 ? -c.num() : c.num());
        l = std::lcm(l, c.den());
    }
    Rational content{g, l};
    if (prim.leading().second < Rational{0}) content = -content;
    return {content, mins, prim.scaled(Rational{1} / content)};
}

inline std::optional<std::int64_t> integer_root(std::int64_t v, int k) {
    if (v <= 0) return std::nullopt;
    auto r = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(v), 1.0 / k)));
    for (std::int64_t c = std::max<std::int64_t>(1, r - 1); c <= r + 1; ++c) {
        __int128 p = 1;
        for (int i = 0; i < k; ++i) p *= c;
        if (p == v) return c;
    }
    return std::nullopt;
}

// Returns (root, k) with p == root^k for the largest k found, else (p, 1).
inline std::pair<Poly, int> perfect_power(const Poly& p) {
    const auto& [lm, lc] = p.leading();
    if (!lc.is_integer() || p.size() < 3) return {p, 1};
    int g = 0;
    for (const auto& [a, e] : lm) g = std::gcd(g, e);
    for (int k = g; k >= 2; --k) {
        if (g % k != 0) continue;
        auto lc_root = integer_root(lc.num(), k);
        if (!lc_root) continue;
        Monomial root_lm = lm;
        for (auto& [a, e] : root_lm) e /= k;
        Poly root{root_lm, Rational{*lc_root}};
        Poly lead_pow = root.pow(k - 1).scaled(Rational{k});
        const auto& [dlm, dlc] = lead_pow.leading();
        bool done = false;
        for (std::size_t iter = 0; iter < p.size() + 4; ++iter) {
            Poly rem = p - root.pow(k);
            if (rem.is_zero()) {
                done = true;
                break;
            }
            const auto& [rm, rc] = rem.leading();
            if (compare_mono(rm, lm) >= 0) break;
            auto [kk, t] = mono_mul(rm, mono_inverse(dlm));
            bool neg = std::any_of(t.begin(), t.end(), [](const auto& x) { return x.second < 0; });
            if (neg) break;
            root = root + Poly{t, rc * kk / dlc};
        }
        if (done) return {root, k};
    }
    return {p, 1};
}

}  // namespace detail

inline Expr Expr::make(Poly num, std::vector<Factor> den) {
    Expr e;
    if (num.is_zero()) return e;
    detail::sort_factors(den);
    for (auto& f : den) {
        while (f.exp > 0) {
            auto q = exact_divide(num, f.base);
            if (!q) break;
            num = std::move(*q);
            --f.exp;
        }
    }
    den.erase(std::remove_if(den.begin(), den.end(), [](const Factor& f) { return f.exp == 0; }), den.end());
    e.num_ = std::move(num);
    e.den_ = std::move(den);
    return e;
}

inline Expr operator+(const Expr& a, const Expr& b) {
    if (a.den_.empty() && b.den_.empty()) return Expr::from_poly(a.num_ + b.num_);
    std::vector<Factor> common = a.den_;
    for (const auto& f : b.den_) {
        auto it = std::find_if(common.begin(), common.end(), [&](const Factor& g) { return g.base == f.base; });
        if (it == common.end())
            common.push_back(f);
        else
            it->exp = std::max(it->exp, f.exp);
    }
    auto lift = [&](const Expr& x) {
        Poly n = x.num_;
        for (const auto& f : common) {
            auto it = std::find_if(x.den_.begin(), x.den_.end(), [&](const Factor& g) { return g.base == f.base; });
            int have = it == x.den_.end() ? 0 : it->exp;
            if (f.exp > have) n = n * f.base.pow(f.exp - have);
        }
        return n;
    };
    Poly sum = lift(a) + lift(b);
    return Expr::make(std::move(sum), std::move(common));
}

inline Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr{};
    std::vector<Factor> den = a.den_;
    den.insert(den.end(), b.den_.begin(), b.den_.end());
    if (den.empty()) return Expr::from_poly(a.num_ * b.num_);
    return Expr::make(a.num_ * b.num_, std::move(den));
}

inline Expr Expr::inverse() const {
    if (is_zero()) throw SymbolicError("inverse of zero expression");
    Poly top{Rational{1}};
    for (const auto& f : den_) top = top * f.base.pow(f.exp);
    if (num_.size() == 1) {
        const auto& [m, c] = *num_.terms().begin();
        auto [k, inv] = mono_mul(Monomial{}, mono_inverse(m));
        // sqrt2^-1 and I^-1 come back folded through mono_mul
        return Expr::make(top.times(inv).scaled(k / c), {});
    }
    auto content = detail::extract_content(num_);
    auto [root, k] = detail::perfect_power(content.primitive);
    Poly n = top.times(mono_inverse(content.mono)).scaled(Rational{1} / content.coef);
    return Expr::make(std::move(n), {Factor{std::move(root), k}});
}

inline Expr Expr::pow(int n) const {
    if (n < 0) return inverse().pow(-n);
    Expr out{1};
    Expr base = *this;
    while (n > 0) {
        if (n & 1) out = out * base;
        n >>= 1;
        if (n) base = base * base;
    }
    return out;
}

inline Expr pow(const Expr& e, int n) { return e.pow(n); }

// ---- traversal ----------------------------------------------------------

namespace detail {

template <class F>
Expr rebuild(const Expr& e, F&& atom_map) {
    auto poly_map = [&](const Poly& p) {
        Expr acc;
        for (const auto& [m, c] : p.terms()) {
            Expr term{c};
            for (const auto& [a, k] : m) term = term * atom_map(a).pow(k);
            acc = acc + term;
        }
        return acc;
    };
    Expr out = poly_map(e.numerator());
    for (const auto& f : e.denominator()) out = out * poly_map(f.base).pow(-f.exp);
    return out;
}

}  // namespace detail

/// Replaces atoms by expressions; sin / cos arguments are rewritten recursively.
template <class Rule>
Expr substitute(const Expr& e, Rule&& rule) {
    std::function<Expr(const Atom&)> map_atom = [&](const Atom& a) -> Expr {
        if (a.kind == AtomKind::sin || a.kind == AtomKind::cos) {
            Expr inner = substitute(*a.arg, rule);
            return a.kind == AtomKind::sin ? sin(inner) : cos(inner);
        }
        if (std::optional<Expr> r = rule(a)) return *r;
        return Expr::atom(a);
    };
    return detail::rebuild(e, map_atom);
}

namespace detail {

inline Expr atom_derivative(const Atom& a, Var v, int cap);

inline Expr poly_derivative(const Poly& p, Var v, int cap) {
    Expr acc;
    for (const auto& [m, c] : p.terms()) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            Expr da = atom_derivative(m[i].first, v, cap);
            if (da.is_zero()) continue;
            Monomial rest = m;
            int k = rest[i].second;
            if (k == 1)
                rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
            else
                rest[i].second = k - 1;
            acc = acc + Expr::from_poly(Poly{rest, c * Rational{k}}) * da;
        }
    }
    return acc;
}

}  // namespace detail

/// Partial derivative with respect to a canonical variable. eta^(k)(r) maps to
/// eta^(k+1)(r) when differentiating by r; exceeding `cap` throws
/// DerivativeOrderError.
inline Expr differentiate(const Expr& e, Var v, int cap = kDefaultMaxEtaOrder) {
    Expr out = detail::poly_derivative(e.numerator(), v, cap);
    if (e.denominator().empty()) return out;
    Expr den{1};
    for (const auto& f : e.denominator()) den = den * Expr::from_poly(f.base).pow(f.exp);
    Expr inv_den = den.inverse();
    out = out * inv_den;
    Expr num = Expr::from_poly(e.numerator());
    for (const auto& f : e.denominator()) {
        Expr df = detail::poly_derivative(f.base, v, cap);
        if (df.is_zero()) continue;
        out = out - num * inv_den * Expr(f.exp) * df / Expr::from_poly(f.base);
    }
    return out;
}

inline Expr detail::atom_derivative(const Atom& a, Var v, int cap) {
    switch (a.kind) {
        case AtomKind::named:
        case AtomKind::param: return Expr{};
        case AtomKind::var: return a.index == static_cast<int>(v) ? Expr{1} : Expr{};
        case AtomKind::eta: return v == Var::r ? eta(a.index + 1, cap) : Expr{};
        case AtomKind::sin: {
            Expr du = differentiate(*a.arg, v, cap);
            return du.is_zero() ? Expr{} : cos(*a.arg) * du;
        }
        case AtomKind::cos: {
            Expr du = differentiate(*a.arg, v, cap);
            return du.is_zero() ? Expr{} : -(sin(*a.arg) * du);
        }
    }
    return Expr{};
}

/// Highest eta derivative order present, or -1.
inline int max_eta_order(const Expr& e) {
    int best = -1;
    auto scan = [&](const Poly& p, auto&& self) -> void {
        for (const auto& [m, c] : p.terms())
            for (const auto& [a, k] : m) {
                if (a.kind == AtomKind::eta) best = std::max(best, a.index);
                if (a.arg) {
                    self(a.arg->numerator(), self);
                    for (const auto& f : a.arg->denominator()) self(f.base, self);
                }
            }
    };
    scan(e.numerator(), scan);
    for (const auto& f : e.denominator()) scan(f.base, scan);
    return best;
}

/// Canonical form is maintained by every constructor; this re-runs factor
/// cancellation and is idempotent.
inline Expr normalize(const Expr& e) { return Expr::make(e.numerator(), e.denominator()); }

// ---- printing -----------------------------------------------------------

std::string to_string(const Expr& e);

namespace detail {

inline std::string atom_name(const Atom& a) {
    switch (a.kind) {
        case AtomKind::named: return std::string(kNamedNames[a.index]);
        case AtomKind::param: return std::string(kParamNames[a.index]);
        case AtomKind::var: return std::string(kCanonicalVars[a.index].name);
        case AtomKind::eta:
            if (a.index <= 3) return "eta" + std::string(a.index, '\'') + "(r)";
            return "eta^(" + std::to_string(a.index) + ")(r)";
        case AtomKind::sin: return "sin(" + to_string(*a.arg) + ")";
        case AtomKind::cos: return "cos(" + to_string(*a.arg) + ")";
    }
    return "?";
}

inline std::string poly_string(const Poly& p) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        Rational mag = c < Rational{0} ? -c : c;
        if (first)
            out += c < Rational{0} ? "-" : "";
        else
            out += c < Rational{0} ? " - " : " + ";
        first = false;
        std::string body;
        for (const auto& [a, k] : m) {
            if (!body.empty()) body += "*";
            body += atom_name(a);
            if (k != 1) body += "^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k));
        }
        if (body.empty())
            out += mag.str();
        else if (mag.is_one())
            out += body;
        else
            out += mag.str() + "*" + body;
    }
    return out;
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
    std::string n = detail::poly_string(e.numerator());
    if (e.denominator().empty()) return n;
    std::string d;
    for (const auto& f : e.denominator()) {
        if (!d.empty()) d += "*";
        d += "(" + detail::poly_string(f.base) + ")";
        if (f.exp != 1) d += "^" + std::to_string(f.exp);
    }
    if (e.numerator().size() > 1) n = "(" + n + ")";
    return n + "/" + (e.denominator().size() > 1 ? "(" + d + ")" : d);
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

}  // namespace xwin::sym

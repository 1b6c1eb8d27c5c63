#pragma once

// Truncated Taylor series arithmetic. A Jet of order N around x0 stores the
// Taylor coefficients c_k = f^(k)(x0)/k!, k = 0..N, and every operation below
// propagates them exactly (up to rounding), so derivatives of composed
// closed-form functions come out analytically rather than by differencing.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace xwin {

template <class T = double>
class Jet {
public:
    Jet() = default;
    explicit Jet(std::size_t order, T value = T{}) : c_(order + 1, T{}) { c_[0] = value; }
    explicit Jet(std::vector<T> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty()) throw std::invalid_argument("empty jet");
    }

    /// The identity function around x0.
    static Jet variable(T x0, std::size_t order) {
        Jet j(order, x0);
        if (order >= 1) j.c_[1] = T{1};
        return j;
    }

    /// From derivative values f^(k)(x0).
    static Jet from_derivatives(const std::vector<T>& d) {
        std::vector<T> c(d.size());
        double fact = 1.0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            c[k] = d[k] / fact;
        }
        return Jet(std::move(c));
    }

    std::size_t order() const { return c_.size() - 1; }
    const std::vector<T>& coeffs() const { return c_; }
    T operator[](std::size_t k) const { return k < c_.size() ? c_[k] : T{}; }
    T& operator[](std::size_t k) { return c_[k]; }
    T value() const { return c_[0]; }

    std::vector<T> derivatives() const {
        std::vector<T> d(c_.size());
        double fact = 1.0;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            d[k] = c_[k] * fact;
        }
        return d;
    }

    /// Jet of f' (one order lower).
    Jet derivative() const {
        if (c_.size() == 1) return Jet(0);
        std::vector<T> d(c_.size() - 1);
        for (std::size_t k = 0; k + 1 < c_.size(); ++k) d[k] = c_[k + 1] * static_cast<double>(k + 1);
        return Jet(std::move(d));
    }

    Jet truncated(std::size_t order) const {
        std::vector<T> c(order + 1, T{});
        for (std::size_t k = 0; k <= order && k < c_.size(); ++k) c[k] = c_[k];
        return Jet(std::move(c));
    }

    Jet operator-() const {
        Jet j = *this;
        for (auto& v : j.c_) v = -v;
        return j;
    }
    Jet& operator+=(const Jet& o) {
        check(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        check(o);
        for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator+=(T s) {
        c_[0] += s;
        return *this;
    }
    Jet& operator*=(T s) {
        for (auto& v : c_) v *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, T s) { return a += s; }
    friend Jet operator+(T s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, T s) { return a += -s; }
    friend Jet operator-(T s, const Jet& a) { return (-a) + s; }
    friend Jet operator*(Jet a, T s) { return a *= s; }
    friend Jet operator*(T s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, T s) { return a *= T{1} / s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check(b);
        const std::size_t n = a.c_.size();
        Jet out(n - 1);
        for (std::size_t k = 0; k < n; ++k) {
            T acc{};
            for (std::size_t i = 0; i <= k; ++i) acc += a.c_[i] * b.c_[k - i];
            out.c_[k] = acc;
        }
        return out;
    }

    friend Jet reciprocal(const Jet& a) {
        if (a.c_[0] == T{}) throw std::domain_error("jet reciprocal of zero");
        const std::size_t n = a.c_.size();
        Jet out(n - 1);
        out.c_[0] = T{1} / a.c_[0];
        for (std::size_t k = 1; k < n; ++k) {
            T acc{};
            for (std::size_t i = 1; i <= k; ++i) acc += a.c_[i] * out.c_[k - i];
            out.c_[k] = -acc / a.c_[0];
        }
        return out;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
    friend Jet operator/(T s, const Jet& b) { return reciprocal(b) * s; }

    friend Jet exp(const Jet& a) {
        using std::exp;
        const std::size_t n = a.c_.size();
        Jet out(n - 1);
        out.c_[0] = exp(a.c_[0]);
        for (std::size_t k = 1; k < n; ++k) {
            T acc{};
            for (std::size_t i = 1; i <= k; ++i) acc += static_cast<double>(i) * a.c_[i] * out.c_[k - i];
            out.c_[k] = acc / static_cast<double>(k);
        }
        return out;
    }

    /// sin and cos together (they share one recurrence).
    friend std::pair<Jet, Jet> sincos(const Jet& a) {
        using std::cos;
        using std::sin;
        const std::size_t n = a.c_.size();
        Jet s(n - 1), c(n - 1);
        s.c_[0] = sin(a.c_[0]);
        c.c_[0] = cos(a.c_[0]);
        for (std::size_t k = 1; k < n; ++k) {
            T as{}, ac{};
            for (std::size_t i = 1; i <= k; ++i) {
                as += static_cast<double>(i) * a.c_[i] * c.c_[k - i];
                ac += static_cast<double>(i) * a.c_[i] * s.c_[k - i];
            }
            s.c_[k] = as / static_cast<double>(k);
            c.c_[k] = -ac / static_cast<double>(k);
        }
        return {s, c};
    }
    friend Jet sin(const Jet& a) { return sincos(a).first; }
    friend Jet cos(const Jet& a) { return sincos(a).second; }

    friend Jet pow(const Jet& a, int n) {
        if (n < 0) return pow(reciprocal(a), -n);
        Jet out(a.order(), T{1});
        Jet base = a;
        while (n > 0) {
            if (n & 1) out = out * base;
            n >>= 1;
            if (n) base = base * base;
        }
        return out;
    }

    /// f(g(x)) given the Taylor coefficients of f around g(x0).
    friend Jet compose(const std::vector<T>& outer, const Jet& inner) {
        Jet h = inner;
        h.c_[0] = T{};
        Jet out(inner.order());
        for (std::size_t j = outer.size(); j-- > 0;) {
            out = out * h;
            out.c_[0] += outer[j];
        }
        return out;
    }

    /// Evaluates the truncated series at x0 + dx.
    T eval(T dx) const {
        T acc{};
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * dx + c_[k];
        return acc;
    }

private:
    void check(const Jet& o) const {
        if (o.c_.size() != c_.size()) throw std::invalid_argument("jet order mismatch");
    }

    std::vector<T> c_{T{}};
};

}  // namespace xwin

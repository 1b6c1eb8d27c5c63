#pragma once

// Independent numeric references used by the unit tests and the acceptance
// runner. Nothing here goes through the symbolic engine.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Central difference with one Richardson step.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-4) {
    auto d = [&](double s) { return (f(x + s) - f(x - s)) / (2.0 * s); };
    return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

/// k-th derivative from the central k-th difference stencil with a
/// four-level Richardson table (error O(h^8)).
inline double nth_derivative(const std::function<double(double)>& f, double x, int k, double h = 0.1) {
    if (k == 0) return f(x);
    auto stencil = [&](double s) {
        double acc = 0.0, binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            acc += (j % 2 ? -binom : binom) * f(x + (0.5 * k - j) * s);
            binom = binom * (k - j) / (j + 1);
        }
        return acc / std::pow(s, k);
    };
    double t[4][4];
    for (int i = 0; i < 4; ++i) {
        t[i][0] = stencil(h / std::pow(2.0, i));
        for (int j = 1; j <= i; ++j) {
            double p4 = std::pow(4.0, j);
            t[i][j] = (p4 * t[i][j - 1] - t[i - 1][j - 1]) / (p4 - 1.0);
        }
    }
    return t[3][3];
}

/// Taylor coefficients c_0..c_n of f around x0 from a least-squares fit of
/// samples on a Chebyshev-spaced stencil; independent of any jet code.
inline std::vector<double> taylor_fit(const std::function<double(double)>& f, double x0, int n, double radius = 0.05,
                                      int samples = 41) {
    Eigen::MatrixXd a(samples, n + 1 + 6);
    Eigen::VectorXd b(samples);
    for (int i = 0; i < samples; ++i) {
        double t = radius * std::cos(M_PI * (i + 0.5) / samples);
        double p = 1.0;
        for (int j = 0; j < a.cols(); ++j, p *= t / radius) a(i, j) = p;
        b(i) = f(x0 + t);
    }
    Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    std::vector<double> out(n + 1);
    double s = 1.0;
    for (int j = 0; j <= n; ++j, s *= radius) out[j] = c(j) / s;
    return out;
}

// Phase-space ordering r, theta, phi, rho, sigma, p_r, p_theta, p_phi, p_rho, p_sigma.
using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat10 = Eigen::Matrix<double, 10, 10>;

inline Mat10 canonical_J() {
    Mat10 j = Mat10::Zero();
    for (int i = 0; i < 5; ++i) {
        j(i, i + 5) = 1.0;
        j(i + 5, i) = -1.0;
    }
    return j;
}

/// Gradients of rho - s eta, sigma - pi/4, p_sigma, p_rho - s eta' p_r at a
/// point, with d = [eta, eta', eta''] at that r.
inline std::array<Vec10, 4> constraint_gradients(const Vec10& x, const std::array<double, 3>& d, double s) {
    std::array<Vec10, 4> g;
    for (auto& v : g) v.setZero();
    g[0](0) = -s * d[1];
    g[0](3) = 1.0;
    g[1](4) = 1.0;
    g[2](9) = 1.0;
    g[3](0) = -s * d[2] * x(5);
    g[3](5) = -s * d[1];
    g[3](8) = 1.0;
    return g;
}

struct DiracOracle {
    Mat10 omega;
    Eigen::Matrix4d delta;
    std::array<Vec10, 4> grads;
};

/// Numeric Dirac matrix from a direct 4x4 inversion.
inline DiracOracle dirac(const Vec10& x, const std::array<double, 3>& d, double s) {
    DiracOracle o;
    Mat10 j = canonical_J();
    o.grads = constraint_gradients(x, d, s);
    Eigen::Matrix<double, 10, 4> jg;
    Eigen::Matrix<double, 4, 10> gj;
    for (int a = 0; a < 4; ++a) {
        jg.col(a) = j * o.grads[a];
        gj.row(a) = o.grads[a].transpose() * j;
    }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) o.delta(a, b) = o.grads[a].dot(j * o.grads[b]);
    o.omega = j - jg * o.delta.inverse() * gj;
    return o;
}

/// A point on the constraint surface: rho = s eta, sigma = pi/4, p_sigma = 0,
/// p_rho = s eta' p_r; the free coordinates are drawn from `rng`.
template <class Rng>
Vec10 surface_point(Rng& rng, double r, const std::array<double, 3>& d, double s) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> th(0.3, 2.8);
    Vec10 x;
    x << r, th(rng), u(rng), s * d[0], M_PI / 4.0, u(rng), u(rng), u(rng), 0.0, 0.0;
    x(8) = s * d[1] * x(5);
    return x;
}

/// Free radial solution of R'' + (2/r) R' + k^2 R = 0 expressed in eps:
/// R(eps) = (eps/rho_c) sin(k rho_c / eps) up to normalisation.
inline double free_solution(double eps, double e_bar) { return eps * std::sin(std::sqrt(e_bar) / eps); }

}  // namespace oracle

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xwin/profiles.hpp"

using namespace xwin;

namespace {

std::vector<EtaProfile> all_variants() {
    return {EtaProfile::constant(0.7, 2.0),
            EtaProfile::damped_oscillatory(1.0, 1.0),
            EtaProfile::damped_oscillatory(M_PI, 0.3, 1.5),
            EtaProfile::taylor_at_boundary({0.5, -0.2, 0.3, 0.1}),
            EtaProfile::polynomial(Chart::r, 0.0, {0.1, 0.4, -0.2}),
            EtaProfile::custom(Chart::epsilon, "eps^2", [](const Jet<>& e) { return e * e; })};
}

}  // namespace

TEST(Profiles, DampedOscillatoryValueAndDomain) {
    auto p = EtaProfile::damped_oscillatory(M_PI, 0.0);
    EXPECT_NEAR(p.eval(1.0, 0)[0], 0.0, 1e-15);
    try {
        p.eval(0.0, 0);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("fundamental singularity at eps = 0"), std::string::npos);
    }
    EXPECT_THROW(p.eval(-0.5, 0), DomainError);
    EXPECT_THROW(p.eval(std::nan(""), 0), DomainError);
}

TEST(Profiles, InteriorQuadraticAtOrigin) {
    double rc = 2.5, beta = 0.7;
    auto p = EtaProfile::interior_quadratic(0.3, beta, rc);
    EXPECT_EQ(p.chart(), Chart::window);
    // eta_bar = eta_1 / rho_c, so eta_1(0) = beta rho_c^2
    EXPECT_NEAR(p.eval(0.0, 0)[0] * rc, beta * rc * rc, 1e-14);
    auto d = p.eval(1.0, 2);
    EXPECT_NEAR(d[1] * rc, 2.0 + 0.3 * rc, 1e-14);
    EXPECT_NEAR(d[2] * rc, 2.0, 1e-14);
    EXPECT_THROW(p.to_r(), DomainError);
}

TEST(Profiles, DampedOscillatoryDerivativesMatchFiniteDifferences) {
    auto p = EtaProfile::damped_oscillatory(1.0, 1.0);
    auto d = p.eval(0.5, 4);
    auto f = [&](double x) { return p.eval(x, 0)[0]; };
    for (int k = 1; k <= 4; ++k) {
        double fd = oracle::nth_derivative(f, 0.5, k, 0.05);
        EXPECT_NEAR(d[k], fd, 1e-6 * std::max(1.0, std::abs(d[k]))) << "order " << k;
    }
}

TEST(Profiles, DerivativeCap) {
    auto p = EtaProfile::damped_oscillatory(1.0, 1.0);
    EXPECT_NO_THROW(p.eval(0.5, 10));
    EXPECT_THROW(p.eval(0.5, 11), DomainError);
    EXPECT_THROW(p.eval(0.5, -1), std::invalid_argument);
}

TEST(Profiles, ConstantInBothCharts) {
    auto p = EtaProfile::constant(0.7);
    for (auto q : {p, p.to_r(), p.to_epsilon(), p.to_r().to_epsilon()}) {
        auto d = q.eval(0.6, 4);
        EXPECT_DOUBLE_EQ(d[0], 0.7);
        for (int k = 1; k <= 4; ++k) EXPECT_EQ(d[k], 0.0);
    }
}

TEST(Profiles, ChainRuleLinearEps) {
    double rc = 3.0;
    auto p = EtaProfile::custom(Chart::epsilon, "eps", [](const Jet<>& e) { return e; }, rc);
    auto r = p.to_r();
    EXPECT_EQ(r.chart(), Chart::r);
    // eta = rho_c eps_bar, d eta / dr at r = 2 rho_c is -(eps^2 / rho_c) * rho_c * 1 with eps = 1/2
    double deta_dr = r.r_source()(2.0 * rc, 1)[1];
    EXPECT_NEAR(deta_dr, -0.25, 1e-15);
    // dimensionless: d eta_bar / dr = -eps^2 / rho_c
    EXPECT_NEAR(r.eval(2.0 * rc, 1)[1], -0.25 / rc, 1e-15);
}

TEST(Profiles, DampedOscillatoryInRMatchesFiniteDifferences) {
    double rc = 1.0;
    auto p = EtaProfile::damped_oscillatory(1.0, 1.0, rc).to_r();
    auto d = p.eval(2.0 * rc, 3);
    auto f = [&](double r) { return 1.0 * std::exp(-1.0 / r) * std::sin(r) / r; };
    for (int k = 1; k <= 3; ++k) EXPECT_NEAR(d[k], oracle::nth_derivative(f, 2.0, k, 0.2), 1e-6) << k;
}

TEST(Profiles, RoundTrip) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.35, 0.95);
    for (const auto& p : all_variants()) {
        auto back = p.chart() == Chart::r ? p.to_epsilon().to_r() : p.to_r().to_epsilon();
        for (int i = 0; i < 5; ++i) {
            double x = p.chart() == Chart::r ? p.rho_c() / u(rng) : u(rng);
            // compared as Taylor coefficients f^(k)/k!
            auto a = p.jet(x, 6).coeffs(), b = back.jet(x, 6).coeffs();
            for (int k = 0; k <= 6; ++k)
                EXPECT_NEAR(a[k], b[k], 1e-12 * std::max(1.0, std::abs(a[k]))) << p.describe() << " k=" << k;
        }
    }
}

TEST(Profiles, DerivativeConsistency) {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.4, 0.9);
    for (const auto& base : all_variants())
        for (const auto& p : {base, base.to_r(), base.to_epsilon()}) {
            double x = p.chart() == Chart::r ? p.rho_c() / u(rng) : u(rng);
            auto d = p.eval(x, 5);
            for (int k = 1; k <= 5; ++k) {
                auto f = [&](double y) { return p.eval(y, k - 1)[k - 1]; };
                double fd = oracle::derivative(f, x, 1e-3);
                EXPECT_NEAR(d[k], fd, 1e-6 * std::max(1.0, std::abs(d[k]))) << p.describe() << " k=" << k;
            }
        }
}

TEST(Profiles, ZeroIsZeroEverywhere) {
    auto z = EtaProfile::zero(2.0);
    EXPECT_TRUE(z.is_zero());
    EXPECT_TRUE(z.to_r().is_zero());
    for (auto q : {z, z.to_r()}) {
        auto d = q.eval(0.8, 5);
        for (double v : d) EXPECT_EQ(v, 0.0);
    }
}

TEST(Profiles, Normalization) {
    auto t = EtaProfile::taylor_at_boundary({0.5, 1.0, 2.0});
    EXPECT_DOUBLE_EQ(t.normalized().eval(1.0, 0)[0], 0.5);
    auto d = EtaProfile::damped_oscillatory(1.0, 1.0);
    auto n = d.normalized(2.0);
    EXPECT_NEAR(n.eval(1.0, 0)[0], 2.0, 1e-15);
    EXPECT_NEAR(n.eval(0.5, 1)[1] / d.eval(0.5, 1)[1], 2.0 / d.eval(1.0, 0)[0], 1e-12);
    EXPECT_THROW(EtaProfile::taylor_at_boundary({0.0, 1.0}).normalized(1.0), DomainError);
    auto r = EtaProfile::polynomial(Chart::r, 0.0, {0.0, 1.0}, 2.0);
    EXPECT_NEAR(r.normalized(3.0).eval(2.0, 0)[0], 3.0, 1e-15);
}

TEST(Profiles, TaylorAtBoundaryCoefficients) {
    auto t = EtaProfile::taylor_at_boundary({0.5, -0.2, 0.3, 0.1});
    auto d = t.eval(1.0, 4);
    EXPECT_DOUBLE_EQ(d[0], 0.5);
    EXPECT_DOUBLE_EQ(d[1], -0.2);
    EXPECT_DOUBLE_EQ(d[2], 0.6);
    EXPECT_DOUBLE_EQ(d[3], 0.6);
    EXPECT_DOUBLE_EQ(d[4], 0.0);
}

TEST(Profiles, RejectsBadRhoC) {
    EXPECT_THROW(EtaProfile::zero(0.0), std::invalid_argument);
    EXPECT_THROW(EtaProfile::constant(1.0, -1.0), std::invalid_argument);
}

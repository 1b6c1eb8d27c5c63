#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xwin/radial.hpp"

using namespace xwin;
using namespace xwin::radial;

namespace {

std::vector<EtaProfile> smooth_profiles() {
    return {EtaProfile::damped_oscillatory(1.0, 1.0), EtaProfile::taylor_at_boundary({0.3, 0.5, -0.4, 0.2}),
            EtaProfile::custom(Chart::epsilon, "eps^2", [](const Jet<>& e) { return e * e; }),
            EtaProfile::polynomial(Chart::r, 1.0, {0.2, 0.3, 0.1}, 1.0)};
}

}  // namespace

TEST(Radial, ZeroProfileIsFree) {
    auto ode = build_radial(EtaProfile::zero(), 0, 0.5);  // 2mE/hbar^2 = 1
    for (double r : {0.3, 1.0, 4.0}) {
        EXPECT_DOUBLE_EQ(ode.P_ratio(r), 2.0 / r);
        EXPECT_DOUBLE_EQ(ode.P_planck(r), 2.0 / r);
        EXPECT_DOUBLE_EQ(ode.Q_r(r).real(), 1.0);
    }
    auto ode2 = build_radial(EtaProfile::zero(), 2, 1.5);
    EXPECT_DOUBLE_EQ(ode2.Q_r(2.0).real(), 3.0 - 6.0 / 4.0);
}

TEST(Radial, LinearProfileHasConstantPlanckFunction) {
    auto ode = build_radial(EtaProfile::polynomial(Chart::r, 0.0, {0.1, 0.7}), 1, 0.2);
    for (double r : {0.4, 1.3, 3.0}) {
        EXPECT_DOUBLE_EQ(ode.P_ratio(r), 2.0 / r);
        EXPECT_NEAR(ode.P_planck(r), 2.0 / r, 1e-15);
    }
}

TEST(Radial, OriginIsSingular) {
    auto ode = build_radial(EtaProfile::zero(), 0, 1.0);
    EXPECT_THROW(ode.P(0.0), sym::SingularEvaluation);
    EXPECT_THROW(ode.Q(0.0), sym::SingularEvaluation);
    EXPECT_THROW(transform_epsilon(ode).P(0.0), sym::SingularEvaluation);
}

TEST(Radial, TwoConstructionsOfPAgree) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(1.05, 4.0);
    for (const auto& p : smooth_profiles()) {
        auto ode = build_radial(p, 1, 0.4);
        for (int i = 0; i < 50; ++i) {
            double r = u(rng);
            EXPECT_LE(relative_difference(ode.P_planck(r), ode.P_ratio(r)), 1e-12) << p.describe() << " r=" << r;
        }
    }
}

TEST(Radial, EpsilonChartZeroProfile) {
    auto ode = epsilon_ode(EtaProfile::zero(), 2, 3.0);
    for (double e : {0.3, 0.7, 1.0, 1.4}) {
        EXPECT_EQ(ode.P_closed(e), 0.0);
        EXPECT_NEAR(ode.P_chain(e), 0.0, 1e-14);
        cplx want = -(e * e * 6.0 - 3.0) / std::pow(e, 4);
        EXPECT_NEAR(std::abs(ode.Q_chain(e) - want), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(ode.Q_closed(e) - want), 0.0, 1e-13);
    }
}

TEST(Radial, BoundaryValueOfQ) {
    // eta_bar'(1) = 0, l = 0: Q(1) = E_bar
    auto ode = epsilon_ode(EtaProfile::taylor_at_boundary({0.4, 0.0, 1.0}), 0, cplx(2.5, 0.1));
    EXPECT_NEAR(std::abs(ode.Q_chain(1.0) - cplx(2.5, 0.1)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(ode.Q_closed(1.0) - cplx(2.5, 0.1)), 0.0, 1e-14);
}

TEST(Radial, ChainRuleMatchesClosedForms) {
    auto ode = epsilon_ode(EtaProfile::damped_oscillatory(1.0, 1.0), 1, 2.0);
    double e = 0.8;
    EXPECT_LE(relative_difference(ode.P_chain(e), ode.P_closed(e), ode.P_chain_scale(e)), 1e-9);
    EXPECT_LE(relative_difference(ode.Q_chain(e), ode.Q_closed(e)), 1e-9);
    for (const auto& p : smooth_profiles()) {
        auto c = compare_routes(epsilon_ode(p, 2, cplx(1.5, 0.3)), 0.3, 1.5);
        EXPECT_LE(c.max_rel(), 1e-9) << p.describe();
    }
}

TEST(Radial, RhoCScaling) {
    // coefficients in eps depend only on dimensionless data
    for (double rc : {0.5, 2.0, 7.0}) {
        auto a = epsilon_ode(EtaProfile::damped_oscillatory(1.0, 1.0, rc), 1, 2.0);
        auto b = epsilon_ode(EtaProfile::damped_oscillatory(1.0, 1.0, 1.0), 1, 2.0);
        EXPECT_LE(relative_difference(a.P_chain(0.6), b.P_chain(0.6), 2 / 0.6), 1e-12);
        EXPECT_LE(relative_difference(a.Q_chain(0.6), b.Q_chain(0.6)), 1e-12);
    }
}

TEST(Radial, CoefficientJetsAgreeWithValuesAndEachOther) {
    for (const auto& p : smooth_profiles()) {
        auto ode = epsilon_ode(p, 1, 0.0);
        auto jc = ode.jets(1.0, 6, Route::chain_rule);
        auto jp = ode.jets(1.0, 6, Route::closed_form);
        EXPECT_NEAR(jc.p[0], ode.P_chain(1.0), 1e-12);
        for (int k = 0; k <= 6; ++k) {
            double sc = std::max({1.0, std::abs(jc.p[k])});
            EXPECT_NEAR(jc.p[k], jp.p[k], 1e-9 * sc) << p.describe() << " k=" << k;
            EXPECT_NEAR(jc.q_const[k], jp.q_const[k], 1e-9 * std::max(1.0, std::abs(jc.q_const[k])));
            EXPECT_NEAR(jc.q_energy[k], jp.q_energy[k], 1e-9 * std::max(1.0, std::abs(jc.q_energy[k])));
        }
        // against a least-squares Taylor fit of the coefficient values
        auto fit = oracle::taylor_fit([&](double e) { return ode.P_chain(e); }, 1.0, 4);
        for (int k = 0; k <= 4; ++k) EXPECT_NEAR(jc.p[k], fit[k], 1e-6 * std::max(1.0, std::abs(fit[k])));
    }
}

TEST(Classify, InfinityIsIrregular) {
    for (const auto& p : {EtaProfile::zero(), EtaProfile::damped_oscillatory(1.0, 1.0),
                          EtaProfile::taylor_at_boundary({0.3, 0.5, -0.4})})
        for (cplx e : {cplx(1.0), cplx(-2.0), cplx(0.5, 0.5)}) {
            auto rep = classify(epsilon_ode(p, 1, e), 0.0);
            EXPECT_EQ(rep.kind, PointKind::irregular) << p.describe() << " " << rep.diagnostics;
            EXPECT_TRUE(std::isinf(rep.limit_Q));
        }
}

TEST(Classify, BoundaryIsNotIrregular) {
    auto z = classify(epsilon_ode(EtaProfile::zero(), 0, 1.0), 1.0);
    EXPECT_EQ(z.kind, PointKind::ordinary) << z.diagnostics;
    EXPECT_EQ(z.limit_P, 0.0);
    for (const auto& p : smooth_profiles()) {
        auto rep = classify(epsilon_ode(p, 2, 1.0), 1.0);
        EXPECT_TRUE(rep.kind == PointKind::ordinary || rep.kind == PointKind::regular) << rep.diagnostics;
    }
    auto mid = classify(epsilon_ode(EtaProfile::damped_oscillatory(1.0, 1.0), 1, 1.0), 0.5);
    EXPECT_EQ(mid.kind, PointKind::ordinary) << mid.diagnostics;
}

TEST(Classify, ProbeOnSyntheticLimits) {
    // finite nonzero limit, divergence, and an exponent that changes along the probe
    auto pr = radial::detail::probe([](double, double h) { return cplx(h * (3.0 / h)); }, 1.0, -1);
    EXPECT_FALSE(pr.diverges());
    EXPECT_FALSE(pr.vanishes());
    EXPECT_NEAR(pr.last_value, 3.0, 1e-12);
    auto dv = radial::detail::probe([](double, double h) { return cplx(1.0 / h); }, 0.0, 1);
    EXPECT_TRUE(dv.diverges());
    auto drift = radial::detail::probe(
        [](double, double h) { return cplx(h > 1e-4 ? h : 1e-8 / h); }, 0.0, 1);
    EXPECT_FALSE(drift.consistent);
}

TEST(Integrate, LinearSolution) {
    // P = Q = 0 in eps: R'' = 0; zero profile, l = 0, E = 0 gives P = 0, Q = 0
    auto ode = epsilon_ode(EtaProfile::zero(), 0, 0.0);
    auto sol = integrate_numeric(ode, 1.0, 2.0, 1.0, {1.5});
    EXPECT_NEAR(sol.R[0].real(), 2.0, 1e-12);
    EXPECT_LT(sol.error_estimate, 1e-12);
}

TEST(Integrate, FreeParticleClosedForm) {
    double eb = M_PI * M_PI;
    auto ode = epsilon_ode(EtaProfile::zero(), 0, eb);
    double k = std::sqrt(eb);
    double R0 = oracle::free_solution(1.0, eb);
    double dR0 = std::sin(k) - k * std::cos(k);
    std::vector<double> xs{0.5, 0.85, 0.95, 1.05, 1.15, 1.4};
    auto sol = integrate_numeric(ode, R0, dR0, 1.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_NEAR(sol.R[i].real(), oracle::free_solution(xs[i], eb), 1e-8) << xs[i];
    // same thing in the r chart: sin(k r)/r up to normalisation
    auto rode = build_radial(EtaProfile::zero(), 0, 0.5 * eb);
    auto rs = integrate_numeric(rode, std::sin(k * 1.0), k * std::cos(k) - std::sin(k), 1.0, {2.0});
    EXPECT_NEAR(rs.R[0].real(), std::sin(2 * k) / 2.0, 1e-8);
}

TEST(Integrate, RefusesSingularRange) {
    auto ode = epsilon_ode(EtaProfile::zero(), 0, 1.0);
    EXPECT_THROW(integrate_numeric(ode, 1.0, 0.0, 1.0, {-0.5}), IntegrationFailure);
    EXPECT_THROW(integrate_numeric(ode, 1.0, 0.0, 1.0, {1.2}, 0.0), std::invalid_argument);
}

TEST(Integrate, StepUnderflowReportsLocation) {
    // approaching eps = 0 with a large negative energy the solution grows like exp(sqrt|E|/eps)
    auto ode = epsilon_ode(EtaProfile::zero(), 0, -1e4);
    try {
        integrate_numeric(ode, 1.0, 0.0, 1.0, {1e-9}, 1e-12);
        FAIL();
    } catch (const IntegrationFailure& e) {
        EXPECT_GT(e.location(), 0.0);
        EXPECT_LT(e.location(), 1.0);
    }
}

TEST(Integrate, Deterministic) {
    auto ode = epsilon_ode(EtaProfile::damped_oscillatory(1.0, 1.0), 1, cplx(2.0, 0.5));
    auto a = integrate_numeric(ode, 1.0, 0.3, 1.0, {0.5, 1.5});
    auto b = integrate_numeric(ode, 1.0, 0.3, 1.0, {0.5, 1.5});
    EXPECT_EQ(a.R, b.R);
    for (auto v : a.R) EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "occlab/condition_x.hpp"
#include "occlab/error.hpp"
#include "occlab/quadrature.hpp"

using namespace occlab;

namespace {

StableWithDrift swd(double alpha, double c) { return {StableParams::symmetric(alpha), c}; }

std::vector<double> sinh_nodes(double center, double width) {
    quad::SinhGrid g(center, width, 1e6, 0.02);
    return {g.nodes().begin(), g.nodes().end()};
}

}  // namespace

TEST(StableDrift, CauchyCenter) {
    EXPECT_NEAR(density_stable_drift(1.0, 0.0, 1.0, 0.3, 0.3), 1.0 / std::numbers::pi, 1e-12);
}

TEST(StableDrift, PeakTranslates) {
    const double x = -0.4, c = 1.0, t = 0.5;
    double best = -1.0, arg = 0.0;
    for (int j = -2000; j <= 2000; ++j) {
        const double y = x + c * t + j * 1e-4;
        const double v = density_stable_drift(1.3, c, t, x, y);
        if (v > best) best = v, arg = y;
    }
    EXPECT_NEAR(arg, x + c * t, 1e-4);
}

TEST(StableDrift, MassWithTails) {
    for (double a : {0.5, 0.75, 1.5}) {
        const double t = 0.3, x = 1.0, c = 1.0;
        const auto ys = sinh_nodes(x + c * t, 0.5 * StableParams::symmetric(a).length(t));
        const auto f = dt_density(swd(a, c), t, x, ys);
        EXPECT_NEAR(f.mass, 1.0, 1e-6) << a;
    }
}

TEST(StableDrift, PeakDerivativeByHand) {
    for (double a : {0.5, 1.0, 1.5}) {
        const double t = 0.7;
        const double g0 = density_stable_drift(a, 0.0, 1.0, 0.0, 0.0);
        const double want = -(1.0 / a) * std::pow(t, -1.0 / a - 1.0) * g0;
        EXPECT_NEAR(dt_density_stable_drift(StableParams::symmetric(a), 0.0, t, 0.2, 0.2), want, 1e-9 * std::abs(want));
    }
}

TEST(StableDrift, FiniteDifferenceMatchesAnalytic) {
    struct Case {
        double a, c;
    };
    for (const Case& k : {Case{1.5, 1.0}, Case{0.5, 0.0}, Case{0.75, 0.0}, Case{1.5, 0.0}}) {
        for (double t : {0.01, 0.3, 1.0}) {
            const auto ys = sinh_nodes(k.c * t, 0.5 * StableParams::symmetric(k.a).length(t));
            const auto an = dt_density(swd(k.a, k.c), t, 0.0, ys, DtMethod::Analytic);
            const auto fd = dt_density(swd(k.a, k.c), t, 0.0, ys, DtMethod::FiniteDifference);
            EXPECT_LE(max_relative_gap(an.dp_dt_values, fd.dp_dt_values), 1e-4) << k.a << " " << k.c << " " << t;
        }
    }
}

TEST(StableDrift, FiniteDifferenceNoiseFlag) {
    // alpha = 0.5 with drift: a step of t/100 moves the narrow peak by a
    // sizable fraction of its width, so the two Richardson levels disagree.
    const double t = 1.0;
    const auto ys = sinh_nodes(t, 0.5 * StableParams::symmetric(0.5).length(t));
    EXPECT_THROW(dt_density(swd(0.5, 1.0), t, 0.0, ys, DtMethod::FiniteDifference), NumericalError);
}

TEST(StableDrift, TimeDerivativeHasZeroMass) {
    for (double a : {0.5, 1.5}) {
        const double t = 0.2;
        const auto ys = sinh_nodes(t, 0.5 * StableParams::symmetric(a).length(t));
        const auto f = dt_density(swd(a, 1.0), t, 0.0, ys);
        // Signed integral; the derivative tails decay like |y|^{-1-alpha}.
        double s = 0.0;
        quad::SinhGrid g(t, 0.5 * StableParams::symmetric(a).length(t), 1e6, 0.02);
        for (std::size_t j = 0; j < g.size(); ++j) s += g.weights()[j] * f.dp_dt_values[j];
        double scale = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) scale += g.weights()[j] * std::abs(f.dp_dt_values[j]);
        EXPECT_LE(std::abs(s), 1e-4 * scale) << a;
    }
}

TEST(StableDrift, CentralDifferenceOnPolynomial) {
    double spread = -1.0;
    const double d = central_difference([](double t) { return t * t * t - 2.0 * t; }, 1.5, 0.01, &spread);
    EXPECT_NEAR(d, 3.0 * 2.25 - 2.0, 1e-12);
    EXPECT_GE(spread, 0.0);
}

TEST(EstimateBeta, DriftDominatesBelowOne) {
    const auto ts = logspace(1e-3, 1e-1, 9);
    const auto e = estimate_beta(swd(0.5, 1.0), ts, 0.0, 1.0);
    EXPECT_NEAR(e.beta_hat, 2.0, 0.05);
    EXPECT_GT(e.B_hat, 0.0);
    for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_LE(e.N[i], e.B_hat * std::pow(ts[i], -e.beta_hat) * (1 + 1e-12));
}

TEST(EstimateBeta, AboveOneGivesOne) {
    const auto ts = logspace(1e-3, 1e-1, 9);
    EXPECT_NEAR(estimate_beta(swd(1.5, 1.0), ts, 0.0, 1.0).beta_hat, 1.0, 0.05);
}

TEST(EstimateBeta, DriftFreeScalingGivesOne) {
    // Without drift N(t) = N(1)/t exactly, for every alpha.
    const auto ts = logspace(1e-3, 1e-1, 5);
    for (double a : {0.5, 0.75, 1.5}) {
        const auto e = estimate_beta(swd(a, 0.0), ts, 0.0, 1.0);
        EXPECT_NEAR(e.beta_hat, 1.0, 1e-3) << a;
        EXPECT_NEAR(dt_l1_norm(swd(a, 0.0), 0.01) * 0.01, dt_l1_norm(swd(a, 0.0), 1.0), 1e-4) << a;
    }
}

TEST(EstimateBeta, RejectsShortRange) {
    const auto ts = logspace(1e-2, 5e-1, 5);
    EXPECT_THROW(estimate_beta(swd(0.5, 1.0), ts, 0.0, 1.0), ConfigError);
    const auto late = logspace(1e-2, 2.0, 5);
    EXPECT_THROW(estimate_beta(swd(0.5, 1.0), late, 0.0, 1.0), ConfigError);
}

TEST(EstimateBeta, FitIsExactOnPowerLaw) {
    const auto ts = logspace(1e-3, 1.0, 7);
    std::vector<double> N;
    for (double t : ts) N.push_back(3.0 * std::pow(t, -1.7));
    const auto e = fit_beta(ts, N);
    EXPECT_NEAR(e.beta_hat, 1.7, 1e-12);
    EXPECT_NEAR(e.B_hat, 3.0, 1e-10);
}

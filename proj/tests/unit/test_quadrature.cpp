#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "occlab/quadrature.hpp"

using namespace occlab;

TEST(Quadrature, KronrodWeightsSumToTwo) {
    const auto& r = quad::kronrod21();
    double wk = r.wk[0], wg = r.wg[0];
    for (std::size_t i = 1; i < r.x.size(); ++i) {
        wk += 2 * r.wk[i];
        wg += 2 * r.wg[i];
    }
    EXPECT_NEAR(wk, 2.0, 1e-15);
    EXPECT_NEAR(wg, 2.0, 1e-15);
}

TEST(Quadrature, AdaptiveHandlesVectorsAndPeaks) {
    const double br[] = {-1.0, 0.0, 3.0};
    auto res = quad::integrate<2>(
        [](double x) { return std::array<double, 2>{std::exp(x), 1.0 / (1e-4 + x * x)}; }, br, 1e-11);
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.value[0], std::exp(3.0) - std::exp(-1.0), 1e-11);
    const double a = 1e-2;
    EXPECT_NEAR(res.value[1], (std::atan(3.0 / a) + std::atan(1.0 / a)) / a, 1e-9);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
    const auto r = quad::gauss_legendre(7, 0.0, 2.0);
    double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 13);
    EXPECT_NEAR(s, std::pow(2.0, 14) / 14, 1e-9);
}

TEST(Quadrature, SinhGridGaussianMassAndInterpolation) {
    quad::SinhGrid g(0.3, 0.5, 12.0, 0.05);
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.node(j) - 0.3;
        v[j] = std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi);
    }
    double m = 0;
    for (std::size_t j = 0; j < g.size(); ++j) m += g.weights()[j] * v[j];
    EXPECT_NEAR(m, 1.0, 1e-12);
    for (double x : {-1.234, 0.3, 0.9, 2.5}) {
        const double want = std::exp(-(x - 0.3) * (x - 0.3) / 2) / std::sqrt(2 * std::numbers::pi);
        EXPECT_NEAR(g.interpolate(v, x), want, 2e-5);
    }
    EXPECT_EQ(g.interpolate(v, 100.0, -1.0), -1.0);
}

TEST(Quadrature, PowerTailCompletionRecoversCauchyMass) {
    quad::SinhGrid g(0.0, 1.0, 200.0, 0.02);
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) v[j] = 1.0 / (std::numbers::pi * (1 + g.node(j) * g.node(j)));
    // Raw trapezoid misses 2/(pi*200) of the mass; the completion restores it.
    EXPECT_NEAR(quad::integrate_with_tails(g, v, 1.0), 1.0, 1e-5);
}

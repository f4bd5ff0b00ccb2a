#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "occlab/error.hpp"
#include "occlab/parametrix.hpp"

using namespace occlab;

namespace {

// Small grids: every check here runs in seconds, the full-size run lives in
// the acceptance binary.
ParametrixConfig cheap() {
    ParametrixConfig c;
    c.K_max = 2;
    c.t_lo = 1e-2;
    c.t_min = 1e-1;
    c.per_decade = 2;
    c.extra_times = {0.25, 0.5};
    c.du = 0.2;
    c.reach = 1e2;
    c.n_s = 6;
    c.tau_series = 0.05;
    return c;
}

const Parametrix& cheap_built() {
    static const auto P = [] {
        auto p = std::make_unique<Parametrix>(cheap());
        p->build();
        return p;
    }();
    return *P;
}

// five-point central difference
double fd(const std::function<double(double)>& f, double x, double h) {
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12.0 * h);
}

}  // namespace

TEST(Parametrix, ConfigValidation) {
    auto c = cheap();
    c.p = StableParams::symmetric(1.5);
    EXPECT_THROW(c.validate(), ConfigError);
    c = cheap();
    c.t_min = c.t_lo;
    EXPECT_THROW(c.validate(), ConfigError);
    c = cheap();
    c.drift = DriftSpec::linear(1.0, 0.0);
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(cheap().validate());
}

TEST(Parametrix, ZeroDriftPureTailIsExact) {
    auto c = cheap();
    c.drift = DriftSpec::zero();
    c.tail = TailSpec::pure_stable();
    Parametrix P(c);
    for (double t : {0.01, 0.3, 1.0})
        for (double x : {-1.0, 0.0, 2.0})
            for (double y : {-3.0, 0.1, 2.0, 40.0}) {
                EXPECT_EQ(P.phi(t, x, y), 0.0);
                const double g = symmetric_density(0.75, t, y - x);
                EXPECT_NEAR(P.p0(t, x, y), g, 1e-8 * g);
            }
    P.build();
    for (std::size_t i = 0; i < P.times().size(); ++i) {
        for (int k = 1; k <= c.K_max; ++k)
            for (double v : P.row(k, i)) EXPECT_EQ(v, 0.0);
        EXPECT_EQ(P.density_row(i), P.row(0, i));
    }
    EXPECT_EQ(P.series().tail_bound, 0.0);
}

TEST(Parametrix, ConstantDriftIsExact) {
    auto c = cheap();
    c.drift = DriftSpec::linear(0.0, 0.3);
    c.tail = TailSpec::pure_stable();
    Parametrix P(c);
    for (double t : {0.05, 0.7})
        for (double y : {-1.0, 0.5, 3.0}) {
            EXPECT_EQ(P.phi(t, 0.2, y), 0.0);
            const double g = density_stable_drift(0.75, 0.3, t, 0.2, y);
            EXPECT_NEAR(P.p0(t, 0.2, y), g, 1e-8 * g);
        }
}

// Phi1 = (L_x - d/dt) p0 for a pure stable tail. For the symmetric law the
// stable generator in x acting on g_t(theta - x) equals d/ds g_s(theta - x),
// so Phi1 = b(x) d/dx p0 + d/ds g_s(w)|_{s=t} - d/dt p0 by finite differences.
TEST(Parametrix, DriftCorrectionMatchesGeneratorByDifferences) {
    auto c = cheap();
    c.tail = TailSpec::pure_stable();
    Parametrix P(c);
    for (double t : {0.1, 0.5})
        for (double x : {-0.5, 1.0})
            for (double y : {-0.2, 0.9, 2.5}) {
                const double w = P.theta(t, y) - x;
                const double h = 1e-2;
                const double dx = fd([&](double z) { return P.p0(t, z, y); }, x, h * P.ell(t));
                const double ds = fd([&](double s) { return symmetric_density(0.75, s, w); }, t, h * t);
                const double dt = fd([&](double s) { return P.p0(s, x, y); }, t, h * t);
                const double want = c.drift(x) * dx + ds - dt;
                EXPECT_NEAR(P.phi1(t, x, y), want, 1e-6 + 1e-5 * std::abs(want)) << t << " " << x << " " << y;
            }
}

TEST(TailCorrection, StructureOfTheDifferenceMeasure) {
    const TailCorrection tc(StableParams::symmetric(0.75), TailSpec::tempered(1.0));
    EXPECT_EQ(tc.n(0.5), 0.0);
    EXPECT_NEAR(tc.n(1.0), 0.0, 1e-15);
    EXPECT_NEAR(tc.n(-1.0), 0.0, 1e-15);
    for (double u : {1.5, 3.0, 20.0, -2.0}) EXPECT_LT(tc.n(u), 0.0);
    EXPECT_LT(tc.n_total(), 0.0);
    EXPECT_GT(tc.domination_constant(), 0.0);
    EXPECT_LT(tc.domination_constant(), 10.0);
    const TailCorrection none(StableParams::symmetric(0.75), TailSpec::pure_stable());
    EXPECT_TRUE(none.vanishes());
    EXPECT_EQ(none.phi2(0.3, 1.7), 0.0);
}

// Oracle: Phi2_s(w) = int_{|u|>=1} (g_s(w - u) - g_s(w)) n(u) du by
// Gauss-Kronrod on each half line, without the n(w) subtraction or the tables.
TEST(TailCorrection, TableMatchesDirectQuadrature) {
    const StableParams p = StableParams::symmetric(0.75);
    const TailCorrection tc(p, TailSpec::tempered(1.0));
    const auto g = StableDensityTable::get(0.75, 0.0);
    const double s = 0.25, ell = p.length(s);
    auto gs = [&](double x) { return g->eval(x / ell) / ell; };
    for (double w : {0.0, 0.4, 1.0, 1.3, -2.0, 6.0}) {
        auto f = [&](double u) { return (gs(w - u) - gs(w)) * tc.n(u); };
        double want = 0.0;
        for (double sgn : {1.0, -1.0}) {
            std::vector<double> br{1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0, 1e3, 1e5};
            if (std::abs(w) > 1.0) br.push_back(sgn * w > 1.0 ? sgn * w : 1.0);
            std::sort(br.begin(), br.end());
            for (std::size_t j = 0; j + 1 < br.size(); ++j)
                want += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    [&](double v) { return f(sgn * v); }, br[j], br[j + 1], 15, 1e-13);
            want += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double v) { return f(sgn * v); }, br.back(), std::numeric_limits<double>::infinity(), 15, 1e-13);
        }
        // cubic interpolation on the table grid is good to about 1e-6 near |w| = 2
        EXPECT_NEAR(tc.phi2(s, w), want, 2e-6) << w;
        EXPECT_NEAR(tc.a(s, w), tc.a_direct(s, w, 1e-12), 2e-6) << w;
    }
}

TEST(TailCorrection, SliceHasZeroMass) {
    const TailCorrection tc(StableParams::symmetric(0.75), TailSpec::tempered(1.0));
    const double s = 0.1;
    const auto sl = tc.slice(s);
    const quad::SinhGrid g(0.0, 0.5 * StableParams::symmetric(0.75).length(s), 1e5, 0.05);
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) v[j] = sl(g.node(j));
    EXPECT_NEAR(quad::integrate_with_tails(g, v, 0.75), 0.0, 2e-4 * std::abs(tc.n_total()));
}

TEST(Parametrix, TwoGridStableSemigroup) {
    // int g_{t-s}(z) g_s(y - z) dz = g_t(y)
    Parametrix P(cheap());
    const double t = 0.5;
    for (double s : {1e-3, 0.1, 0.25})
        for (double y : {0.0, 0.3, 5.0}) {
            const double v = P.two_grid_integral(0.0, 0.5 * P.ell(t - s), y, 0.5 * P.ell(s), [&](double z) {
                return symmetric_density(0.75, t - s, z) * symmetric_density(0.75, s, y - z);
            });
            EXPECT_NEAR(v / symmetric_density(0.75, t, y), 1.0, 2e-4) << s << " " << y;
        }
}

TEST(Parametrix, CheapBuildNormalizes) {
    const auto& P = cheap_built();
    for (std::size_t i = 0; i < P.times().size(); ++i) {
        EXPECT_NEAR(P.mass(i), 1.0, 1e-3) << P.times()[i];
        EXPECT_GT(P.mass_p0(i), 1.0);
    }
    const auto& s = P.series();
    ASSERT_EQ(s.term_max.size(), 3u);
    EXPECT_TRUE(s.concave_decreasing);
    EXPECT_GT(s.term_max[0], s.term_max[1]);
    EXPECT_GT(s.term_max[1], s.term_max[2]);
    EXPECT_TRUE(std::isfinite(s.tail_bound));
    EXPECT_LE(s.tail_bound, 0.05);
}

TEST(Parametrix, CheapBuildConstantsFinite) {
    const auto& P = cheap_built();
    const double C = ptx_constant(P);
    EXPECT_TRUE(std::isfinite(C));
    EXPECT_GT(C, 0.5);
    const std::vector<double> ys{-2.0, 0.0, 1.0, 3.0, 20.0};
    const double S = subconvolution_constant(P, 0.5, 0.25, 0.0, ys);
    EXPECT_TRUE(std::isfinite(S));
    EXPECT_GT(S, 0.0);
    const std::vector<double> ts{0.05, 0.5}, xs{-1.0, 2.0};
    EXPECT_TRUE(std::isfinite(phi_bound_constant(P, ts, xs, ys)));
}

TEST(Parametrix, CheapBuildSeriesBudgetFlag) {
    auto c = cheap();
    c.K_max = 1;
    Parametrix P(c);
    EXPECT_THROW(P.build(), NumericalError);
}

TEST(Parametrix, DensityAtMatchesTabulatedRow) {
    const auto& P = cheap_built();
    const std::size_t i = P.time_index(0.25);
    const auto& g = P.grid(i);
    std::vector<double> ys;
    for (std::size_t j = 0; j < g.size(); j += 7) ys.push_back(g.node(j));
    const auto fresh = P.density_at(0.25, ys);
    const auto row = P.density_row(i);
    double mx = 0.0;
    for (double v : row) mx = std::max(mx, v);
    for (std::size_t j = 0; j < ys.size(); ++j) EXPECT_NEAR(fresh[j], row[7 * j], 1e-9 * mx);
}

TEST(Parametrix, TimeDerivativeWithoutDriftMatchesClosedForm) {
    auto c = cheap();
    c.drift = DriftSpec::zero();
    c.tail = TailSpec::pure_stable();
    c.x0 = 0.0;
    Parametrix P(c);
    P.build();
    const double t = 0.2;
    const quad::SinhGrid g(0.0, 0.5 * P.ell(t), 1e2, 0.2);
    const auto dp = P.dt_density_at(t, g.nodes());
    std::vector<double> want(g.size());
    for (std::size_t j = 0; j < g.size(); ++j)
        want[j] = dt_density_stable_drift(StableParams::symmetric(0.75), 0.0, t, 0.0, g.node(j));
    EXPECT_LE(max_relative_gap(want, dp), 1e-3);
}

TEST(Parametrix, ChapmanKolmogorov) {
    const auto& P = cheap_built();
    const std::vector<double> ys{0.5, 1.5, 2.5};
    const auto ck = chapman_kolmogorov(P, 0.25, 1.0, ys);
    ASSERT_EQ(ck.lhs.size(), ys.size());
    EXPECT_LE(ck.max_gap, 5e-3);
}

TEST(Parametrix, KernelCsvShape) {
    const auto& P = cheap_built();
    const std::vector<double> ys{-1.0, 0.0, 1.0};
    const auto csv = kernel_csv(P, -1, ys);
    EXPECT_EQ(csv.rfind("# occlab parametrix kernel v1", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), P.times().size() + 2);
    EXPECT_THROW(kernel_csv(P, 7, ys), ConfigError);
}

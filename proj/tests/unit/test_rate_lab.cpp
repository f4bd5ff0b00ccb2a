#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "occlab/error.hpp"
#include "occlab/rate_lab.hpp"

using namespace occlab;

namespace {

RateConfig small_bm() {
    RateConfig c;
    c.n_list = {4, 8, 16, 32};
    c.m_paths = 3000;
    c.ref_multiplier = 16;
    c.seed = 77;
    return c;
}

}  // namespace

TEST(RateFormulas, RateD) {
    EXPECT_NEAR(rate_D(1.0, 1.0, 10), 0.2302585092994046, 1e-15);
    EXPECT_DOUBLE_EQ(rate_D(2.0, 1.0, 16), 0.25);
    // T^{1-beta}/(beta-1) = 0.5^{-1}/1 = 2 wins over 1
    EXPECT_DOUBLE_EQ(rate_D(2.0, 0.5, 16), 0.5);
    // log(n)/n is equal at n = 2 and n = 4 and strictly decreasing from n = 3 on.
    EXPECT_EQ(rate_D(1.0, 3.0, 2), rate_D(1.0, 3.0, 4));
    for (std::size_t n = 3; n < 200; ++n) EXPECT_GT(rate_D(1.0, 3.0, n), rate_D(1.0, 3.0, n + 1));
    EXPECT_THROW(rate_D(0.5, 1.0, 10), ConfigError);
    EXPECT_THROW(rate_D(1.0, 1.0, 1), ConfigError);
}

TEST(RateFormulas, ConstC) {
    EXPECT_DOUBLE_EQ(const_C(1.0, 2.0, 1.0), std::sqrt(28.0));
    EXPECT_DOUBLE_EQ(const_C(2.0, 2.0, 1.0), 2.0 * std::sqrt(28.0));
    EXPECT_DOUBLE_EQ(const_C(1.0, 1.0, 1.0), std::sqrt(28.0));
    EXPECT_DOUBLE_EQ(const_C(1.0, 3.0, 2.0), std::sqrt(168.0));
}

TEST(RateFormulas, AnalyticConstant) {
    RateConfig c;
    c.n_list = {2};
    c.h = FunctionalSpec::scaled_indicator(0.5, 0.0);
    EXPECT_DOUBLE_EQ(analytic_constant(c, AnalyticSpec::exp_neg(1.0)), 24.0);
    EXPECT_THROW(analytic_constant(c, AnalyticSpec::exp_neg(0.5)), ConfigError);
}

TEST(RateFormulas, TheoryColumnsDecreaseAndScaleInT) {
    RateConfig c = small_bm();
    c.h = FunctionalSpec::constant(1.0);
    const auto r1 = strong_error(c);
    for (std::size_t j = 1; j < r1.rows.size(); ++j) EXPECT_LT(r1.rows[j].theory_bound, r1.rows[j - 1].theory_bound);
    c.T = 2.0;
    c.m_paths = 10;
    const auto r2 = strong_error(c);
    for (std::size_t j = 0; j < r1.rows.size(); ++j)
        EXPECT_DOUBLE_EQ(r2.rows[j].theory_bound, 2.0 * r1.rows[j].theory_bound);
}

TEST(FitRate, Examples) {
    const std::vector<std::size_t> n = {8, 16, 32, 64, 128, 256, 512, 1024};
    std::vector<double> e;
    for (auto k : n) e.push_back(4.0 / std::sqrt(double(k)));
    auto f = fit_rate(n, e);
    EXPECT_NEAR(f.slope, -0.5, 1e-13);
    EXPECT_NEAR(f.intercept, std::log(4.0), 1e-12);
    EXPECT_NEAR(f.slope_ci, 0.0, 1e-12);

    f = fit_rate(n, std::vector<double>(n.size(), 0.3));
    EXPECT_NEAR(f.slope, 0.0, 1e-14);

    std::vector<std::size_t> all;
    e.clear();
    for (std::size_t k = 8; k <= 1024; ++k) {
        all.push_back(k);
        e.push_back(std::log(double(k)) / k);
    }
    f = fit_rate(all, e);
    EXPECT_GT(f.slope, -1.0);
    EXPECT_LT(f.slope, -0.8);

    EXPECT_THROW(fit_rate({8, 16, 32}, {1.0, 0.0, 0.5}), NumericalError);
}

TEST(RateLab, ConstantFunctionalGivesZero) {
    RateConfig c = small_bm();
    c.h = FunctionalSpec::constant(0.7);
    const auto s = strong_error(c);
    for (const auto& r : s.rows) EXPECT_EQ(r.error, 0.0);
    EXPECT_FALSE(s.fit.has_value());
    EXPECT_FALSE(s.fit_note.empty());
    const auto w = weak_error(c);
    for (const auto& r : w.rows) EXPECT_EQ(r.error, 0.0);
    const auto sample = coupled_sample(c);
    const AnalyticSpec one{[](double) { return 1.0; }, 1.0, 1.0};
    c.h = FunctionalSpec::indicator_below(0.0);
    c.h = FunctionalSpec::scaled_indicator(0.5, 0.0);
    const auto a = analytic_report(c, one, coupled_sample(c));
    for (const auto& r : a.rows) EXPECT_EQ(r.error, 0.0);
}

TEST(RateLab, WorkerCountDoesNotChangeResults) {
    RateConfig c = small_bm();
    c.workers = 1;
    const auto a = coupled_sample(c);
    c.workers = 3;
    const auto b = coupled_sample(c);
    EXPECT_EQ(a.ref, b.ref);
    EXPECT_EQ(a.coarse, b.coarse);
    EXPECT_EQ(a.terminal, b.terminal);
}

TEST(RateLab, SingleNRerunReproducesRow) {
    RateConfig c = small_bm();
    const auto full_s = strong_error(c);
    const auto full_w = weak_error(c);
    const std::size_t nr = c.resolved_n_ref();
    for (std::size_t j = 0; j < c.n_list.size(); ++j) {
        RateConfig one = c;
        one.n_list = {c.n_list[j]};
        one.n_ref = nr;
        const auto rs = strong_error(one);
        const auto rw = weak_error(one);
        EXPECT_EQ(rs.rows[0].error, full_s.rows[j].error);
        EXPECT_EQ(rs.rows[0].ci, full_s.rows[j].ci);
        EXPECT_EQ(rw.rows[0].error, full_w.rows[j].error);
    }
}

TEST(RateLab, MomentOrderingAndWeakVsStrong) {
    RateConfig c = small_bm();
    c.model = StableWithDrift{StableParams::symmetric(1.2), 0.5};
    const auto s = coupled_sample(c);
    c.p_strong = 1.0;
    const auto l1 = strong_report(c, s);
    c.p_strong = 0.5;
    const auto lhalf = strong_report(c, s);
    c.p_strong = 3.0;
    const auto l3 = strong_report(c, s);
    const auto w = weak_report(c, s);
    for (std::size_t j = 0; j < l1.rows.size(); ++j) {
        EXPECT_LE(lhalf.rows[j].error, l1.rows[j].error);
        EXPECT_LE(l1.rows[j].error, l3.rows[j].error);
        EXPECT_LE(std::abs(w.rows[j].error), l1.rows[j].error);
        EXPECT_GE(l3.rows[j].ci, 0.0);
    }
}

TEST(RateLab, ConfigValidation) {
    RateConfig c = small_bm();
    c.n_list = {8, 4};
    EXPECT_THROW(c.validate(), ConfigError);
    c.n_list = {1, 4};
    EXPECT_THROW(c.validate(), ConfigError);
    c.n_list = {4, 6};
    c.n_ref = 64;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_bm();
    c.beta = 0.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_bm();
    c.p_strong = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RateLab, BrownianWeakErrorMatchesExactBias) {
    // From x0 = 0 only the t = 0 node is biased: E J = -T/(2n) + T/(2 n_ref).
    RateConfig c;
    c.n_list = {8, 16, 32, 64};
    c.m_paths = 20000;
    c.ref_multiplier = 16;
    c.seed = 12;
    const auto r = weak_error(c);
    const double nr = double(c.resolved_n_ref());
    for (const auto& row : r.rows) {
        const double exact = -0.5 / row.n + 0.5 / nr;
        EXPECT_LT(std::abs(row.error - exact), row.ci * 1.5) << row.n;
    }
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_NEAR(r.fit->slope, -1.0, 0.05);
}

TEST(RateLab, BrownianStrongSlopeNearThreeQuarters) {
    // Centered part of the L2 error decays like n^{-3/4} for Brownian
    // occupation times; the n^{-1} bias steepens small-n rows a little.
    RateConfig c;
    c.n_list = {8, 16, 32, 64, 128};
    c.m_paths = 4000;
    c.ref_multiplier = 16;
    c.seed = 5;
    const auto r = strong_error(c);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_GT(r.fit->slope, -0.9);
    EXPECT_LT(r.fit->slope, -0.65);
}

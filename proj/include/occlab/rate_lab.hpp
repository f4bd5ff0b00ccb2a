#pragma once

// Monte Carlo strong/weak error estimation for Riemann-sum approximations of
// integral functionals, with the theoretical rate D_{T,beta}(n) and constants.

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occlab/functionals.hpp"
#include "occlab/models.hpp"

namespace occlab {

/// D_{T,beta}(n): log(n)/n for beta = 1, max(1, T^{1-beta}/(beta-1)) n^{-1/beta} above.
double rate_D(double beta, double T, std::size_t n);

/// C_{T,p}: sqrt(14 p (p-1) B) T for p >= 2, sqrt(28 B) T for 0 < p < 2.
double const_C(double T, double p, double B);

struct RateConfig {
    ProcessModel model = BrownianMotion{};
    FunctionalSpec h = FunctionalSpec::indicator_below(0.0);
    double x0 = 0.0;
    double T = 1.0;
    std::vector<std::size_t> n_list;
    double p_strong = 2.0;
    int k_weak = 1;
    FunctionalSpec f_weak = FunctionalSpec::constant(1.0);
    std::size_t m_paths = 100000;
    std::uint64_t seed = 1;
    double beta = 1.0;
    double B_guess = 1.0;
    std::size_t ref_multiplier = 64;
    std::size_t n_ref = 0;  ///< 0: ref_multiplier * max(n_list)
    unsigned workers = 1;

    std::size_t resolved_n_ref() const;
    void validate() const;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_ci = 0.0;  ///< 95% half-width
    std::size_t used = 0;
};

/// OLS of log(error) on log(n); non-positive errors are dropped. Throws
/// NumericalError with fewer than 3 usable rows.
FitResult fit_rate(const std::vector<std::size_t>& n, const std::vector<double>& error);

/// OLS of log(y) on log(x) over pairs with x, y > 0.
FitResult fit_loglog(std::span<const double> x, std::span<const double> y);

struct RateRow {
    std::size_t n = 0;
    double error = 0.0;
    double ci = 0.0;
    double theory_bound = 0.0;
    bool wide_ci = false;       ///< ci > 0.5 * |error|
    bool below_signal = false;  ///< weak rows with |error| <= 3 ci, excluded from the fit
};

struct RateReport {
    std::vector<RateRow> rows;
    std::optional<FitResult> fit;  ///< empty when fewer than 3 rows qualify
    std::string fit_note;
    bool bound_satisfied = false;
    std::size_t n_ref = 0;
    std::size_t m_paths = 0;
};

/// Per-path functionals on coupled grids: ref[i] = I_{T,n_ref}, coarse[j][i] =
/// I_{T,n_list[j]} on the same fine path, terminal[i] = X_T.
struct CoupledSample {
    std::vector<std::size_t> n_list;
    std::size_t n_ref = 0;
    std::vector<double> ref;
    std::vector<std::vector<double>> coarse;
    std::vector<double> terminal;
};

CoupledSample coupled_sample(const RateConfig& cfg);

RateReport strong_report(const RateConfig& cfg, const CoupledSample& s);
RateReport weak_report(const RateConfig& cfg, const CoupledSample& s);

RateReport strong_error(const RateConfig& cfg);
RateReport weak_error(const RateConfig& cfg);

/// Analytic phi with |phi^(m)(0)/m!| <= D (1/R)^m.
struct AnalyticSpec {
    std::function<double(double)> phi;
    double D = 1.0;
    double R = 1.0;

    static AnalyticSpec exp_neg(double R) { return {[](double z) { return std::exp(-z); }, 1.0, R}; }
};

/// C_{T,X,h,phi} = 2^{max(beta,2)} D B (T^2 ||h|| / R)(1 + T||h||/R)(1 - T||h||/R)^{-3}.
double analytic_constant(const RateConfig& cfg, const AnalyticSpec& phi);

/// C_{T,X,h,phi} ||f|| D_{T,beta}(n).
double analytic_weak_bound(const RateConfig& cfg, const AnalyticSpec& phi, std::size_t n);

/// Rows of |E phi(I_ref) f(X_T) - E phi(I_n) f(X_T)| with the bound as theory column.
RateReport analytic_report(const RateConfig& cfg, const AnalyticSpec& phi, const CoupledSample& s);

/// 5 B T ||h|| D_{T,beta}(n), the k = 1, f = 1 weak bound.
double weak_bound_k1(const RateConfig& cfg, std::size_t n);

}  // namespace occlab

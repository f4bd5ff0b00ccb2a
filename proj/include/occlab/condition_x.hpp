#pragma once

// Condition X for closed-form models: transition densities of the stable
// process with constant drift, their time derivatives, and the estimate of
// (beta, B) from N(t) = int |d/dt p_t(x,y)| dy <= B t^{-beta}.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "occlab/models.hpp"
#include "occlab/rate_lab.hpp"

namespace occlab {

/// p_t(x,y) = g_t(y - x - c t)
double density_stable_drift(const StableParams& p, double c, double t, double x, double y);
double density_stable_drift(double alpha, double c, double t, double x, double y);

/// d/dt p_t(x,y) from the scaling form: with z = (y - x - c t)/l_t,
/// l_t^{-1} [ -(g(z) + z g'(z))/(alpha t) - c g'(z)/l_t ].
double dt_density_stable_drift(const StableParams& p, double c, double t, double x, double y);

struct DensityField {
    double t = 0.0;
    double x = 0.0;
    std::vector<double> y_grid;
    std::vector<double> p_values;
    std::vector<double> dp_dt_values;
    double mass = 0.0;  ///< int p dy with tail completion
};

enum class DtMethod { Analytic, FiniteDifference };

/// Richardson-extrapolated central difference of f at t with steps h and h/2.
/// `spread` receives |D(h) - D(h/2)|.
double central_difference(const std::function<double(double)>& f, double t, double h,
                          double* spread = nullptr);

/// p and d/dt p on y_grid. FiniteDifference uses h_t = t/100 with Richardson
/// extrapolation and throws NumericalError when max |D(h) - D(h/2)| exceeds 1%
/// of max |d/dt p| on the grid.
DensityField dt_density(const StableWithDrift& m, double t, double x, std::span<const double> y_grid,
                        DtMethod method = DtMethod::Analytic);

/// max_j |a_j - b_j| / max_j |a_j|
double max_relative_gap(std::span<const double> a, std::span<const double> b);

/// N(t) = int |d/dt p_t(x,y)| dy for the stable process with drift c
/// (independent of x).
double dt_l1_norm(const StableWithDrift& m, double t);

struct BetaEstimate {
    double beta_hat = 0.0;
    double beta_ci = 0.0;
    double B_hat = 0.0;
    std::vector<double> t;
    std::vector<double> N;
};

/// Slope fit of log N against log t; B_hat = max N(t) t^{beta_hat}.
BetaEstimate fit_beta(std::span<const double> t, std::span<const double> N);

/// t_list must span at least two decades inside (0, T].
BetaEstimate estimate_beta(const StableWithDrift& m, std::span<const double> t_list, double x, double T);

/// n log-spaced points on [lo, hi].
std::vector<double> logspace(double lo, double hi, std::size_t n);

/// Integral of sorted samples (y, f) by the trapezoid rule plus power-tail
/// completion with exponent -1-alpha on both ends.
double integrate_samples(std::span<const double> y, std::span<const double> f, double alpha);

}  // namespace occlab

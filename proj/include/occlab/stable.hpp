#pragma once

// Alpha-stable laws: characteristic exponent, exact sampling, densities with
// spatial derivatives, and the tabulated fast path used by the parametrix.
//
// Normalization. For c_plus == c_minus the law is canonical,
// E exp(i xi Z_t) = exp(-t * scale * |xi|^alpha), whatever the magnitude of
// C+-. Otherwise psi is the exact Levy integral of scale * C+- |u|^{-1-alpha},
// which in the S1 form reads
//   psi(xi) = sigma^alpha |xi|^alpha (1 - i beta sgn(xi) tan(pi alpha / 2)),
//   sigma^alpha = k (C+ + C-) cos(pi alpha / 2) scale,  k = -Gamma(-alpha),
//   beta = (C+ - C-) / (C+ + C-).
// alpha = 1 is admitted only symmetric (Cauchy); alpha = 2 is the Gaussian
// with psi = scale * xi^2.

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "occlab/rng.hpp"

namespace occlab {

struct StableParams {
    double alpha = 1.0;
    double c_plus = 1.0;
    double c_minus = 1.0;
    double scale = 1.0;

    static StableParams symmetric(double alpha, double scale = 1.0) {
        return {alpha, 1.0, 1.0, scale};
    }

    /// Throws ConfigError on out-of-range fields.
    void validate() const;
    bool is_symmetric() const { return alpha == 2.0 || c_plus == c_minus; }
    /// Skewness beta in [-1, 1].
    double skew() const;
    /// sigma^alpha per unit time.
    double sigma_alpha() const;
    /// Scale length of Z_t: (sigma^alpha t)^{1/alpha}.
    double length(double t) const;
    /// Levy density weights (per unit time) on u > 0 and u < 0, i.e. the
    /// effective C+- after the normalization above. Zero for alpha = 2.
    std::pair<double, double> levy_weights() const;
};

/// -Gamma(-alpha), the constant in the stable Levy integral (alpha != 1).
double levy_k(double alpha);

std::complex<double> char_exponent(const StableParams& p, double xi);

/// Standardized S1 variate (sigma = 1, skewness beta).
double sample_standard(double alpha, double beta, RngStream& rng);
/// One exact draw of Z_t.
double sample_stable(const StableParams& p, double t, RngStream& rng);
/// Fills `out` with independent draws of Z_t.
void sample_stable(const StableParams& p, double t, RngStream& rng, std::span<double> out);

/// f, f', f'', f''' of the standardized density (sigma = 1, skewness beta).
/// Throws NumericalError if the quadrature budget is exhausted.
std::array<double, 4> standard_density(double alpha, double beta, double x);

/// g_t(x) or its order-th spatial derivative (order 0..3), evaluated directly.
double stable_density(const StableParams& p, double t, double x, int order = 0);

/// Density of the canonical symmetric law exp(-t |xi|^alpha).
double symmetric_density(double alpha, double t, double x, int order = 0);

/// Cubic Hermite table of the standardized density and its first two
/// derivatives on a sinh-graded grid; asymptotic series beyond it.
class StableDensityTable {
  public:
    StableDensityTable(double alpha, double beta, double du = 0.01, double reach = 1e4,
                       double width = 0.25);

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    /// order 0..2
    double eval(double z, int order = 0) const;
    /// {f(z), f'(z)} with one grid lookup.
    std::array<double, 2> eval01(double z) const;

    /// Shared instance per (alpha, beta); thread-safe.
    static std::shared_ptr<const StableDensityTable> get(double alpha, double beta);

  private:
    double alpha_, beta_, du_, width_, umax_;
    // Beyond the grid: f^{(n)}(z) = |z|^{-n-1} sum_k c[side][n][k] |z|^{-(k+1) alpha}.
    std::array<std::array<std::array<double, 8>, 3>, 2> tail_{};
    std::vector<double> z_;
    std::vector<std::array<double, 4>> f_;
};

/// Table-backed version of stable_density (order 0..2).
double stable_density_fast(const StableParams& p, double t, double x, int order = 0);

struct DominationReport {
    std::array<double, 3> constant{};  // C0, C1, C2
    std::array<double, 3> argmax{};
    std::array<bool, 3> bounded{true, true, true};
    bool ok() const { return bounded[0] && bounded[1] && bounded[2]; }
};

/// Empirical minimal C_k with |g^{(k)}(x)| (1+|x|)^k <= C_k g^{(alpha)}(x) on
/// the grid (t = 1, g^{(alpha)} canonical symmetric). A ratio that keeps
/// growing one to two decades beyond the grid edge is flagged as unbounded.
DominationReport check_density_domination(const StableParams& p, std::span<const double> grid);

/// Integral of g_t over the line: sinh-grid trapezoid plus power-tail completion.
double density_mass(const StableParams& p, double t);

}  // namespace occlab

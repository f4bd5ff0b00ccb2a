#pragma once

// Down-and-out style occupation-time call: payoff
//   exp(-rT) exp(-rho * occupation time of {S <= L}) (S_T - K)_+,  S = s0 exp(X),
// priced by Monte Carlo on discrete grids, with the error bounds for the
// discrete-monitoring approximation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "occlab/models.hpp"

namespace occlab {

struct OptionSpec {
    double s0 = 1.0;
    double K = 1.0;
    double L = 0.9;
    double rho = 1.0;
    double r = 0.0;
    double T = 1.0;
    double lambda_moment = 2.0;  ///< lambda > 1 with E S_T^lambda finite

    void validate() const;
    /// Level of X corresponding to S <= L.
    double log_barrier() const;
};

struct PriceEstimate {
    double price = 0.0;
    double ci = 0.0;  ///< 1.96 standard errors
};

/// Discrete monitoring on n steps, n >= 2, S_t = s0 exp(X_t) with X_0 = 0.
PriceEstimate price_discrete(const OptionSpec& opt, const ProcessModel& model, std::size_t n, std::size_t m_paths,
                             std::uint64_t seed, unsigned workers = 1);
/// Same estimator on the fine reference grid.
PriceEstimate price_reference(const OptionSpec& opt, const ProcessModel& model, std::size_t n_ref,
                              std::size_t m_paths, std::uint64_t seed, unsigned workers = 1);

/// Per-path discounted payoff from a path of X on n + 1 nodes thinned by
/// `stride` out of `states`.
double option_payoff(const OptionSpec& opt, std::span<const double> states, std::size_t stride, std::size_t n);

/// European call on the lognormal S_T of Brownian X with Var X_T = 2 d T.
double lognormal_call(const OptionSpec& opt, double diffusion);

struct MomentEstimate {
    double G = 0.0;
    double ci = 0.0;
    bool heavy_tail = false;  ///< ci above 25% of G
};
/// G(lambda) = E S_T^lambda by Monte Carlo.
MomentEstimate estimate_G(const OptionSpec& opt, const ProcessModel& model, std::size_t m_paths, std::uint64_t seed,
                          unsigned workers = 1);
/// Throws ConfigError for models whose exponential moments diverge.
void require_moment_model(const ProcessModel& model);

/// exp(-rT) rho G^{1/lambda} C_{T, lambda/(lambda-1)} D_{T,beta}(n)^{1/2}
double bound_prop41(const OptionSpec& opt, double beta, double B, std::size_t n, double G);
/// n^{-(1-1/lambda)} log n for beta = 1, max(1, T^{1-beta}/(beta-1)) n^{-(1-1/lambda)/beta} above.
double rate_D_tilde(double beta, double T, double lambda, std::size_t n);
/// 2^{max(beta,2)+1} max{B rho T^2 (1 + rho T) e^{rho T}, G} exp(-rT) D~(n)
double bound_prop42(const OptionSpec& opt, double beta, double B, std::size_t n, double G);
/// Truncation level N = n^{1/(beta lambda)} used by the second bound.
double truncation_level(double beta, double lambda, std::size_t n);

struct OptionConfig {
    OptionSpec opt;
    ProcessModel model = BrownianMotion{};
    std::vector<std::size_t> n_list;
    std::size_t m_paths = 100000;
    std::uint64_t seed = 1;
    std::size_t ref_multiplier = 64;
    std::size_t n_ref = 0;  ///< 0: ref_multiplier * max(n_list)
    double beta = 1.0;
    double B = 1.0;
    double G = 0.0;  ///< 0: estimate by Monte Carlo on the same paths
    unsigned workers = 1;

    std::size_t resolved_n_ref() const;
    void validate() const;
};

struct PriceRow {
    std::size_t n = 0;
    double price = 0.0, ci = 0.0;
    double ref_price = 0.0, ref_ci = 0.0;
    double gap = 0.0, gap_ci = 0.0;  ///< mean and CI of C_n - C_ref on shared paths
    double bound41 = 0.0, bound42 = 0.0;
};

struct PriceTable {
    std::vector<PriceRow> rows;
    std::size_t n_ref = 0;
    MomentEstimate G;
};

/// Coupled table: every n is evaluated on the same fine paths as the reference.
PriceTable price_table(const OptionConfig& cfg);

}  // namespace occlab

#pragma once

// Parametrix construction of the transition density of
//   dX = b(X) dt + dZ,  Z locally alpha-stable (alpha < 1),
// with zero-order kernel p0_t(x,y) = g_t(theta_t(y) - x) and correction
//   Phi = (L_x - d/dt) p0 = Phi1 + Phi2,
//   Phi1 = (b(theta_t(y)) - b(x)) l_t^{-2} g'((theta_t(y) - x)/l_t),
//   Phi2 = int_{|u|>=1} (g_t(w - u) - g_t(w)) (m(u) - m_stable(u)) du,  w = theta_t(y) - x.
// For a fixed start x0 the density is the sum of rows R^k = p0 * Phi^{*k}
// (space-time convolution), R^k = R^{k-1} * Phi, each tabulated on a
// log-spaced time grid and a sinh-graded spatial grid per time.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "occlab/condition_x.hpp"
#include "occlab/models.hpp"
#include "occlab/quadrature.hpp"

namespace occlab {

struct ParametrixConfig {
    DriftSpec drift = DriftSpec::tanh(0.5, 1.0);
    StableParams p = StableParams::symmetric(0.75);
    TailSpec tail = TailSpec::tempered(1.0);
    double x0 = 2.0;
    double T = 1.0;
    int K_max = 4;
    double t_lo = 1e-4;   ///< smallest tabulated time / T
    double t_min = 1e-3;  ///< smallest checked time / T
    int per_decade = 6;
    std::vector<double> extra_times{0.1, 0.5};  ///< absolute times added when inside the grid
    double du = 0.1;       ///< sinh step of every spatial grid
    double width = 0.5;    ///< grid width in units of l_t
    double reach = 1e3;    ///< absolute reach of spatial grids
    int n_s = 16;          ///< Gauss-Legendre nodes per half of the time integral
    double tau_series = 1e-3;
    unsigned workers = 1;

    void validate() const;
};

/// Phi2 structure: A_s(w) = int_{|u|>=1} g_s(w - u) n(u) du with
/// n = m - m_stable, tabulated per s; Phi2_s(w) = A_s(w) - n_total g_s(w).
class TailCorrection {
  public:
    TailCorrection(const StableParams& p, const TailSpec& tail);

    double n(double u) const;
    double n_total() const { return n_total_; }
    bool vanishes() const { return zero_; }
    /// Direct adaptive evaluation of A_s(w).
    double a_direct(double s, double w, double tol = 1e-11) const;
    /// Table-backed A_s(w); tables are built on first use per s.
    double a(double s, double w) const;
    double phi2(double s, double w) const;
    /// sup_{|u|>=1} |n(u)| / g^{(alpha)}(u)
    double domination_constant() const;

    struct Table {
        std::vector<double> w, v;
    };
    /// Phi2_s(.) with the table for s resolved once.
    class Slice {
      public:
        double operator()(double w) const;
        /// Same with g_s(w) supplied by the caller.
        double with_density(double w, double gs) const;

      private:
        friend class TailCorrection;
        const TailCorrection* tc_ = nullptr;
        const Table* tab_ = nullptr;
        const StableDensityTable* g_ = nullptr;
        double ell_ = 1.0;
    };
    Slice slice(double s) const;

  private:
    const Table& table(double s) const;

    StableParams p_;
    TailSpec tail_;
    double n_total_ = 0.0, cp_ = 0.0, cm_ = 0.0;
    bool zero_ = false;
    mutable std::mutex mu_;
    mutable std::map<double, std::shared_ptr<const Table>> cache_;
};

/// Tabulated row (function of one spatial variable) on a time grid.
struct KernelTable {
    int order = 0;  ///< leading power of t as t -> 0, used below the grid
    std::vector<double> times;
    std::vector<quad::SinhGrid> grids;
    std::vector<double> ells;  ///< l_t at each tabulated time
    std::vector<std::vector<double>> values;

    /// Value at (t, v); `center`, `ell` locate the spike at t.
    double value(double t, double v, double center, double ell) const;
};

class Parametrix {
  public:
    explicit Parametrix(ParametrixConfig cfg);

    const ParametrixConfig& config() const { return cfg_; }
    double ell(double t) const { return cfg_.p.length(t); }
    double chi(double t, double x) const { return flow_chi(cfg_.drift, x, t); }
    double theta(double t, double y) const { return flow_theta(cfg_.drift, y, t); }

    double p0(double t, double x, double y) const;
    double phi1(double t, double x, double y) const;
    double phi2(double t, double x, double y) const;
    double phi(double t, double x, double y) const { return phi1(t, x, y) + phi2(t, x, y); }
    /// (g^{(alpha)}_{t+1} + g^{(alpha)}_t)(d), canonical symmetric law.
    double envelope(double t, double d) const;
    const TailCorrection& tail() const { return *tail_; }

    /// Builds rows R^1..R^K_max; idempotent.
    void build();
    bool built() const { return !rows_.empty(); }

    const std::vector<double>& times() const { return times_; }
    /// Spatial grid at time index i (centered at chi_t(x0)).
    const quad::SinhGrid& grid(std::size_t i) const { return grids_[i]; }
    /// R^k at time index i on grid(i); k = 0 is p0.
    std::vector<double> row(int k, std::size_t i) const;
    /// p_t(x0, .) on grid(i).
    std::vector<double> density_row(std::size_t i) const;

    /// p_t(x0, y) at arbitrary t by one more convolution of the tabulated rows.
    std::vector<double> density_at(double t, std::span<const double> ys) const;
    /// Richardson central difference in t with h = t/100; `spread` gets
    /// max |D(h) - D(h/2)|.
    std::vector<double> dt_density_at(double t, std::span<const double> ys, double* spread = nullptr) const;

    /// (R * Phi)(t, ys) for a tabulated or closed-form previous row.
    std::vector<double> convolve_row(const KernelTable* prev, double t, std::span<const double> ys) const;

    /// int f(z) dz split between sinh grids around two spikes with a smooth
    /// partition of unity; each grid integrates where it is the finer one.
    template <class F>
    double two_grid_integral(double ca, double wa, double cb, double wb, F&& f) const {
        const double du = cfg_.du, reach = cfg_.reach;
        double acc = 0.0;
        auto pass = [&](double c, double w, double oc, double ow) {
            const double umax = std::ceil(std::asinh(reach / w) / du) * du;
            const auto n = static_cast<long>(std::lround(2.0 * umax / du));
            for (long j = 0; j <= n; ++j) {
                const double u = -umax + static_cast<double>(j) * du;
                const double sh = std::sinh(u);
                const double z = c + w * sh;
                const double h2 = (z - c) * (z - c) + w * w, o2 = (z - oc) * (z - oc) + ow * ow;
                const double phi = o2 * o2 / (o2 * o2 + h2 * h2);
                if (phi < 1e-16) continue;
                const double wt = (j == 0 || j == n ? 0.5 : 1.0) * du * w * std::sqrt(1.0 + sh * sh);
                acc += wt * phi * f(z);
            }
        };
        pass(ca, wa, cb, wb);
        pass(cb, wb, ca, wa);
        return acc;
    }

    // Diagnostics.
    struct SeriesReport {
        std::vector<double> term_max;   ///< max_y |R^k_T(x0, y)|, k = 0..K
        std::vector<double> term_mass;  ///< int R^k_T(x0, y) dy
        double C0_hat = 0.0, C_hat = 0.0;
        double tail_bound = 0.0;
        bool concave_decreasing = false;
    };
    const SeriesReport& series() const { return series_; }

    double mass(std::size_t i) const;
    double mass_p0(std::size_t i) const;
    std::size_t time_index(double t) const;

  private:
    void fit_envelope();

    ParametrixConfig cfg_;
    std::shared_ptr<TailCorrection> tail_;
    std::shared_ptr<const StableDensityTable> g_, gsym_;
    std::vector<double> times_;
    std::vector<quad::SinhGrid> grids_;
    std::vector<KernelTable> rows_;  // rows_[k-1] = R^k
    SeriesReport series_;
};

/// Empirical sup of p_t(x0,y) / (g_{t+1} + g_t)(y - chi_t(x0)) over the
/// tabulated (t >= t_min, y).
double ptx_constant(const Parametrix& P);

/// Empirical sup of |Phi_t(x,y)| / (g_{t+1} + g_t)(theta_t(y) - x).
double phi_bound_constant(const Parametrix& P, std::span<const double> t_list, std::span<const double> x_list,
                          std::span<const double> y_list);

/// Empirical sup over y of
/// int g_{t-s}(theta_{t-s}(z) - x) g_s(theta_s(y) - z) dz / g_t(theta_t(y) - x).
double subconvolution_constant(const Parametrix& P, double t, double s, double x, std::span<const double> y_list);

struct DtBoundReport {
    std::vector<double> t;
    std::vector<double> N;      ///< int |d/dt p_t(x0, y)| dy
    std::vector<double> ratio;  ///< sup_y |d/dt p| t^{1/alpha} / (g_{t+1}+g_t)(y - chi_t(x0))
    double sup_ratio = 0.0;
    BetaEstimate beta;
    double fd_spread = 0.0;  ///< worst |D(h) - D(h/2)| relative to max |d/dt p|
};

/// Finite-difference d/dt p over log-spaced t in [t_min T, t_hi T].
DtBoundReport check_dt_bound(const Parametrix& P, std::size_t n_t = 9, double t_hi = 0.1);

/// int p_s(x0,z) p_{t-s}(z,y) dz versus p_t(x0,y) for y in `ys`; returns the
/// max absolute gap. p_{t-s}(z,y) comes from a column construction in z.
struct ChapmanKolmogorov {
    std::vector<double> y, lhs, rhs;
    double max_gap = 0.0;
};
ChapmanKolmogorov chapman_kolmogorov(const Parametrix& P, double s, double t, std::span<const double> ys);

/// Writes t rows of p (or R^k for k >= 0) interpolated on a common y grid.
std::string kernel_csv(const Parametrix& P, int k, std::span<const double> y_grid);

}  // namespace occlab

#pragma once

// Integral functionals I_T(h) along a path, their left Riemann sums on a
// uniform grid, and coupled coarse/fine evaluation on one fine path.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>

#include "occlab/models.hpp"

namespace occlab {

class FunctionalSpec {
  public:
    enum class Kind { IndicatorBelow, IndicatorInterval, ScaledIndicator, BoundedSmooth };

    /// h(x) = 1{x <= level}; level = +inf gives h = 1.
    static FunctionalSpec indicator_below(double level);
    /// h(x) = 1{lo <= x <= hi}
    static FunctionalSpec indicator_interval(double lo, double hi);
    /// h(x) = rho 1{x <= level}
    static FunctionalSpec scaled_indicator(double rho, double level);
    /// Bounded callable with declared sup-norm.
    static FunctionalSpec smooth(std::function<double(double)> h, double sup_norm);
    static FunctionalSpec constant(double value) {
        return scaled_indicator(value, std::numeric_limits<double>::infinity());
    }

    Kind kind() const { return kind_; }
    double operator()(double x) const;
    /// ||h|| = sup |h|
    double sup_norm() const;
    bool is_constant() const;
    double level() const { return hi_; }
    double rho() const { return rho_; }

    /// sum_{k < count} h(x[k * stride])
    double grid_sum(std::span<const double> x, std::size_t stride, std::size_t count) const;

  private:
    Kind kind_ = Kind::IndicatorBelow;
    double lo_ = -std::numeric_limits<double>::infinity();
    double hi_ = std::numeric_limits<double>::infinity();
    double rho_ = 1.0;
    double sup_ = 1.0;
    std::function<double(double)> fn_;
};

/// (T/n) sum_{k=0}^{n-1} h(X_{kT/n}); the final node is excluded.
double riemann_functional(const PathGrid& path, const FunctionalSpec& h);

/// Riemann sum over the coarse sub-grid with n_coarse cells of `fine`.
double riemann_on_subgrid(const PathGrid& fine, const FunctionalSpec& h, std::size_t n_coarse);

/// Every n_ref / n_coarse-th node of `fine`.
PathGrid thin_path(const PathGrid& fine, std::size_t n_coarse);

/// One fine path at resolution n_ref and its Riemann sum, the proxy for
/// I_T(h). `coarse` lists the grids that will be compared against it; each
/// must divide n_ref.
std::pair<double, PathGrid> reference_functional(const ProcessModel& m, double x0, double T,
                                                 const FunctionalSpec& h, std::size_t n_ref,
                                                 RngStream& rng,
                                                 std::span<const std::size_t> coarse = {});

/// J = I_{T,n_ref}(h) - I_{T,n_coarse}(h) on one fine path.
double path_error(const PathGrid& fine, const FunctionalSpec& h, std::size_t n_coarse);

}  // namespace occlab

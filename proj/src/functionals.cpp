#include "occlab/functionals.hpp"

#include <cmath>

#include "occlab/error.hpp"
#include "occlab/kernels.hpp"

namespace occlab {

FunctionalSpec FunctionalSpec::indicator_below(double level) {
    require(!std::isnan(level), "functional: level must be a number");
    FunctionalSpec h;
    h.kind_ = Kind::IndicatorBelow;
    h.hi_ = level;
    h.sup_ = level == -std::numeric_limits<double>::infinity() ? 0.0 : 1.0;
    return h;
}

FunctionalSpec FunctionalSpec::indicator_interval(double lo, double hi) {
    require(lo <= hi, "functional: interval needs lo <= hi");
    FunctionalSpec h;
    h.kind_ = Kind::IndicatorInterval;
    h.lo_ = lo;
    h.hi_ = hi;
    return h;
}

FunctionalSpec FunctionalSpec::scaled_indicator(double rho, double level) {
    require(std::isfinite(rho), "functional: rho must be finite");
    require(!std::isnan(level), "functional: level must be a number");
    FunctionalSpec h;
    h.kind_ = Kind::ScaledIndicator;
    h.rho_ = rho;
    h.hi_ = level;
    h.sup_ = level == -std::numeric_limits<double>::infinity() ? 0.0 : std::abs(rho);
    return h;
}

FunctionalSpec FunctionalSpec::smooth(std::function<double(double)> fn, double sup_norm) {
    require(static_cast<bool>(fn), "functional: missing callable");
    require(sup_norm >= 0.0 && std::isfinite(sup_norm), "functional: sup-norm must be finite");
    FunctionalSpec h;
    h.kind_ = Kind::BoundedSmooth;
    h.fn_ = std::move(fn);
    h.sup_ = sup_norm;
    return h;
}

double FunctionalSpec::operator()(double x) const {
    switch (kind_) {
        case Kind::IndicatorBelow: return x <= hi_ ? 1.0 : 0.0;
        case Kind::IndicatorInterval: return (x >= lo_ && x <= hi_) ? 1.0 : 0.0;
        case Kind::ScaledIndicator: return x <= hi_ ? rho_ : 0.0;
        case Kind::BoundedSmooth: return fn_(x);
    }
    return 0.0;
}

double FunctionalSpec::sup_norm() const { return sup_; }

bool FunctionalSpec::is_constant() const {
    const bool all = hi_ == std::numeric_limits<double>::infinity();
    switch (kind_) {
        case Kind::IndicatorBelow:
        case Kind::ScaledIndicator: return all || hi_ == -std::numeric_limits<double>::infinity();
        case Kind::IndicatorInterval: return all && lo_ == -std::numeric_limits<double>::infinity();
        case Kind::BoundedSmooth: return false;
    }
    return false;
}

double FunctionalSpec::grid_sum(std::span<const double> x, std::size_t stride, std::size_t count) const {
    switch (kind_) {
        case Kind::IndicatorBelow:
            return static_cast<double>(kernels::count_le_strided(x, stride, count, hi_));
        case Kind::ScaledIndicator:
            return rho_ * static_cast<double>(kernels::count_le_strided(x, stride, count, hi_));
        case Kind::IndicatorInterval: {
            const double below_lo = std::nextafter(lo_, -std::numeric_limits<double>::infinity());
            return static_cast<double>(kernels::count_le_strided(x, stride, count, hi_)) -
                   static_cast<double>(kernels::count_le_strided(x, stride, count, below_lo));
        }
        case Kind::BoundedSmooth: {
            double s = 0.0;
            for (std::size_t k = 0; k < count; ++k) s += fn_(x[k * stride]);
            return s;
        }
    }
    return 0.0;
}

double riemann_functional(const PathGrid& path, const FunctionalSpec& h) {
    require(path.n_steps >= 1 && path.states.size() == path.n_steps + 1, "functional: malformed path");
    return path.dt() * h.grid_sum(path.states, 1, path.n_steps);
}

double riemann_on_subgrid(const PathGrid& fine, const FunctionalSpec& h, std::size_t n_coarse) {
    require(n_coarse >= 1 && fine.n_steps % n_coarse == 0,
            "functional: coarse n must divide the fine resolution");
    const std::size_t stride = fine.n_steps / n_coarse;
    return fine.t_final / static_cast<double>(n_coarse) * h.grid_sum(fine.states, stride, n_coarse);
}

PathGrid thin_path(const PathGrid& fine, std::size_t n_coarse) {
    require(n_coarse >= 1 && fine.n_steps % n_coarse == 0,
            "functional: coarse n must divide the fine resolution");
    const std::size_t stride = fine.n_steps / n_coarse;
    PathGrid g{fine.t_final, n_coarse, fine.x0, {}};
    g.states.resize(n_coarse + 1);
    for (std::size_t k = 0; k <= n_coarse; ++k) g.states[k] = fine.states[k * stride];
    return g;
}

std::pair<double, PathGrid> reference_functional(const ProcessModel& m, double x0, double T,
                                                 const FunctionalSpec& h, std::size_t n_ref,
                                                 RngStream& rng, std::span<const std::size_t> coarse) {
    require(n_ref >= 1, "functional: n_ref must be positive");
    for (std::size_t n : coarse)
        require(n >= 1 && n_ref % n == 0, "functional: n_ref = " + std::to_string(n_ref) +
                                              " is not divisible by coarse n = " + std::to_string(n));
    PathGrid fine = simulate_grid(m, x0, T, n_ref, rng);
    const double ref = riemann_functional(fine, h);
    return {ref, std::move(fine)};
}

double path_error(const PathGrid& fine, const FunctionalSpec& h, std::size_t n_coarse) {
    return riemann_functional(fine, h) - riemann_on_subgrid(fine, h, n_coarse);
}

}  // namespace occlab

#include "occlab/condition_x.hpp"

#include <algorithm>
#include <cmath>

#include "occlab/error.hpp"
#include "occlab/quadrature.hpp"

namespace occlab {

double density_stable_drift(const StableParams& p, double c, double t, double x, double y) {
    require(t > 0.0, "density: t must be positive");
    return stable_density(p, t, y - x - c * t, 0);
}

double density_stable_drift(double alpha, double c, double t, double x, double y) {
    return density_stable_drift(StableParams::symmetric(alpha), c, t, x, y);
}

double dt_density_stable_drift(const StableParams& p, double c, double t, double x, double y) {
    require(t > 0.0, "density: t must be positive");
    const double ell = p.length(t);
    const double z = (y - x - c * t) / ell;
    const double g = stable_density(p, 1.0, z * p.length(1.0), 0) * p.length(1.0);
    const double g1 = stable_density(p, 1.0, z * p.length(1.0), 1) * p.length(1.0) * p.length(1.0);
    return (-(g + z * g1) / (p.alpha * t) - c * g1 / ell) / ell;
}

double central_difference(const std::function<double(double)>& f, double t, double h, double* spread) {
    const double d1 = (f(t + h) - f(t - h)) / (2.0 * h);
    const double d2 = (f(t + 0.5 * h) - f(t - 0.5 * h)) / h;
    if (spread) *spread = std::abs(d1 - d2);
    return (4.0 * d2 - d1) / 3.0;
}

double max_relative_gap(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "gap: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num = std::max(num, std::abs(a[j] - b[j]));
        den = std::max(den, std::abs(a[j]));
    }
    return den > 0.0 ? num / den : num;
}

DensityField dt_density(const StableWithDrift& m, double t, double x, std::span<const double> y_grid,
                        DtMethod method) {
    m.p.validate();
    require(t > 0.0 && std::isfinite(t), "dt_density: t must be positive");
    DensityField f;
    f.t = t;
    f.x = x;
    f.y_grid.assign(y_grid.begin(), y_grid.end());
    f.p_values.resize(y_grid.size());
    f.dp_dt_values.resize(y_grid.size());
    double spread_max = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
        const double y = y_grid[j];
        f.p_values[j] = density_stable_drift(m.p, m.c, t, x, y);
        if (method == DtMethod::Analytic) {
            f.dp_dt_values[j] = dt_density_stable_drift(m.p, m.c, t, x, y);
        } else {
            double spread = 0.0;
            f.dp_dt_values[j] = central_difference(
                [&](double s) { return density_stable_drift(m.p, m.c, s, x, y); }, t, t / 100.0, &spread);
            spread_max = std::max(spread_max, spread);
        }
        scale = std::max(scale, std::abs(f.dp_dt_values[j]));
    }
    if (method == DtMethod::FiniteDifference && spread_max > 0.01 * scale)
        throw NumericalError("dt_density: finite-difference steps disagree by more than 1%");
    f.mass = density_mass(m.p, t);
    return f;
}

double dt_l1_norm(const StableWithDrift& m, double t) {
    require(t > 0.0, "dt_l1_norm: t must be positive");
    const auto& p = m.p;
    const double ell = p.length(t);
    const double s1 = p.length(1.0);
    // Substitute y = x + c t + ell z; the integrand becomes the bracket above.
    const double reach = p.alpha == 2.0 ? 40.0 : std::pow(10.0, std::min(4.5 / p.alpha, 12.0));
    quad::SinhGrid grid(0.0, 0.5, reach, 0.02);
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double z = grid.node(j);
        const double g = stable_density(p, 1.0, z * s1, 0) * s1;
        const double g1 = stable_density(p, 1.0, z * s1, 1) * s1 * s1;
        v[j] = std::abs((g + z * g1) / (p.alpha * t) + m.c * g1 / ell);
    }
    return quad::integrate_with_tails(grid, v, p.alpha == 2.0 ? 10.0 : p.alpha);
}

BetaEstimate fit_beta(std::span<const double> t, std::span<const double> N) {
    BetaEstimate e;
    e.t.assign(t.begin(), t.end());
    e.N.assign(N.begin(), N.end());
    const FitResult f = fit_loglog(t, N);
    e.beta_hat = -f.slope;
    e.beta_ci = f.slope_ci;
    for (std::size_t i = 0; i < t.size(); ++i) e.B_hat = std::max(e.B_hat, N[i] * std::pow(t[i], e.beta_hat));
    return e;
}

BetaEstimate estimate_beta(const StableWithDrift& m, std::span<const double> t_list, double x, double T) {
    (void)x;  // the stable-with-drift law is translation invariant
    require(t_list.size() >= 3, "estimate_beta: need at least 3 times");
    const auto [lo, hi] = std::minmax_element(t_list.begin(), t_list.end());
    require(*lo > 0.0 && *hi <= T, "estimate_beta: times must lie in (0, T]");
    require(*hi / *lo >= 100.0 * (1.0 - 1e-12), "estimate_beta: times must span two decades");
    std::vector<double> N(t_list.size());
    for (std::size_t i = 0; i < t_list.size(); ++i) N[i] = dt_l1_norm(m, t_list[i]);
    return fit_beta(t_list, N);
}

std::vector<double> logspace(double lo, double hi, std::size_t n) {
    require(lo > 0.0 && hi >= lo && n >= 1, "logspace: bad range");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1.0));
    if (n > 1) v.back() = hi;
    return v;
}

double integrate_samples(std::span<const double> y, std::span<const double> f, double alpha) {
    require(y.size() == f.size() && y.size() >= 4, "integrate: need at least 4 samples");
    double body = 0.0;
    for (std::size_t j = 0; j + 1 < y.size(); ++j) body += 0.5 * (y[j + 1] - y[j]) * (f[j] + f[j + 1]);
    // Tails measured from the sample midpoint.
    const double mid = 0.5 * (y.front() + y.back());
    auto side = [&](bool right) {
        std::vector<double> d, v;
        for (std::size_t k = 0; k < y.size(); ++k) {
            const std::size_t j = right ? k : y.size() - 1 - k;
            const double dist = right ? y[j] - mid : mid - y[j];
            if (dist <= 0.0) continue;
            d.push_back(dist);
            v.push_back(std::abs(f[j]));
        }
        const double m = quad::power_tail_mass(d, v, alpha);
        return (right ? f.back() : f.front()) < 0.0 ? -m : m;
    };
    return body + side(false) + side(true);
}

}  // namespace occlab

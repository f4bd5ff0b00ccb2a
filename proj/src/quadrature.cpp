#include "occlab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <numbers>

#include "occlab/error.hpp"

namespace occlab::quad {

const KronrodRule& kronrod21() {
    static const KronrodRule rule = [] {
        using boost::math::quadrature::gauss;
        using boost::math::quadrature::gauss_kronrod;
        KronrodRule r{};
        const auto& xs = gauss_kronrod<double, 21>::abscissa();
        const auto& wk = gauss_kronrod<double, 21>::weights();
        const auto& wg = gauss<double, 10>::weights();
        for (std::size_t i = 0; i < 11; ++i) {
            r.x[i] = xs[i];
            r.wk[i] = wk[i];
            r.wg[i] = (i % 2 == 1) ? wg[(i - 1) / 2] : 0.0;
        }
        return r;
    }();
    return rule;
}

Rule gauss_legendre(int n, double a, double b) {
    require(n >= 1, "gauss_legendre: n must be positive");
    Rule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        r.nodes[idx] = c + h * x;
        r.weights[idx] = h * 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

SinhGrid::SinhGrid(double center, double width, double reach, double du)
    : center_(center), width_(width), du_(du) {
    require(width > 0.0 && reach > 0.0 && du > 0.0, "SinhGrid: width, reach and du must be positive");
    const auto half = static_cast<std::size_t>(std::ceil(std::asinh(reach / width) / du));
    u_max_ = static_cast<double>(half) * du;
    const std::size_t n = 2 * half + 1;
    nodes_.resize(n);
    weights_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double u = -u_max_ + static_cast<double>(j) * du;
        nodes_[j] = center + width * std::sinh(u);
        weights_[j] = du * width * std::cosh(u);
    }
    weights_.front() *= 0.5;
    weights_.back() *= 0.5;
}

double SinhGrid::interpolate(std::span<const double> values, double v, double outside) const {
    const double c = coordinate(v);
    const double last = static_cast<double>(nodes_.size() - 1);
    if (!(c >= 0.0 && c <= last)) return outside;
    auto i = static_cast<std::ptrdiff_t>(std::floor(c));
    const auto n = static_cast<std::ptrdiff_t>(nodes_.size());
    i = std::clamp<std::ptrdiff_t>(i, 1, n - 3);
    const double t = c - static_cast<double>(i);
    const auto w = lagrange4(t);
    return w[0] * values[static_cast<std::size_t>(i - 1)] + w[1] * values[static_cast<std::size_t>(i)] +
           w[2] * values[static_cast<std::size_t>(i + 1)] + w[3] * values[static_cast<std::size_t>(i + 2)];
}

double power_tail_mass(std::span<const double> dist, std::span<const double> vals, double alpha) {
    if (dist.empty()) return 0.0;
    const double far = dist.back();
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] < far / 10.0 || !(vals[i] > 0.0)) continue;
        acc += std::log(vals[i]) + (1.0 + alpha) * std::log(dist[i]);
        ++count;
    }
    if (count == 0) return 0.0;
    const double c = std::exp(acc / count);
    return c * std::pow(far, -alpha) / alpha;
}

double integrate_with_tails(const SinhGrid& grid, std::span<const double> values, double alpha) {
    double body = 0.0;
    const auto w = grid.weights();
    for (std::size_t j = 0; j < values.size(); ++j) body += w[j] * values[j];
    const std::size_t n = grid.size();
    const std::size_t half = n / 2;
    std::vector<double> dist(half), mag(half);
    auto side = [&](bool right) {
        for (std::size_t k = 0; k < half; ++k) {
            const std::size_t j = right ? half + 1 + k : half - 1 - k;
            dist[k] = std::abs(grid.node(j) - grid.center());
            mag[k] = std::abs(values[j]);
        }
        const double outer = right ? values[n - 1] : values[0];
        const double m = power_tail_mass(dist, mag, alpha);
        return outer < 0.0 ? -m : m;
    };
    return body + side(false) + side(true);
}

}  // namespace occlab::quad

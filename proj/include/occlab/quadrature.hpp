#pragma once

// Numerical integration helpers shared by the density, condition-X and
// parametrix code: a vector-valued adaptive Gauss-Kronrod driver, sinh-graded
// spatial grids with trapezoid weights, Gauss-Legendre rules and power-tail
// completion for heavy-tailed integrands.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace occlab::quad {

/// 21-point Kronrod rule with its embedded 10-point Gauss rule on [-1,1].
/// Abscissae are the non-negative half, x[0] = 0; odd indices are Gauss nodes.
struct KronrodRule {
    std::array<double, 11> x;
    std::array<double, 11> wk;
    std::array<double, 11> wg;  // zero on non-Gauss nodes
};
const KronrodRule& kronrod21();

template <std::size_t N>
struct Result {
    std::array<double, N> value{};
    double error = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {
template <std::size_t N>
struct Segment {
    double a, b;
    std::array<double, N> value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <std::size_t N, class F>
Segment<N> apply_rule(F& f, double a, double b) {
    const auto& r = kronrod21();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, N> k{}, g{};
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        if (i == 0) {
            const auto v = f(c);
            for (std::size_t j = 0; j < N; ++j) {
                k[j] += r.wk[0] * v[j];
                g[j] += r.wg[0] * v[j];
            }
            continue;
        }
        const auto v1 = f(c - h * r.x[i]);
        const auto v2 = f(c + h * r.x[i]);
        for (std::size_t j = 0; j < N; ++j) {
            k[j] += r.wk[i] * (v1[j] + v2[j]);
            g[j] += r.wg[i] * (v1[j] + v2[j]);
        }
    }
    Segment<N> s{a, b, {}, 0.0};
    for (std::size_t j = 0; j < N; ++j) {
        s.value[j] = h * k[j];
        s.error = std::max(s.error, std::abs(h * (k[j] - g[j])));
    }
    return s;
}
}  // namespace detail

/// Globally adaptive Gauss-Kronrod over the pieces [breaks[i], breaks[i+1]].
/// `f(x)` returns std::array<double, N>; the error is the max over components.
template <std::size_t N, class F>
Result<N> integrate(F&& f, std::span<const double> breaks, double abs_tol,
                    int max_intervals = 4000) {
    std::vector<detail::Segment<N>> heap;
    heap.reserve(static_cast<std::size_t>(max_intervals) + 4);
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        heap.push_back(detail::apply_rule<N>(f, breaks[i], breaks[i + 1]));
        total_err += heap.back().error;
    }
    std::make_heap(heap.begin(), heap.end());
    while (total_err > abs_tol && static_cast<int>(heap.size()) < max_intervals) {
        std::pop_heap(heap.begin(), heap.end());
        const auto worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        auto left = detail::apply_rule<N>(f, worst.a, mid);
        auto right = detail::apply_rule<N>(f, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
    }
    Result<N> out;
    // Recompute the error sum from scratch to shed accumulated rounding.
    total_err = 0.0;
    for (const auto& s : heap) {
        for (std::size_t j = 0; j < N; ++j) out.value[j] += s.value[j];
        total_err += s.error;
    }
    out.error = total_err;
    out.intervals = static_cast<int>(heap.size());
    out.converged = total_err <= abs_tol;
    return out;
}

template <class F>
Result<1> integrate_scalar(F&& f, double a, double b, double abs_tol, int max_intervals = 4000) {
    const double br[2] = {a, b};
    return integrate<1>([&](double x) { return std::array<double, 1>{f(x)}; },
                        std::span<const double>(br, 2), abs_tol, max_intervals);
}

/// Gauss-Legendre nodes and weights on [a,b].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Symmetric grid v_j = center + width * sinh(u_j), u_j uniform on [-U, U].
/// Fine near the center and geometric in the tails; trapezoid in u is
/// spectrally accurate for smooth, decaying integrands.
class SinhGrid {
  public:
    SinhGrid() = default;
    /// `reach` is the largest |v - center|; `du` the step in u.
    SinhGrid(double center, double width, double reach, double du);

    std::size_t size() const { return nodes_.size(); }
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }
    double node(std::size_t j) const { return nodes_[j]; }
    double center() const { return center_; }
    double width() const { return width_; }
    double du() const { return du_; }
    double u_max() const { return u_max_; }
    double reach() const { return nodes_.empty() ? 0.0 : nodes_.back() - center_; }

    /// Continuous grid coordinate of v (index units, may be fractional).
    double coordinate(double v) const {
        return (std::asinh((v - center_) / width_) + u_max_) / du_;
    }
    /// Cubic (Catmull-Rom style Lagrange) interpolation of tabulated values at v.
    /// Outside the grid returns `outside`.
    double interpolate(std::span<const double> values, double v, double outside = 0.0) const;

  private:
    double center_ = 0.0, width_ = 1.0, du_ = 0.1, u_max_ = 0.0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Four-point Lagrange weights at fractional offset t in [0,1] between the
/// second and third of equally spaced nodes.
inline std::array<double, 4> lagrange4(double t) {
    const double tm1 = t - 1.0, tm2 = t - 2.0, tp1 = t + 1.0;
    return {-t * tm1 * tm2 / 6.0, tp1 * tm1 * tm2 / 2.0, -tp1 * t * tm2 / 2.0, tp1 * t * tm1 / 6.0};
}

/// Mass of a power tail c|x|^{-1-alpha} beyond the last decade of a one-sided
/// sample. `dist` are distances from the center in increasing order, `vals`
/// the integrand there. The constant c is fitted over [dist.back()/10,
/// dist.back()] by least squares on the log scale.
double power_tail_mass(std::span<const double> dist, std::span<const double> vals, double alpha);

/// Trapezoid integral over a SinhGrid with power-tail completion on both
/// sides (tail exponent -1-alpha). Values must be non-negative for the
/// completion to be fitted; negative tails are completed on |values|, with
/// the sign of the outermost value.
double integrate_with_tails(const SinhGrid& grid, std::span<const double> values, double alpha);

}  // namespace occlab::quad

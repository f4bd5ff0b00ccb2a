#include <cmath>

#include "occlab/kernels.hpp"

namespace occlab::kernels {
namespace {

void philox_fill_scalar(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                        std::span<double> out) {
    const auto k0 = static_cast<std::uint32_t>(key);
    const auto k1 = static_cast<std::uint32_t>(key >> 32);
    std::uint64_t block = first_block;
    for (std::size_t i = 0; i + 1 < out.size(); i += 2, ++block) {
        std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block),
                                static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(stream),
                                static_cast<std::uint32_t>(stream >> 32)};
        detail::philox_block(ctr, k0, k1);
        out[i] = detail::to_unit_open(ctr[0], ctr[1]);
        out[i + 1] = detail::to_unit_open(ctr[2], ctr[3]);
    }
}

std::size_t count_le_scalar(std::span<const double> x, double level) {
    std::size_t n = 0;
    for (double v : x) n += (v <= level) ? 1 : 0;
    return n;
}

std::size_t count_le_strided_scalar(std::span<const double> x, std::size_t stride,
                                    std::size_t count, double level) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < count; ++i) n += (x[i * stride] <= level) ? 1 : 0;
    return n;
}

double dot_scalar(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Pairwise summation; error grows like log(n) instead of n.
double sum_scalar(std::span<const double> a) {
    if (a.size() <= 32) {
        double s = 0.0;
        for (double v : a) s += v;
        return s;
    }
    const std::size_t half = a.size() / 2;
    return sum_scalar(a.first(half)) + sum_scalar(a.subspan(half));
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void normal_pairs_scalar(std::span<double> u) {
    constexpr double two_pi = 6.283185307179586;
    for (std::size_t j = 0; j + 1 < u.size(); j += 2) {
        const double r = std::sqrt(-2.0 * std::log(u[j]));
        const double a = two_pi * u[j + 1];
        u[j] = r * std::cos(a);
        u[j + 1] = r * std::sin(a);
    }
}

void stable_std_scalar(double alpha, double beta, std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::cms(alpha, beta, u[2 * i], u[2 * i + 1]);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Backend::Scalar,      philox_fill_scalar, count_le_scalar,
                                   count_le_strided_scalar, dot_scalar,      sum_scalar,
                                   axpy_scalar,          normal_pairs_scalar, stable_std_scalar};
    return table;
}

}  // namespace occlab::kernels

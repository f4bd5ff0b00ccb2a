// Compiled with -mavx2 -mfma -ffast-math so the loops below call glibc's
// vector math (libmvec). Results differ from the scalar kernels in the last
// few ulps; each backend is deterministic on its own. Blocks are padded to a
// multiple of the vector width so every value takes the vector path and a
// draw does not depend on its position in the buffer.

#include "kernels_avx2_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace occlab::kernels::avx2math {

namespace {
constexpr std::size_t kBlock = 256;
constexpr double kPi = 3.141592653589793;
std::size_t padded(std::size_t m) { return (m + 3) & ~std::size_t{3}; }
}  // namespace

void normal_pairs(std::span<double> u) {
    alignas(32) double a[kBlock], b[kBlock], r[kBlock], c[kBlock], s[kBlock];
    const std::size_t pairs = u.size() / 2;
    for (std::size_t base = 0; base < pairs; base += kBlock) {
        const std::size_t m = std::min(kBlock, pairs - base);
        const std::size_t m4 = padded(m);
        double* p = u.data() + 2 * base;
        for (std::size_t j = 0; j < m4; ++j) {
            a[j] = j < m ? p[2 * j] : 0.5;
            b[j] = j < m ? p[2 * j + 1] : 0.5;
        }
        for (std::size_t j = 0; j < m4; ++j) r[j] = std::sqrt(-2.0 * std::log(a[j]));
        for (std::size_t j = 0; j < m4; ++j) c[j] = std::cos(2.0 * kPi * b[j]);
        for (std::size_t j = 0; j < m4; ++j) s[j] = std::sin(2.0 * kPi * b[j]);
        for (std::size_t j = 0; j < m; ++j) {
            p[2 * j] = r[j] * c[j];
            p[2 * j + 1] = r[j] * s[j];
        }
    }
}

void stable_std(double alpha, double beta, std::span<const double> u, std::span<double> out) {
    alignas(32) double v[kBlock], lw[kBlock], t1[kBlock], t2[kBlock], t3[kBlock];
    const double tau = beta * std::tan(kPi * alpha / 2);
    const double b = std::atan(tau) / alpha;
    const double s = std::pow(1.0 + tau * tau, 1.0 / (2.0 * alpha));
    const double ia = 1.0 / alpha, ex = (1.0 - alpha) / alpha;
    for (std::size_t base = 0; base < out.size(); base += kBlock) {
        const std::size_t m = std::min(kBlock, out.size() - base);
        const std::size_t m4 = padded(m);
        const double* p = u.data() + 2 * base;
        double* o = out.data() + base;
        for (std::size_t j = 0; j < m4; ++j) {
            v[j] = j < m ? kPi * (p[2 * j] - 0.5) : 0.0;
            lw[j] = j < m ? p[2 * j + 1] : 0.5;
        }
        for (std::size_t j = 0; j < m4; ++j) lw[j] = -std::log(lw[j]);  // W
        if (alpha == 2.0) {
            for (std::size_t j = 0; j < m4; ++j) t1[j] = 2.0 * std::sqrt(lw[j]) * std::sin(v[j]);
        } else if (alpha == 1.0) {
            for (std::size_t j = 0; j < m4; ++j) t1[j] = std::tan(v[j]);
        } else {
            for (std::size_t j = 0; j < m4; ++j) lw[j] = std::log(lw[j]);  // log W
            for (std::size_t j = 0; j < m4; ++j) t1[j] = std::sin(alpha * (v[j] + b));
            for (std::size_t j = 0; j < m4; ++j) t2[j] = std::log(std::cos(v[j]));
            for (std::size_t j = 0; j < m4; ++j) t3[j] = std::log(std::cos(v[j] - alpha * (v[j] + b)));
            for (std::size_t j = 0; j < m4; ++j) t1[j] = s * t1[j] * std::exp(ex * (t3[j] - lw[j]) - ia * t2[j]);
        }
        std::copy(t1, t1 + m, o);
    }
}

}  // namespace occlab::kernels::avx2math

#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and
// an AVX2 version; the active backend is picked once at startup from CPUID
// and can be pinned (OCCLAB_KERNELS=scalar) for equivalence testing.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace occlab::kernels {

enum class Backend { Scalar, Avx2 };

/// Philox4x32-10 blocks for counters (block, stream) keyed by `key`.
/// Writes two doubles in (0,1) per block, starting at `first_block`;
/// out.size() must be even.
using PhiloxFillFn = void (*)(std::uint64_t key, std::uint64_t stream,
                              std::uint64_t first_block, std::span<double> out);
/// Number of entries x[i] <= level.
using CountLeFn = std::size_t (*)(std::span<const double> x, double level);
/// Number of entries x[i * stride] <= level for i < count.
using CountLeStridedFn = std::size_t (*)(std::span<const double> x, std::size_t stride,
                                         std::size_t count, double level);
using DotFn = double (*)(std::span<const double> a, std::span<const double> b);
using SumFn = double (*)(std::span<const double> a);
/// y[i] += alpha * x[i]
using AxpyFn = void (*)(double alpha, std::span<const double> x, std::span<double> y);
/// Box-Muller in place: each uniform pair (u1, u2) becomes
/// (r cos a, r sin a) with r = sqrt(-2 log u1), a = 2 pi u2.
using NormalPairsFn = void (*)(std::span<double> u);
/// Chambers-Mallows-Stuck: out[i] is the standardized S1 variate built from
/// the uniform pair (u[2i], u[2i+1]) (angle, then exponential).
using StableStdFn = void (*)(double alpha, double beta, std::span<const double> u,
                             std::span<double> out);

struct KernelTable {
    Backend backend;
    PhiloxFillFn philox_fill;
    CountLeFn count_le;
    CountLeStridedFn count_le_strided;
    DotFn dot;
    SumFn sum;
    AxpyFn axpy;
    NormalPairsFn normal_pairs;
    StableStdFn stable_std;
};

const KernelTable& scalar_table();
/// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

bool cpu_has_avx2();
const KernelTable& active();
/// Pins the backend used by active(); returns false when unavailable.
bool set_backend(Backend b);
std::string_view backend_name(Backend b);

inline void philox_fill(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                        std::span<double> out) {
    active().philox_fill(key, stream, first_block, out);
}
inline std::size_t count_le(std::span<const double> x, double level) {
    return active().count_le(x, level);
}
inline std::size_t count_le_strided(std::span<const double> x, std::size_t stride,
                                    std::size_t count, double level) {
    return active().count_le_strided(x, stride, count, level);
}
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a, b);
}
inline double sum(std::span<const double> a) { return active().sum(a); }
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x, y);
}
inline void normal_pairs(std::span<double> u) { active().normal_pairs(u); }
inline void stable_std(double alpha, double beta, std::span<const double> u, std::span<double> out) {
    active().stable_std(alpha, beta, u, out);
}

namespace detail {
// Shared by both backends so tail handling is identical.
struct PhiloxConst {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;
};

inline void philox_block(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{PhiloxConst::M0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{PhiloxConst::M1} * ctr[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t c1 = ctr[1], c3 = ctr[3];
        ctr[0] = hi1 ^ c1 ^ k0;
        ctr[1] = lo1;
        ctr[2] = hi0 ^ c3 ^ k1;
        ctr[3] = lo0;
        k0 += PhiloxConst::W0;
        k1 += PhiloxConst::W1;
    }
}

/// Reference CMS transform shared by the scalar kernel and single draws.
inline double cms(double alpha, double beta, double uv, double uw) {
    constexpr double pi = 3.141592653589793;
    const double v = pi * (uv - 0.5);
    const double w = -std::log(uw);
    if (alpha == 2.0) return 2.0 * std::sqrt(w) * std::sin(v);
    if (alpha == 1.0) return std::tan(v);
    const double tau = beta * std::tan(pi * alpha / 2);
    const double b = std::atan(tau) / alpha;
    const double s = std::pow(1.0 + tau * tau, 1.0 / (2.0 * alpha));
    const double av = alpha * (v + b);
    return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

/// Uniform on the open interval (0,1) from the top 52 bits of (hi, lo).
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}
}  // namespace detail

}  // namespace occlab::kernels

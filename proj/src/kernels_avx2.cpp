// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPUID check.
#include <immintrin.h>

#include "occlab/kernels.hpp"
#include "kernels_avx2_math.hpp"

namespace occlab::kernels {
namespace {

using detail::PhiloxConst;

// Four Philox blocks at once. Each 64-bit lane carries one 32-bit counter word.
void philox_fill_avx2(std::uint64_t key, std::uint64_t stream, std::uint64_t first_block,
                      std::span<double> out) {
    const auto key0 = static_cast<std::uint32_t>(key);
    const auto key1 = static_cast<std::uint32_t>(key >> 32);
    const __m256i mask32 = _mm256_set1_epi64x(0xffffffffLL);
    const __m256i m0 = _mm256_set1_epi64x(PhiloxConst::M0);
    const __m256i m1 = _mm256_set1_epi64x(PhiloxConst::M1);
    const __m256i s_lo = _mm256_set1_epi64x(static_cast<std::uint32_t>(stream));
    const __m256i s_hi = _mm256_set1_epi64x(static_cast<std::uint32_t>(stream >> 32));
    const __m256i exp52 = _mm256_set1_epi64x(0x4330000000000000LL);
    const __m256d two52 = _mm256_set1_pd(0x1.0p52);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d scale = _mm256_set1_pd(0x1.0p-52);

    std::uint64_t block = first_block;
    std::size_t i = 0;
    alignas(32) double lanes[8];
    for (; i + 8 <= out.size(); i += 8, block += 4) {
        const std::uint64_t b[4] = {block, block + 1, block + 2, block + 3};
        __m256i c0 = _mm256_set_epi64x(static_cast<std::uint32_t>(b[3]),
                                       static_cast<std::uint32_t>(b[2]),
                                       static_cast<std::uint32_t>(b[1]),
                                       static_cast<std::uint32_t>(b[0]));
        __m256i c1 = _mm256_set_epi64x(static_cast<std::uint32_t>(b[3] >> 32),
                                       static_cast<std::uint32_t>(b[2] >> 32),
                                       static_cast<std::uint32_t>(b[1] >> 32),
                                       static_cast<std::uint32_t>(b[0] >> 32));
        __m256i c2 = s_lo;
        __m256i c3 = s_hi;
        std::uint32_t k0 = key0, k1 = key1;
        for (int round = 0; round < 10; ++round) {
            const __m256i p0 = _mm256_mul_epu32(c0, m0);
            const __m256i p1 = _mm256_mul_epu32(c2, m1);
            const __m256i hi0 = _mm256_srli_epi64(p0, 32);
            const __m256i lo0 = _mm256_and_si256(p0, mask32);
            const __m256i hi1 = _mm256_srli_epi64(p1, 32);
            const __m256i lo1 = _mm256_and_si256(p1, mask32);
            const __m256i kk0 = _mm256_set1_epi64x(k0);
            const __m256i kk1 = _mm256_set1_epi64x(k1);
            c0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), kk0);
            c1 = lo1;
            c2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), kk1);
            c3 = lo0;
            k0 += PhiloxConst::W0;
            k1 += PhiloxConst::W1;
        }
        // bits = ((hi << 32) | lo) >> 12, always < 2^52 so the exponent trick is exact.
        const __m256i bits_a =
            _mm256_srli_epi64(_mm256_or_si256(_mm256_slli_epi64(c0, 32), c1), 12);
        const __m256i bits_b =
            _mm256_srli_epi64(_mm256_or_si256(_mm256_slli_epi64(c2, 32), c3), 12);
        __m256d da = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(bits_a, exp52)), two52);
        __m256d db = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(bits_b, exp52)), two52);
        da = _mm256_mul_pd(_mm256_add_pd(da, half), scale);
        db = _mm256_mul_pd(_mm256_add_pd(db, half), scale);
        _mm256_store_pd(lanes, da);
        _mm256_store_pd(lanes + 4, db);
        for (int j = 0; j < 4; ++j) {
            out[i + 2 * j] = lanes[j];
            out[i + 2 * j + 1] = lanes[4 + j];
        }
    }
    if (i < out.size()) scalar_table().philox_fill(key, stream, block, out.subspan(i));
}

std::size_t count_le_avx2(std::span<const double> x, double level) {
    const __m256d lv = _mm256_set1_pd(level);
    std::size_t n = 0;
    std::size_t i = 0;
    for (; i + 4 <= x.size(); i += 4) {
        const __m256d v = _mm256_loadu_pd(x.data() + i);
        const int m = _mm256_movemask_pd(_mm256_cmp_pd(v, lv, _CMP_LE_OQ));
        n += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(m)));
    }
    for (; i < x.size(); ++i) n += (x[i] <= level) ? 1 : 0;
    return n;
}

std::size_t count_le_strided_avx2(std::span<const double> x, std::size_t stride,
                                  std::size_t count, double level) {
    if (stride == 1) return count_le_avx2(x.first(count), level);
    const __m256d lv = _mm256_set1_pd(level);
    const auto s = static_cast<long long>(stride);
    const __m256i step = _mm256_set1_epi64x(4 * s);
    __m256i idx = _mm256_set_epi64x(3 * s, 2 * s, s, 0);
    std::size_t n = 0;
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const __m256d v = _mm256_i64gather_pd(x.data(), idx, 8);
        const int m = _mm256_movemask_pd(_mm256_cmp_pd(v, lv, _CMP_LE_OQ));
        n += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(m)));
        idx = _mm256_add_epi64(idx, step);
    }
    for (; i < count; ++i) n += (x[i * stride] <= level) ? 1 : 0;
    return n;
}

double hsum(__m256d v) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return (t[0] + t[1]) + (t[2] + t[3]);
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    const std::size_t n = a.size();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                               _mm256_loadu_pd(b.data() + i + 4), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_avx2(std::span<const double> a) {
    if (a.size() <= 256) {
        __m256d acc = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= a.size(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a.data() + i));
        double s = hsum(acc);
        for (; i < a.size(); ++i) s += a[i];
        return s;
    }
    const std::size_t half = a.size() / 2;
    return sum_avx2(a.first(half)) + sum_avx2(a.subspan(half));
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= x.size(); i += 4) {
        const __m256d yv = _mm256_loadu_pd(y.data() + i);
        _mm256_storeu_pd(y.data() + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x.data() + i), yv));
    }
    for (; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{Backend::Avx2,          philox_fill_avx2, count_le_avx2,
                                   count_le_strided_avx2, dot_avx2,         sum_avx2,
                                   axpy_avx2,             avx2math::normal_pairs,
                                   avx2math::stable_std};
    return &table;
}

}  // namespace occlab::kernels

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "occlab/kernels.hpp"

namespace occlab {

/// Counter-based random stream: Philox4x32-10 keyed by the experiment seed,
/// with the stream id in the upper counter words. Any (seed, stream) pair
/// yields the same sequence regardless of which thread consumes it, so a
/// Monte Carlo path is a pure function of (seed, path index).
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : key_(seed), stream_(stream) {}

    /// Stream for path `index` inside experiment `seed`; `domain` separates
    /// independent uses of one seed (paths, moment estimates, ...).
    static RngStream for_path(std::uint64_t seed, std::uint64_t index, std::uint32_t domain = 0) {
        return {seed, (std::uint64_t{domain} << 44) ^ index};
    }

    std::uint64_t seed() const { return key_; }
    std::uint64_t stream() const { return stream_; }

    /// Uniform on (0,1), never 0 or 1.
    double uniform() {
        if (pos_ == buf_.size()) refill();
        return buf_[pos_++];
    }

    /// Fills `out` with uniforms; same values as repeated uniform() calls.
    void fill_uniform(std::span<double> out) {
        std::size_t i = 0;
        while (i < out.size() && pos_ < buf_.size()) out[i++] = buf_[pos_++];
        if (i == out.size()) return;
        const std::size_t bulk = (out.size() - i) & ~std::size_t{1};
        if (bulk > 0) {
            kernels::philox_fill(key_, stream_, block_, out.subspan(i, bulk));
            block_ += bulk / 2;
            i += bulk;
        }
        while (i < out.size()) out[i++] = uniform();
    }

    /// Standard normal by Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u[2] = {uniform(), uniform()};
        kernels::normal_pairs(u);
        spare_ = u[1];
        has_spare_ = true;
        return u[0];
    }

    /// Fills `out` with normals; same values as repeated normal() calls.
    void fill_normal(std::span<double> out) {
        std::size_t i = 0;
        if (has_spare_ && !out.empty()) {
            out[i++] = spare_;
            has_spare_ = false;
        }
        const std::size_t pairs = (out.size() - i) / 2;
        if (pairs > 0) {
            auto u = out.subspan(i, 2 * pairs);
            fill_uniform(u);
            kernels::normal_pairs(u);
            i += 2 * pairs;
        }
        if (i < out.size()) out[i] = normal();
    }

    double exponential() { return -std::log(uniform()); }

    /// Poisson variate by sequential inversion; meant for small means.
    std::uint64_t poisson(double mean) {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

  private:
    void refill() {
        kernels::philox_fill(key_, stream_, block_, buf_);
        block_ += buf_.size() / 2;
        pos_ = 0;
    }

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<double, 64> buf_{};
    std::size_t pos_ = buf_.size();
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace occlab

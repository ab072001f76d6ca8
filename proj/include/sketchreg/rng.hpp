#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sketchreg {

/// Substream seed derivation: stream k of a base seed is
/// base + k * 0x9E3779B97F4A7C15 (64-bit wrap-around). Every parallel unit of
/// work (ACLSE sub-fit, CV cell, MC replicate) owns one substream, which makes
/// results independent of scheduling.
constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t substream_seed(std::uint64_t base, std::uint64_t stream) {
    return base + stream * kSeedStride;
}

/// Deterministic random source. All variate transforms are implemented here on
/// top of mt19937_64 (which has a fully specified output sequence), instead of
/// the implementation-defined std::*_distribution wrappers:
///   - uniforms take the top 53 bits of one 64-bit draw,
///   - normals use the Marsaglia polar method (second variate cached),
///   - bounded integers use rejection sampling.
/// Same seed, same platform or not: same stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Fair +1 / -1.
    double pm1() { return (gen_() >> 63) ? -1.0 : 1.0; }

    /// Uniform integer in [0, bound), bound >= 1, by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sketchreg

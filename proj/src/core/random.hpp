#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "core/linalg.hpp"

namespace nnas {

// Seedable random source with a fully documented stream so draws reproduce
// bit-exactly across runs and platforms:
//   - engine: std::mt19937_64 seeded directly with the 64-bit seed (the
//     mt19937_64 output sequence is pinned down by the C++ standard);
//   - uniforms: (word >> 11 + 0.5) * 2^-53, mapping each 64-bit word to
//     a double in (0, 1);
//   - gaussians: Box-Muller pairs, the second deviate cached for the next
//     call.
// Implementation-defined std::*_distribution adaptors are deliberately not
// used anywhere.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    // Uniform double in (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal deviate.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Unbiased integer in [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (~bound + 1) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

    // Independent substream for worker/phase separation, derived from the
    // original seed only (not from the current engine state).
    RandomSource derive(std::uint64_t stream) const;

private:
    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// n independent standard-normal draws.
Vec gaussian(RandomSource& rng, std::size_t n);

std::uint64_t splitmix64(std::uint64_t x);

} // namespace nnas

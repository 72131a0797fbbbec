#pragma once

#include <cmath>
#include <cstdint>

namespace transposer {

// Counter-seeded xoshiro256** with a splitmix64 expander. The standard
// library distributions are implementation-defined, so normal draws are
// produced here explicitly to keep seeded runs byte-identical across
// compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    Rng(std::uint64_t seed, std::uint64_t stream) : Rng(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in (0, 1]; never returns 0 so logarithms are safe.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the second draw.
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace transposer

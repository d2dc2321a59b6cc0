#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

// Deterministic randomness helpers. Everything here is fully specified:
// std::mt19937_64 has a standard-mandated output sequence and all samplers
// below consume a fixed number of engine words per draw, so a (seed, draw
// order) pair pins the generated stream bit-for-bit. No sampler from
// <random> other than the engine itself is used, since distribution output
// is implementation-defined.

namespace fairlend {

inline constexpr std::uint64_t kSeedGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += kSeedGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Stable per-task seed: base seed + a task key string.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view task_key) {
    return splitmix64(base ^ fnv1a64(task_key));
}

inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Stateless keyed draw in [0,1). Used where draws must not depend on
// evaluation order (per-cycle outcome sampling).
inline double keyed_uniform01(std::uint64_t seed, std::uint64_t k1, std::uint64_t k2,
                              std::uint64_t k3 = 0) {
    std::uint64_t h = splitmix64(seed ^ (kSeedGolden * (k1 + 1)));
    h = splitmix64(h ^ (kSeedGolden * (k2 + 1)));
    h = splitmix64(h ^ (kSeedGolden * (k3 + 1)));
    return u64_to_unit(h);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // [0,1), 53-bit resolution, one engine word.
    double uniform01() { return u64_to_unit(engine_()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Index in [0, n). n must be >= 1. One engine word.
    std::size_t uniform_index(std::size_t n) {
        const auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return idx >= n ? n - 1 : idx;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller, always two engine words.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * mag * std::cos(2.0 * M_PI * u2);
    }

    double lognormal(double log_mean, double log_sigma) {
        return std::exp(normal(log_mean, log_sigma));
    }

    // Inverse CDF, one engine word.
    double exponential(double mean) { return -mean * std::log(1.0 - uniform01()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace fairlend

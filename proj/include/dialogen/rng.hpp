#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace dialogen {

/// Every stochastic component takes one of these explicitly; nothing reads
/// global random state.
using Rng = std::mt19937_64;

/// Golden-ratio increment used by splitmix64.
inline constexpr std::uint64_t kSeedGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += kSeedGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of the i-th independent stream under `base`. Streams are
/// order-independent, so batches can be produced in parallel.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index));
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

/// Uniform integer in [lo, hi].
inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

} // namespace dialogen

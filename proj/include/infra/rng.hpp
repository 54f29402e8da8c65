#pragma once

#include <cstdint>
#include <random>

namespace infra {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Seed split: child seed for (stream, index) is
 * splitmix64(splitmix64(seed ^ splitmix64(stream)) + index).
 */
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
}

/** Uniform integer in [0, n). */
inline std::int64_t uniform_below(Rng& rng, std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace infra

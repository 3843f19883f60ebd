#pragma once

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <random>

namespace axonad {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent substream keyed by (seed, tags...). Used so that
/// shuffling, mask sampling and dropout for a given (epoch, batch, slot) do
/// not depend on evaluation order or thread count.
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(seed);
    for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(substream_seed(seed, tags));
}

/// Uniform double in [0, 1) from the top 53 bits; portable across standard
/// library implementations.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [lo, hi] (inclusive).
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = std::uint64_t(hi - lo) + 1;
    return lo + std::int64_t(uniform01(rng) * double(span)) % std::int64_t(span);
}

/// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace axonad

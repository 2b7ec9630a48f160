#pragma once

#include <cstdint>
#include <random>

namespace icetrial {

using Rng = std::mt19937_64;

// Stream seed for (seed, stream) from a splitmix64 finalizer. Replicate r of a
// run seeded with s always draws from derive_seed(s, r), whatever thread
// evaluates it.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform on the open interval (0, 1) from the top 53 bits.
inline double uniform_open01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace icetrial

#pragma once

// Counter-based random streams.  Every draw is a pure function of a 64-bit
// key and a counter, so samples are reproducible regardless of evaluation
// order or the number of worker threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace rstl::rng {

// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t v) noexcept {
    return mix(key ^ (v + 0x9e3779b97f4a7c15ull + (key << 6) + (key >> 2)));
}

// FNV-1a.  Stable across platforms and standard-library versions, which
// std::hash<std::string> is not.
inline constexpr std::uint64_t hash_str(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Uniform in the open interval (0,1); never returns an endpoint.
inline double uniform01(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform01(std::uint64_t key, std::uint64_t counter) noexcept {
    return uniform01(combine(key, counter));
}

// Standard normal deviate via Box-Muller on two counter draws.
inline double normal(std::uint64_t key, std::uint64_t counter) noexcept {
    const double u1 = uniform01(key, 2 * counter);
    const double u2 = uniform01(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rstl::rng

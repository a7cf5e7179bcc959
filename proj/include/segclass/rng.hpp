#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <utility>
#include <vector>

// Deterministic randomness helpers. Everything here is fully specified by the
// C++ standard (mt19937_64) or written out by hand, so identical seeds give
// identical streams on every platform and standard library. The std::
// distributions are deliberately avoided: their output is implementation
// defined and would break byte-identical reruns.
namespace segclass::rng {

// splitmix64 finalizer; derives well-separated stream seeds from a base seed.
inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return mix(a ^ mix(b));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Unbiased integer in [0, n) via rejection sampling.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen();
    while (v >= limit) v = gen();
    return v % n;
}

// Standard normal via Box-Muller on hand-rolled uniforms.
inline double normal(std::mt19937_64& gen) {
    double u1 = uniform01(gen);
    while (u1 <= 0.0) u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Fisher-Yates with our own bounded(); std::shuffle is implementation defined.
template <typename T>
void shuffle(std::vector<T>& values, std::mt19937_64& gen) {
    for (std::size_t i = values.size(); i > 1; --i) {
        using std::swap;
        swap(values[i - 1], values[bounded(gen, i)]);
    }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

template <typename Int>
std::uint64_t fnv1a64_ints(const std::vector<Int>& values) {
    return fnv1a64(values.data(), values.size() * sizeof(Int));
}

} // namespace segclass::rng

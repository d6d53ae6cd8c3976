#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tacegcn {

// All randomness in the library flows through explicit 64-bit seeds.
// Derived seeds use splitmix64 over (base, stream) so that every stage,
// fold, epoch and MC pass gets an independent, reproducible stream.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 1));
}

// Stage-name hashing (FNV-1a) so CLI stages derive independent seeds from
// one global seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return derive_seed(base, h);
}

// Uniform double in [0, 1). The mt19937_64 engine is fully specified by the
// standard, and the transforms below avoid the implementation-defined
// std:: distributions, so streams are bit-reproducible everywhere.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Unbiased integer in [0, n) via rejection sampling.
inline std::uint64_t uniform_int(std::mt19937_64& gen, std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen();
    while (v >= limit) v = gen();
    return v % n;
}

// Box-Muller without the cached second value, so consumption order is fixed.
inline double normal01(std::mt19937_64& gen) {
    double u1 = uniform01(gen);
    while (u1 <= 0.0) u1 = uniform01(gen);
    double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& gen) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_int(gen, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace tacegcn

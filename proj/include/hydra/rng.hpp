#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hydra::rng {

// All randomness in a run flows from one config seed. Named substreams keep
// stages (split, training, solver starts, deployment draws) independently
// reproducible: the draw order of one stage never perturbs another, and
// per-index substreams make parallel generation independent of worker count.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view name) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    std::uint64_t k = splitmix64(seed ^ hash_name(stream));
    return splitmix64(k ^ splitmix64(index));
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return std::mt19937_64(derive(seed, stream, index));
}

// Uniform in [0,1). Hand-rolled so draws are identical across standard
// library implementations.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Rejection-free modulo bias is negligible for
// our n (<< 2^32); use rejection anyway since it is cheap.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = g();
    } while (v >= limit);
    return v % n;
}

// Standard normal via Box-Muller.
inline double normal(std::mt19937_64& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Poisson draw by Knuth's product-of-uniforms, chunked so exp(-lambda)
// never underflows. Adequate for the per-interval rates we generate.
inline std::int64_t poisson(std::mt19937_64& g, double lambda) {
    std::int64_t total = 0;
    while (lambda > 500.0) {
        lambda -= 500.0;
        const double limit = std::exp(-500.0);
        double p = 1.0;
        std::int64_t k = 0;
        do {
            ++k;
            p *= uniform01(g);
        } while (p > limit);
        total += k - 1;
    }
    if (lambda <= 0.0) return total;
    const double limit = std::exp(-lambda);
    double p = 1.0;
    std::int64_t k = 0;
    do {
        ++k;
        p *= uniform01(g);
    } while (p > limit);
    return total + k - 1;
}

// Fisher-Yates shuffle driven by our own uniform draws.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& g) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace hydra::rng

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace driftpath::rng {

using Engine = std::mt19937_64;

// splitmix64 finalizer; used to spread raw seeds and derive independent
// per-member seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic member seed: ensemble member i of a run seeded with `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t member) {
    return splitmix64(master + (member + 1) * 0x9e3779b97f4a7c15ULL);
}

// Uniform double in [0, 1). The distributions in <random> are not pinned by
// the standard, so all sampling here is built from raw engine output to keep
// results identical across standard library implementations.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Bitmask rejection: unbiased and deterministic.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t v = eng() & mask;
        if (v < n) return v;
    }
}

// Standard normal via Box-Muller on raw engine draws.
inline double standard_normal(Engine& eng) {
    const double u1 = static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace driftpath::rng

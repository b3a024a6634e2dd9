#pragma once

#include <cstdint>
#include <random>

namespace rmt {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; maps (seed, stream) to a well-mixed child seed so
/// that replicas and workers get independent, reproducible streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

/// Uniform on the open interval (0, 1); never returns 0, so it is safe under
/// log and negative powers.
inline double uniform_open(Rng& rng) {
    for (;;) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (u > 0.0) return u;
    }
}

}  // namespace rmt

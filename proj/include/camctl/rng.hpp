#pragma once

#include <cstdint>
#include <random>

namespace camctl {

// splitmix64 step; used to derive stream seeds so that related seeds
// (scene 1, scene 2, ...) do not produce correlated mt19937_64 streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root ^ (0xA0761D6478BD642Full * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Uniform in [0, 1) built directly from the engine's 64-bit output.
// std::uniform_real_distribution is implementation-defined; this is not,
// which keeps seeded runs byte-identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace camctl

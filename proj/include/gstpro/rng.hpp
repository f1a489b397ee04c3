#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gstpro {

// SplitMix64 (Steele/Lea/Flood). Pure 64-bit integer arithmetic, so streams
// are identical across platforms and languages. The k-th draw of a stream is
// available in O(1), which makes it usable as a counter-based generator.
inline uint64_t splitmix64_mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t kSplitMix64Gamma = 0x9e3779b97f4a7c15ULL;

/// k-th output of the SplitMix64 stream seeded with `seed` (k counts from 0).
inline uint64_t splitmix64_at(uint64_t seed, uint64_t k) {
    return splitmix64_mix(seed + (k + 1) * kSplitMix64Gamma);
}

/// Map a 64-bit word to a double in [0, 1) using the top 53 bits.
inline double to_unit_double(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += kSplitMix64Gamma;
        return splitmix64_mix(state);
    }

    double uniform01() { return to_unit_double(next()); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n) via 128-bit multiply; no platform-dependent
    /// std::uniform_int_distribution involved.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Standard normal via Box-Muller. Two draws per call, no cached state.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own bounded draw; std::shuffle is not
        // reproducible across standard library implementations.
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }
};

}  // namespace gstpro

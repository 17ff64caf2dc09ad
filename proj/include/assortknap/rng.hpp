#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "assortknap/errors.hpp"

namespace assortknap {

// Deterministic, platform-independent RNG machinery. Standard-library
// distributions are implementation-defined, so experiment reproducibility
// (identical CSV bytes across machines and thread counts) requires both the
// generator and the draw helpers to be fixed-width integer code.

/// SplitMix64 step; also used to absorb key material when deriving streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed plus key components
/// (policy tag, horizon, trial index, ...). Order-sensitive by design.
inline std::uint64_t derive_stream_seed(std::uint64_t master,
                                        std::initializer_list<std::uint64_t> key) {
    std::uint64_t state = master ^ 0xa0761d6478bd642fULL;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t part : key) {
        state ^= part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h = splitmix64(state);
    }
    return h;
}

/// xoshiro256** generator. One instance per trajectory; never shared.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    int uniform_int(int n) {
        if (n <= 0) throw InputError("Rng::uniform_int: n must be positive");
        // Lemire's multiply-shift with rejection; exact uniformity.
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<int>(m >> 64);
    }

    /// Draws an index from a discrete distribution given by cumulative weights
    /// (last entry treated as the total mass).
    int categorical_from_cdf(const std::vector<double>& cdf) {
        const double u = uniform() * cdf.back();
        // binary search for first cdf[i] > u
        int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (cdf[static_cast<std::size_t>(mid)] > u) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

} // namespace assortknap

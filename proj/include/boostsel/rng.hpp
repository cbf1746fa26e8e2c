#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace boostsel {

// Deterministic PRNG used for every seeded operation in the library.
// A self-contained splitmix64 keeps plans and permutations bit-identical
// across platforms and standard-library versions; <random> distributions
// are implementation-defined and would break that.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // burn-in decorrelates trivially related seeds
        splitmix64(state_);
        splitmix64(state_);
    }

    // Independent substream for (seed, a, b): used so per-class shuffles and
    // per-(feature, repeat) permutations do not depend on evaluation order.
    static Rng stream(uint64_t seed, uint64_t a, uint64_t b = 0) {
        uint64_t s = seed;
        uint64_t mix = splitmix64(s);
        s = mix ^ (a * 0x9e3779b97f4a7c15ULL);
        mix = splitmix64(s);
        s = mix ^ (b * 0xc2b2ae3d27d4eb4fULL);
        return Rng(s);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, n) without modulo bias (Lemire's method with rejection).
    uint64_t next_below(uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
        auto lo = static_cast<uint64_t>(m);
        if (lo < n) {
            const uint64_t threshold = (0ULL - n) % n;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(next_u64()) * n;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (one value per call, no cached state).
    double next_gaussian() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Permutation of [0, n).
    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    uint64_t state_;
};

}  // namespace boostsel

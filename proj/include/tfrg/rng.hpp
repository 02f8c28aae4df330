#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tfrg {

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64. Streams are
// derived from (master_seed, stream_index), so replica i always sees the same
// sequence no matter which worker runs it.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t s = master_seed;
        std::uint64_t a = splitmix64(s);
        // fold the stream index through a second splitmix pass
        std::uint64_t t = a ^ (stream_index + 0x9e3779b97f4a7c15ull);
        return Rng(splitmix64(t));
    }

    std::uint64_t next_u64() {
        std::uint64_t* s = state_;
        std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // UniformRandomBitGenerator interface for <random> distributions.
    std::uint64_t operator()() { return next_u64(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    // Unbiased integer in [0, bound), Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) {
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            std::uint64_t threshold = (-bound) % bound;
            while (lo < threshold) {
                m = static_cast<__uint128_t>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t poisson(double lambda) {
        std::poisson_distribution<std::uint64_t> dist(lambda);
        return dist(*this);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& s) {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
};

}  // namespace tfrg

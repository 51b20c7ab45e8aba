#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace duplex {

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic xoshiro256++ stream with labeled substream derivation.
// All draw helpers are hand-rolled; std::*_distribution is unspecified across
// standard libraries and would break replay and golden files.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : origin_seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    RngStream(std::uint64_t seed, std::string_view label)
        : RngStream(derive_seed(seed, label)) {}

    static constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
        std::uint64_t s = seed ^ fnv1a64(label);
        return splitmix64_next(s);
    }

    // Independent stream keyed on this stream's identity, not its position.
    RngStream substream(std::string_view label) const {
        return RngStream(origin_seed_, label);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, bound) (Lemire's multiply-shift).
    std::uint64_t uniform_below(std::uint64_t bound) {
        using u128 = unsigned __int128;
        std::uint64_t x = next_u64();
        u128 m = static_cast<u128>(x) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = -bound % bound;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<u128>(x) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; two uniforms per draw, no cached spare,
    // so the consumed stream length is a fixed function of the call count.
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t origin_seed_ = 0;
    std::uint64_t state_[4] = {};
};

}  // namespace duplex

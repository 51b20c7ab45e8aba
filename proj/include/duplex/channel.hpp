#pragma once

#include <cassert>
#include <cstdint>
#include <string_view>
#include <utility>

#include "duplex/errors.hpp"
#include "duplex/rng.hpp"

namespace duplex {

struct ChannelConfig {
    double noise_p = 0.0;
    std::uint64_t rng_seed = 0;
};

// Fixed labels deriving the per-direction substreams from the dialogue seed,
// so corrupting one direction never perturbs the other's draws.
inline constexpr std::string_view kChannelStreamAToB = "chan/a2b";
inline constexpr std::string_view kChannelStreamBToA = "chan/b2a";

// With probability noise_p the token is resampled uniformly from the other
// vocab_size-1 symbols. An altered token never maps to itself, so noise_p is
// the effective corruption rate.
inline std::uint32_t corrupt_frame(std::uint32_t token, std::uint32_t vocab_size, double noise_p,
                                   RngStream& rng) {
    if (vocab_size < 2) throw InvalidVocabError("corrupt_frame: vocab_size must be >= 2");
    assert(token < vocab_size);
    const double u = rng.uniform();
    if (u >= noise_p) return token;
    const auto draw = static_cast<std::uint32_t>(rng.uniform_below(vocab_size - 1));
    return draw >= token ? draw + 1 : draw;
}

// Sequential token router for one dialogue. Not shareable mid-dialogue; run
// concurrent dialogues with distinct instances.
class DuplexChannel {
public:
    DuplexChannel(const ChannelConfig& cfg, std::uint32_t vocab_size)
        : noise_p_(cfg.noise_p),
          vocab_size_(vocab_size),
          a_to_b_(cfg.rng_seed, kChannelStreamAToB),
          b_to_a_(cfg.rng_seed, kChannelStreamBToA) {
        if (vocab_size < 2) throw InvalidVocabError("DuplexChannel: vocab_size must be >= 2");
        if (cfg.noise_p < 0.0 || cfg.noise_p > 1.0)
            throw ValidationError("DuplexChannel: noise_p outside [0,1]");
    }

    // (out_a, out_b) -> (in_b, in_a)
    std::pair<std::uint32_t, std::uint32_t> route_step(std::uint32_t out_a, std::uint32_t out_b) {
        const std::uint32_t in_b = corrupt_frame(out_a, vocab_size_, noise_p_, a_to_b_);
        const std::uint32_t in_a = corrupt_frame(out_b, vocab_size_, noise_p_, b_to_a_);
        return {in_b, in_a};
    }

private:
    double noise_p_;
    std::uint32_t vocab_size_;
    RngStream a_to_b_;
    RngStream b_to_a_;
};

}  // namespace duplex

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "duplex/errors.hpp"

namespace duplex {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Per-frame internal states of one participant, rows = frames, cols = dims.
using ActivationMatrix = MatrixX<double>;

struct FrameClock {
    int frame_ms = 80;

    bool valid() const { return frame_ms > 0; }
};

enum class AgentVariant : std::uint8_t { Default, Finetuned };

inline const char* to_string(AgentVariant v) {
    return v == AgentVariant::Default ? "default" : "finetuned";
}

inline AgentVariant variant_from_string(const std::string& s) {
    if (s == "default") return AgentVariant::Default;
    if (s == "finetuned") return AgentVariant::Finetuned;
    throw ValidationError("unknown agent variant: '" + s + "'");
}

struct ExperimentCondition {
    double noise_p = 0.0;
    double pad_bias_a = 0.0;
    double pad_bias_b = 0.0;
    AgentVariant variant_a = AgentVariant::Default;
    AgentVariant variant_b = AgentVariant::Default;
    std::uint64_t seed = 0;
};

struct TokenTrack {
    std::uint32_t vocab_size = 2;
    std::uint32_t pad_id = 0;
    std::vector<std::uint32_t> tokens;

    std::int64_t n_frames() const { return static_cast<std::int64_t>(tokens.size()); }
};

struct VadTrack {
    std::vector<std::uint8_t> voiced;  // 0/1 per frame

    std::int64_t n_frames() const { return static_cast<std::int64_t>(voiced.size()); }
};

struct ParticipantTrack {
    ActivationMatrix activations;  // n_frames x dim
    TokenTrack tokens;
    VadTrack vad;
};

struct DialogueTrace {
    FrameClock clock;
    ExperimentCondition condition;
    ParticipantTrack a;
    ParticipantTrack b;
    std::int64_t duration_frames = 0;
};

// voiced[t] = (tokens[t] != pad_id)
inline VadTrack derive_vad(const TokenTrack& tokens) {
    VadTrack vad;
    vad.voiced.resize(tokens.tokens.size());
    for (std::size_t t = 0; t < tokens.tokens.size(); ++t)
        vad.voiced[t] = tokens.tokens[t] != tokens.pad_id ? 1 : 0;
    return vad;
}

// Full type-invariant check. Token/VAD consistency (voiced[t] iff non-PAD) is
// guaranteed for simulated traces but optional for ingested ones, where VAD
// may come from an external detector.
void validate_trace(const DialogueTrace& trace, bool require_vad_token_consistency = false);

}  // namespace duplex

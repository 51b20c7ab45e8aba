#include "duplex/trace.hpp"

#include <string>

namespace duplex {

namespace {

void validate_participant(const ParticipantTrack& p, std::int64_t n_frames, const char* name,
                          bool require_vad_token_consistency) {
    if (p.activations.rows() != n_frames)
        throw ValidationError(std::string("participant ") + name + ": activation rows " +
                              std::to_string(p.activations.rows()) + " != duration " +
                              std::to_string(n_frames));
    if (p.activations.cols() < 1)
        throw ValidationError(std::string("participant ") + name + ": activation dim < 1");
    if (!p.activations.allFinite())
        throw NonFiniteError(std::string("participant ") + name +
                             ": activations contain NaN/Inf");

    if (p.tokens.vocab_size < 2)
        throw InvalidVocabError(std::string("participant ") + name + ": vocab_size < 2");
    if (p.tokens.pad_id >= p.tokens.vocab_size)
        throw ValidationError(std::string("participant ") + name + ": pad_id >= vocab_size");
    if (p.tokens.n_frames() != n_frames)
        throw ValidationError(std::string("participant ") + name + ": token frames " +
                              std::to_string(p.tokens.n_frames()) + " != duration " +
                              std::to_string(n_frames));
    for (std::size_t t = 0; t < p.tokens.tokens.size(); ++t) {
        if (p.tokens.tokens[t] >= p.tokens.vocab_size)
            throw ValidationError(std::string("participant ") + name + ": token out of range at frame " +
                                  std::to_string(t));
    }

    if (p.vad.n_frames() != n_frames)
        throw ValidationError(std::string("participant ") + name + ": VAD frames " +
                              std::to_string(p.vad.n_frames()) + " != duration " +
                              std::to_string(n_frames));
    for (std::size_t t = 0; t < p.vad.voiced.size(); ++t) {
        if (p.vad.voiced[t] > 1)
            throw ValidationError(std::string("participant ") + name + ": VAD byte not 0/1 at frame " +
                                  std::to_string(t));
        if (require_vad_token_consistency) {
            const bool speaking = p.tokens.tokens[t] != p.tokens.pad_id;
            if (speaking != (p.vad.voiced[t] != 0))
                throw ValidationError(std::string("participant ") + name +
                                      ": VAD inconsistent with tokens at frame " + std::to_string(t));
        }
    }
}

}  // namespace

void validate_trace(const DialogueTrace& trace, bool require_vad_token_consistency) {
    if (!trace.clock.valid()) throw ValidationError("frame_ms must be > 0");
    if (trace.duration_frames < 0) throw ValidationError("negative duration");
    if (trace.condition.noise_p < 0.0 || trace.condition.noise_p > 1.0)
        throw ValidationError("noise_p outside [0,1]");
    if (trace.condition.pad_bias_a < 0.0 || trace.condition.pad_bias_b < 0.0)
        throw ValidationError("pad bias must be nonnegative");
    validate_participant(trace.a, trace.duration_frames, "A", require_vad_token_consistency);
    validate_participant(trace.b, trace.duration_frames, "B", require_vad_token_consistency);
}

}  // namespace duplex

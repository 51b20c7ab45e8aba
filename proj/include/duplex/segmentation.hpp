#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "duplex/trace.hpp"

namespace duplex {

enum class Speaker : std::uint8_t { A, B };

inline const char* to_string(Speaker s) { return s == Speaker::A ? "A" : "B"; }

inline Speaker other(Speaker s) { return s == Speaker::A ? Speaker::B : Speaker::A; }

// Maximal voiced segment; silences shorter than the IPU threshold are bridged
// (possible only when frame_ms < threshold).
struct Ipu {
    std::int64_t onset_frame = 0;
    std::int64_t offset_frame = 0;  // inclusive, voiced
    Speaker speaker = Speaker::A;
};

enum class TransitionKind : std::uint8_t { Hold, NonHold, Excluded };

enum class ExclusionReason : std::uint8_t { None, LongPause, LongOverlap, TraceEnd };

const char* to_string(TransitionKind k);
const char* to_string(ExclusionReason r);

struct TransitionLabel {
    std::int64_t boundary_frame = 0;  // an end-of-IPU frame
    Speaker speaker = Speaker::A;
    TransitionKind label = TransitionKind::Hold;
    ExclusionReason exclusion_reason = ExclusionReason::None;
};

inline constexpr int kIpuSilenceMs = 80;
inline constexpr int kMaxHoldPauseMs = 1000;
inline constexpr int kMaxOverlapMs = 240;

// Voiced runs separated by at least min_silence_ms of silence. At the default
// 80 ms clock every silent frame qualifies, so IPUs are plain maximal runs.
std::vector<Ipu> extract_ipus(const VadTrack& vad, FrameClock clock, Speaker speaker,
                              int min_silence_ms = kIpuSilenceMs);

// target[t] = 1 iff t is an IPU offset with at least one silent frame after it
// inside the trace. An IPU ending at the final frame produces no target.
std::vector<std::uint8_t> eoi_targets(const std::vector<Ipu>& ipus, std::int64_t n_frames);

// Hold / Non-Hold / Excluded per end-of-IPU boundary. Overlap is the longest
// contiguous co-voiced run inside the ending IPU; the pause bound is measured
// over the silent frames between boundary and next onset.
std::vector<TransitionLabel> label_transitions(const std::vector<Ipu>& ipus_a,
                                               const std::vector<Ipu>& ipus_b, FrameClock clock,
                                               std::int64_t n_frames,
                                               int max_pause_ms = kMaxHoldPauseMs,
                                               int max_overlap_ms = kMaxOverlapMs);

// JSON-lines export, one record per IPU / transition.
void write_ipus_jsonl(const std::vector<Ipu>& ipus, FrameClock clock,
                      const std::filesystem::path& path);
void write_transitions_jsonl(const std::vector<TransitionLabel>& labels, FrameClock clock,
                             const std::filesystem::path& path);

}  // namespace duplex

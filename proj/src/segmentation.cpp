#include "duplex/segmentation.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "duplex/errors.hpp"

namespace duplex {

const char* to_string(TransitionKind k) {
    switch (k) {
        case TransitionKind::Hold: return "hold";
        case TransitionKind::NonHold: return "nonhold";
        case TransitionKind::Excluded: return "excluded";
    }
    return "?";
}

const char* to_string(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::None: return "none";
        case ExclusionReason::LongPause: return "long_pause";
        case ExclusionReason::LongOverlap: return "long_overlap";
        case ExclusionReason::TraceEnd: return "trace_end";
    }
    return "?";
}

std::vector<Ipu> extract_ipus(const VadTrack& vad, FrameClock clock, Speaker speaker,
                              int min_silence_ms) {
    if (!clock.valid()) throw ValidationError("extract_ipus: frame_ms must be > 0");

    std::vector<Ipu> ipus;
    const std::int64_t n = vad.n_frames();
    std::int64_t t = 0;
    while (t < n) {
        if (!vad.voiced[static_cast<std::size_t>(t)]) {
            ++t;
            continue;
        }
        std::int64_t end = t;
        while (end + 1 < n && vad.voiced[static_cast<std::size_t>(end + 1)]) ++end;
        if (!ipus.empty()) {
            const std::int64_t gap = t - ipus.back().offset_frame - 1;
            if (gap * clock.frame_ms < min_silence_ms) {
                ipus.back().offset_frame = end;  // sub-threshold pause, bridge it
                t = end + 1;
                continue;
            }
        }
        ipus.push_back(Ipu{t, end, speaker});
        t = end + 1;
    }
    return ipus;
}

std::vector<std::uint8_t> eoi_targets(const std::vector<Ipu>& ipus, std::int64_t n_frames) {
    std::vector<std::uint8_t> targets(static_cast<std::size_t>(n_frames), 0);
    for (const Ipu& ipu : ipus) {
        if (ipu.offset_frame < 0 || ipu.offset_frame >= n_frames)
            throw ValidationError("eoi_targets: IPU offset outside trace");
        if (ipu.offset_frame + 1 < n_frames)
            targets[static_cast<std::size_t>(ipu.offset_frame)] = 1;
    }
    return targets;
}

namespace {

bool voiced_at(const std::vector<Ipu>& ipus, std::int64_t frame) {
    for (const Ipu& ipu : ipus)
        if (ipu.onset_frame <= frame && frame <= ipu.offset_frame) return true;
    return false;
}

// Longest contiguous run of partner-voiced frames within [onset, offset].
std::int64_t longest_overlap_run(const std::vector<Ipu>& partner, std::int64_t onset,
                                 std::int64_t offset) {
    std::int64_t best = 0;
    for (const Ipu& ipu : partner) {
        const std::int64_t lo = std::max(onset, ipu.onset_frame);
        const std::int64_t hi = std::min(offset, ipu.offset_frame);
        if (hi >= lo) best = std::max(best, hi - lo + 1);
    }
    return best;
}

// Earliest IPU onset strictly after the boundary, if any.
std::optional<std::int64_t> next_onset_after(const std::vector<Ipu>& ipus, std::int64_t frame) {
    std::optional<std::int64_t> best;
    for (const Ipu& ipu : ipus)
        if (ipu.onset_frame > frame && (!best || ipu.onset_frame < *best)) best = ipu.onset_frame;
    return best;
}

void label_for_speaker(const std::vector<Ipu>& own, const std::vector<Ipu>& partner,
                       Speaker speaker, FrameClock clock, std::int64_t n_frames, int max_pause_ms,
                       int max_overlap_ms, std::vector<TransitionLabel>& out) {
    for (const Ipu& ipu : own) {
        const std::int64_t b = ipu.offset_frame;
        if (b + 1 >= n_frames) continue;  // no observable silence, not an EOI

        TransitionLabel label;
        label.boundary_frame = b;
        label.speaker = speaker;

        const std::int64_t overlap = longest_overlap_run(partner, ipu.onset_frame, b);
        if (overlap * clock.frame_ms > max_overlap_ms) {
            label.label = TransitionKind::Excluded;
            label.exclusion_reason = ExclusionReason::LongOverlap;
            out.push_back(label);
            continue;
        }

        auto own_next = next_onset_after(own, b);
        auto partner_next = next_onset_after(partner, b);
        // A partner mid-IPU at the boundary holds the floor: it counts as a
        // partner onset at b+1 for precedence.
        if (voiced_at(partner, b) && voiced_at(partner, b + 1))
            partner_next = b + 1;

        if (!own_next && !partner_next) {
            label.label = TransitionKind::Excluded;
            label.exclusion_reason = ExclusionReason::TraceEnd;
            out.push_back(label);
            continue;
        }

        const std::int64_t earliest =
            std::min(own_next.value_or(n_frames + 1), partner_next.value_or(n_frames + 1));
        const std::int64_t silent_gap = earliest - b - 1;
        if (silent_gap * clock.frame_ms > max_pause_ms) {
            label.label = TransitionKind::Excluded;
            label.exclusion_reason = ExclusionReason::LongPause;
            out.push_back(label);
            continue;
        }

        // Ties go to the partner (a simultaneous restart reads as a switch).
        if (partner_next && *partner_next <= earliest)
            label.label = TransitionKind::NonHold;
        else
            label.label = TransitionKind::Hold;
        label.exclusion_reason = ExclusionReason::None;
        out.push_back(label);
    }
}

}  // namespace

std::vector<TransitionLabel> label_transitions(const std::vector<Ipu>& ipus_a,
                                               const std::vector<Ipu>& ipus_b, FrameClock clock,
                                               std::int64_t n_frames, int max_pause_ms,
                                               int max_overlap_ms) {
    if (!clock.valid()) throw ValidationError("label_transitions: frame_ms must be > 0");

    std::vector<TransitionLabel> labels;
    label_for_speaker(ipus_a, ipus_b, Speaker::A, clock, n_frames, max_pause_ms, max_overlap_ms,
                      labels);
    label_for_speaker(ipus_b, ipus_a, Speaker::B, clock, n_frames, max_pause_ms, max_overlap_ms,
                      labels);
    std::sort(labels.begin(), labels.end(), [](const TransitionLabel& x, const TransitionLabel& y) {
        if (x.boundary_frame != y.boundary_frame) return x.boundary_frame < y.boundary_frame;
        return static_cast<int>(x.speaker) < static_cast<int>(y.speaker);
    });
    return labels;
}

void write_ipus_jsonl(const std::vector<Ipu>& ipus, FrameClock clock,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    for (const Ipu& ipu : ipus) {
        nlohmann::json rec = {
            {"speaker", to_string(ipu.speaker)},
            {"onset_frame", ipu.onset_frame},
            {"offset_frame", ipu.offset_frame},
            {"onset_ms", ipu.onset_frame * clock.frame_ms},
            {"offset_ms", (ipu.offset_frame + 1) * clock.frame_ms},
        };
        out << rec.dump() << "\n";
    }
}

void write_transitions_jsonl(const std::vector<TransitionLabel>& labels, FrameClock clock,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    for (const TransitionLabel& label : labels) {
        nlohmann::json rec = {
            {"speaker", to_string(label.speaker)},
            {"boundary_frame", label.boundary_frame},
            {"boundary_ms", label.boundary_frame * clock.frame_ms},
            {"label", to_string(label.label)},
            {"exclusion_reason", to_string(label.exclusion_reason)},
        };
        out << rec.dump() << "\n";
    }
}

}  // namespace duplex

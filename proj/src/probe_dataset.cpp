#include "duplex/probe.hpp"

#include <algorithm>
#include <numeric>

#include "duplex/errors.hpp"

namespace duplex {

const char* to_string(ProbeTask t) {
    return t == ProbeTask::EndOfIpu ? "eoi" : "hold_vs_nonhold";
}

const char* to_string(Perspective p) {
    return p == Perspective::Production ? "production" : "perception";
}

ProbeTask probe_task_from_string(const std::string& s) {
    if (s == "eoi") return ProbeTask::EndOfIpu;
    if (s == "hold_vs_nonhold" || s == "hold") return ProbeTask::HoldVsNonHold;
    throw ValidationError("unknown probe task: '" + s + "'");
}

Perspective perspective_from_string(const std::string& s) {
    if (s == "production") return Perspective::Production;
    if (s == "perception") return Perspective::Perception;
    throw ValidationError("unknown perspective: '" + s + "'");
}

namespace {

// Frame-level label/mask tracks for one label owner within one dialogue.
struct OwnerTargets {
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> mask;  // before the delay cut
};

OwnerTargets owner_targets(const DialogueTrace& trace, Speaker owner, ProbeTask task) {
    const auto n = trace.duration_frames;
    const ParticipantTrack& own = owner == Speaker::A ? trace.a : trace.b;
    const ParticipantTrack& partner = owner == Speaker::A ? trace.b : trace.a;

    OwnerTargets out;
    if (task == ProbeTask::EndOfIpu) {
        const auto ipus = extract_ipus(own.vad, trace.clock, owner);
        out.labels = eoi_targets(ipus, n);
        out.mask.assign(static_cast<std::size_t>(n), 1);
        return out;
    }

    const auto own_ipus = extract_ipus(own.vad, trace.clock, owner);
    const auto partner_ipus = extract_ipus(partner.vad, trace.clock, other(owner));
    const auto labels = owner == Speaker::A
                            ? label_transitions(own_ipus, partner_ipus, trace.clock, n)
                            : label_transitions(partner_ipus, own_ipus, trace.clock, n);
    out.labels.assign(static_cast<std::size_t>(n), 0);
    out.mask.assign(static_cast<std::size_t>(n), 0);
    for (const TransitionLabel& label : labels) {
        if (label.speaker != owner) continue;
        if (label.label == TransitionKind::Excluded) continue;
        const auto b = static_cast<std::size_t>(label.boundary_frame);
        out.mask[b] = 1;
        out.labels[b] = label.label == TransitionKind::NonHold ? 1 : 0;
    }
    return out;
}

Eigen::MatrixXd delayed_features(const ActivationMatrix& act, int delay) {
    const auto n = act.rows();
    Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n, act.cols());
    if (delay < n) features.bottomRows(n - delay) = act.topRows(n - delay);
    return features;
}

}  // namespace

ProbeDataset build_probe_dataset(const std::vector<DialogueTrace>& traces, ProbeTask task,
                                 Perspective perspective, int delay_frames,
                                 std::uint64_t split_seed) {
    if (traces.empty()) throw ValidationError("build_probe_dataset: no traces");
    if (delay_frames < 0) throw ValidationError("build_probe_dataset: delay must be >= 0");

    ProbeDataset ds;
    ds.task = task;
    ds.perspective = perspective;
    ds.delay_frames = delay_frames;
    ds.input_dim = static_cast<int>(traces.front().a.activations.cols());

    std::vector<std::size_t> usable_dialogues;
    for (std::size_t d = 0; d < traces.size(); ++d) {
        const DialogueTrace& trace = traces[d];
        if (trace.duration_frames <= delay_frames) {
            ds.warnings.push_back("dialogue " + std::to_string(d) +
                                  " shorter than the probe delay, dropped");
            continue;
        }

        std::vector<ProbeSequence> candidates;
        for (Speaker participant : {Speaker::A, Speaker::B}) {
            const Speaker owner =
                perspective == Perspective::Production ? participant : other(participant);
            OwnerTargets targets = owner_targets(trace, owner, task);

            ProbeSequence seq;
            const ParticipantTrack& feats = participant == Speaker::A ? trace.a : trace.b;
            seq.features = delayed_features(feats.activations, delay_frames);
            seq.labels = std::move(targets.labels);
            seq.mask = std::move(targets.mask);
            // Strict causality: the first delay output frames see no state.
            for (int t = 0; t < delay_frames; ++t) seq.mask[static_cast<std::size_t>(t)] = 0;
            seq.dialogue_index = d;
            seq.participant = participant;

            bool any = false;
            for (std::uint8_t m : seq.mask) any = any || m;
            if (any) candidates.push_back(std::move(seq));
        }

        if (candidates.empty()) {
            ds.warnings.push_back("dialogue " + std::to_string(d) +
                                  " has no valid target frames, dropped");
            continue;
        }
        usable_dialogues.push_back(d);
        for (auto& seq : candidates) ds.sequences.push_back(std::move(seq));
    }

    if (usable_dialogues.empty())
        throw ValidationError("build_probe_dataset: every dialogue was dropped");

    // 80/20 split by dialogue (32/8 at the 40-dialogue scale).
    std::vector<std::size_t> shuffled = usable_dialogues;
    RngStream rng(split_seed, "split");
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    const std::size_t n_test = std::max<std::size_t>(1, shuffled.size() / 5);
    ds.test_dialogues.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
    ds.train_dialogues.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());
    std::sort(ds.test_dialogues.begin(), ds.test_dialogues.end());
    std::sort(ds.train_dialogues.begin(), ds.train_dialogues.end());
    if (ds.train_dialogues.empty())
        throw ValidationError("build_probe_dataset: train split is empty");

    for (std::size_t s = 0; s < ds.sequences.size(); ++s) {
        const bool in_test = std::binary_search(ds.test_dialogues.begin(), ds.test_dialogues.end(),
                                                ds.sequences[s].dialogue_index);
        (in_test ? ds.test_sequences : ds.train_sequences).push_back(s);
    }
    return ds;
}

}  // namespace duplex

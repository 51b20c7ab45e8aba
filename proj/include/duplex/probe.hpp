#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "duplex/lstm.hpp"
#include "duplex/segmentation.hpp"
#include "duplex/trace.hpp"

namespace duplex {

enum class ProbeTask : std::uint8_t { EndOfIpu, HoldVsNonHold };
enum class Perspective : std::uint8_t { Production, Perception };

const char* to_string(ProbeTask t);
const char* to_string(Perspective p);
ProbeTask probe_task_from_string(const std::string& s);
Perspective perspective_from_string(const std::string& s);

struct ProbeConfig {
    ProbeTask task = ProbeTask::EndOfIpu;
    Perspective perspective = Perspective::Production;
    int delay_frames = 0;
    int hidden_size = 64;
    double learning_rate = 1e-3;
    int batch_size = 16;
    int epochs = 200;
    std::uint64_t seed = 0;
};

// One participant's view of one dialogue. features.row(t) is the activation
// from frame t - delay (zero rows below the delay, masked out), so every
// labeled frame sees only states at least delay frames old.
struct ProbeSequence {
    Eigen::MatrixXd features;          // n_frames x d
    std::vector<std::uint8_t> labels;  // defined wherever mask = 1
    std::vector<std::uint8_t> mask;
    std::size_t dialogue_index = 0;
    Speaker participant = Speaker::A;
};

struct ProbeDataset {
    std::vector<ProbeSequence> sequences;
    std::vector<std::size_t> train_sequences;  // indices into sequences
    std::vector<std::size_t> test_sequences;
    std::vector<std::size_t> train_dialogues;
    std::vector<std::size_t> test_dialogues;
    ProbeTask task = ProbeTask::EndOfIpu;
    Perspective perspective = Perspective::Production;
    int delay_frames = 0;
    int input_dim = 0;
    std::vector<std::string> warnings;  // dropped dialogues etc.
};

// Production: a participant's own upcoming events from its own delayed states.
// Perception: the partner's upcoming events from the same delayed states.
// Hold = 0, NonHold = 1; excluded transitions are masked out. The train/test
// split is 80/20 by dialogue, never within one.
ProbeDataset build_probe_dataset(const std::vector<DialogueTrace>& traces, ProbeTask task,
                                 Perspective perspective, int delay_frames,
                                 std::uint64_t split_seed);

struct ProbeRun {
    ProbeConfig config;
    LstmParams params;
    std::vector<double> loss_history;  // one masked-mean loss per epoch
    double test_auc = 0.0;
    bool label_shuffled = false;
};

// Deterministic given (dataset, config): fixed init, fixed per-epoch shuffle
// order. shuffle_labels permutes train labels across masked-in positions while
// keeping init and batch order identical to the paired real run.
ProbeRun train_probe(const ProbeDataset& dataset, const ProbeConfig& config,
                     bool shuffle_labels = false);

inline ProbeRun shuffled_baseline(const ProbeDataset& dataset, const ProbeConfig& config) {
    return train_probe(dataset, config, /*shuffle_labels=*/true);
}

// Pooled test-set scores/labels under a trained probe.
void probe_test_scores(const ProbeDataset& dataset, const LstmParams& params,
                       std::vector<double>& scores, std::vector<std::uint8_t>& labels,
                       std::vector<std::size_t>* dialogue_of_score = nullptr);

struct DelaySweepRow {
    int delay_frames = 0;
    double auc = 0.0;
    double auc_shuffled = 0.0;
    double ci_lo = 0.0;  // dialogue-level bootstrap over the test split
    double ci_hi = 0.0;
    bool ok = false;
    std::string error;
};

// One (real, shuffled) probe pair per delay; per-delay failures are reported
// in the row and the sweep continues. trained_params, when given, receives the
// real run's parameters per delay (default-constructed for failed rows).
std::vector<DelaySweepRow> delay_sweep(const std::vector<DialogueTrace>& traces, ProbeTask task,
                                       Perspective perspective, const std::vector<int>& delay_grid,
                                       const ProbeConfig& base_config, std::uint64_t split_seed,
                                       int bootstrap_samples = 200,
                                       std::vector<LstmParams>* trained_params = nullptr);

inline std::vector<int> default_delay_grid() {
    std::vector<int> grid;
    for (int d = 0; d <= 24; ++d) grid.push_back(d);  // 0..1920 ms at 80 ms frames
    return grid;
}

}  // namespace duplex

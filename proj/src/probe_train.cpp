#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "duplex/adam.hpp"
#include "duplex/errors.hpp"
#include "duplex/metrics.hpp"
#include "duplex/probe.hpp"
#include "duplex/rng.hpp"

namespace duplex {

namespace {

std::size_t masked_count(const ProbeSequence& seq) {
    std::size_t count = 0;
    for (std::uint8_t m : seq.mask) count += m ? 1 : 0;
    return count;
}

// Uniform permutation of train labels across masked-in positions.
void shuffle_train_labels(std::vector<ProbeSequence>& sequences,
                          const std::vector<std::size_t>& train_sequences, RngStream& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> positions;  // (sequence, frame)
    for (std::size_t s : train_sequences)
        for (std::size_t t = 0; t < sequences[s].mask.size(); ++t)
            if (sequences[s].mask[t]) positions.emplace_back(s, t);

    std::vector<std::uint8_t> pool;
    pool.reserve(positions.size());
    for (auto [s, t] : positions) pool.push_back(sequences[s].labels[t]);
    for (std::size_t i = pool.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_below(i);
        std::swap(pool[i - 1], pool[j]);
    }
    for (std::size_t k = 0; k < positions.size(); ++k)
        sequences[positions[k].first].labels[positions[k].second] = pool[k];
}

}  // namespace

ProbeRun train_probe(const ProbeDataset& dataset, const ProbeConfig& config, bool shuffle_labels) {
    if (dataset.train_sequences.empty()) throw ValidationError("train_probe: empty train split");
    if (config.hidden_size < 1) throw ValidationError("train_probe: hidden size must be >= 1");
    if (config.epochs < 1) throw ValidationError("train_probe: epochs must be >= 1");
    if (config.batch_size < 1) throw ValidationError("train_probe: batch size must be >= 1");
    if (config.delay_frames != dataset.delay_frames)
        throw ValidationError("train_probe: config delay differs from the dataset's");

    // The paired shuffled run shares the init and batch-order streams; only the
    // label permutation stream is extra.
    RngStream init_rng(config.seed, "probe-init");
    RngStream batch_rng(config.seed, "probe-batch");

    std::vector<ProbeSequence> sequences = dataset.sequences;
    if (shuffle_labels) {
        RngStream perm_rng(config.seed, "probe-label-perm");
        shuffle_train_labels(sequences, dataset.train_sequences, perm_rng);
    }

    ProbeRun run;
    run.config = config;
    run.label_shuffled = shuffle_labels;
    run.params = LstmParams::init(dataset.input_dim, config.hidden_size, init_rng);
    run.loss_history.reserve(static_cast<std::size_t>(config.epochs));

    AdamState adam = AdamState::zeros_like(run.params);
    const AdamConfig adam_cfg{config.learning_rate, 0.9, 0.999, 1e-8};

    std::vector<std::size_t> order = dataset.train_sequences;
    LstmGrads batch_grads = LstmGrads::zeros_like(run.params);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = batch_rng.uniform_below(i);
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss_sum = 0.0;
        std::size_t epoch_mask_total = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(config.batch_size));

            std::size_t batch_mask_total = 0;
            for (std::size_t k = batch_start; k < batch_end; ++k)
                batch_mask_total += masked_count(sequences[order[k]]);
            if (batch_mask_total == 0) continue;

            batch_grads.setZero();
            double batch_loss_sum = 0.0;
            for (std::size_t k = batch_start; k < batch_end; ++k) {
                const ProbeSequence& seq = sequences[order[k]];
                LstmCache cache;
                const Eigen::VectorXd logits = lstm_forward(run.params, seq.features, &cache);

                Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(logits.size());
                for (Eigen::Index t = 0; t < logits.size(); ++t) {
                    const auto ut = static_cast<std::size_t>(t);
                    if (!seq.mask[ut]) continue;
                    const double z = logits(t);
                    const double y = seq.labels[ut] ? 1.0 : 0.0;
                    batch_loss_sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
                    dlogits(t) = (sigmoid(z) - y) / static_cast<double>(batch_mask_total);
                }

                const LstmGrads grads = lstm_backward(run.params, seq.features, cache, dlogits);
                batch_grads.w_input += grads.w_input;
                batch_grads.w_recur += grads.w_recur;
                batch_grads.bias += grads.bias;
                batch_grads.readout_w += grads.readout_w;
                batch_grads.readout_b += grads.readout_b;
            }

            adam_step(run.params, batch_grads, adam, adam_cfg);
            epoch_loss_sum += batch_loss_sum;
            epoch_mask_total += batch_mask_total;
        }

        if (epoch_mask_total == 0) throw EmptyMaskError("train_probe: no masked train frames");
        run.loss_history.push_back(epoch_loss_sum / static_cast<double>(epoch_mask_total));
    }

    // Test AUC over pooled masked test frames (original labels, never shuffled).
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    probe_test_scores(dataset, run.params, scores, labels);
    run.test_auc = auc_roc(scores, labels);
    return run;
}

void probe_test_scores(const ProbeDataset& dataset, const LstmParams& params,
                       std::vector<double>& scores, std::vector<std::uint8_t>& labels,
                       std::vector<std::size_t>* dialogue_of_score) {
    scores.clear();
    labels.clear();
    if (dialogue_of_score) dialogue_of_score->clear();
    for (std::size_t s : dataset.test_sequences) {
        const ProbeSequence& seq = dataset.sequences[s];
        const Eigen::VectorXd logits = lstm_forward(params, seq.features);
        for (Eigen::Index t = 0; t < logits.size(); ++t) {
            const auto ut = static_cast<std::size_t>(t);
            if (!seq.mask[ut]) continue;
            scores.push_back(logits(t));
            labels.push_back(seq.labels[ut]);
            if (dialogue_of_score) dialogue_of_score->push_back(seq.dialogue_index);
        }
    }
}

namespace {

// Percentile bootstrap over test dialogues; resamples with only one class are
// skipped.
std::pair<double, double> bootstrap_auc_ci(const std::vector<double>& scores,
                                           const std::vector<std::uint8_t>& labels,
                                           const std::vector<std::size_t>& dialogue_of_score,
                                           const std::vector<std::size_t>& test_dialogues,
                                           RngStream& rng, int samples) {
    std::vector<double> aucs;
    aucs.reserve(static_cast<std::size_t>(samples));
    std::vector<double> boot_scores;
    std::vector<std::uint8_t> boot_labels;
    for (int rep = 0; rep < samples; ++rep) {
        boot_scores.clear();
        boot_labels.clear();
        for (std::size_t k = 0; k < test_dialogues.size(); ++k) {
            const std::size_t pick = test_dialogues[rng.uniform_below(test_dialogues.size())];
            for (std::size_t i = 0; i < scores.size(); ++i) {
                if (dialogue_of_score[i] != pick) continue;
                boot_scores.push_back(scores[i]);
                boot_labels.push_back(labels[i]);
            }
        }
        try {
            aucs.push_back(auc_roc(boot_scores, boot_labels));
        } catch (const UndefinedAucError&) {
            continue;
        }
    }
    if (aucs.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                              std::numeric_limits<double>::quiet_NaN()};
    std::sort(aucs.begin(), aucs.end());
    const auto rank = [&](double q) {
        const auto idx =
            static_cast<std::size_t>(std::llround(q * static_cast<double>(aucs.size() - 1)));
        return aucs[idx];
    };
    return {rank(0.025), rank(0.975)};
}

}  // namespace

std::vector<DelaySweepRow> delay_sweep(const std::vector<DialogueTrace>& traces, ProbeTask task,
                                       Perspective perspective, const std::vector<int>& delay_grid,
                                       const ProbeConfig& base_config, std::uint64_t split_seed,
                                       int bootstrap_samples,
                                       std::vector<LstmParams>* trained_params) {
    std::vector<DelaySweepRow> rows;
    rows.reserve(delay_grid.size());
    if (trained_params) trained_params->clear();
    for (int delay : delay_grid) {
        DelaySweepRow row;
        row.delay_frames = delay;
        if (trained_params) trained_params->emplace_back();
        try {
            const ProbeDataset dataset =
                build_probe_dataset(traces, task, perspective, delay, split_seed);
            ProbeConfig config = base_config;
            config.task = task;
            config.perspective = perspective;
            config.delay_frames = delay;

            const ProbeRun real = train_probe(dataset, config);
            const ProbeRun shuffled = shuffled_baseline(dataset, config);
            row.auc = real.test_auc;
            row.auc_shuffled = shuffled.test_auc;
            if (trained_params) trained_params->back() = real.params;

            std::vector<double> scores;
            std::vector<std::uint8_t> labels;
            std::vector<std::size_t> dialogue_of_score;
            probe_test_scores(dataset, real.params, scores, labels, &dialogue_of_score);
            RngStream rng(split_seed, "sweep-bootstrap/delta=" + std::to_string(delay));
            std::tie(row.ci_lo, row.ci_hi) = bootstrap_auc_ci(
                scores, labels, dialogue_of_score, dataset.test_dialogues, rng, bootstrap_samples);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace duplex

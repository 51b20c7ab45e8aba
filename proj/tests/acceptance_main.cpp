// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Heavy criteria parallelize across seeds; every assertion tolerance is
// pinned here in code.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "duplex/agents.hpp"
#include "duplex/cka.hpp"
#include "duplex/experiments.hpp"
#include "duplex/metrics.hpp"
#include "duplex/probe.hpp"
#include "duplex/rng.hpp"
#include "duplex/segmentation.hpp"

using namespace duplex;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Eigen::MatrixXd random_matrix(RngStream& rng, Eigen::Index n, Eigen::Index d) {
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = rng.normal();
    return m;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Paired per-seed differences; the gap excludes zero when the 95% normal CI
// lower bound stays positive.
bool gap_excludes_zero(const std::vector<double>& diffs, double* lower) {
    const double m = mean_of(diffs);
    const double half = 1.96 * sd_of(diffs) / std::sqrt(static_cast<double>(diffs.size()));
    *lower = m - half;
    return m - half > 0.0;
}

// ---------------------------------------------------------------------------
// 1. CKA correctness

Outcome criterion_cka_correctness() {
    RngStream rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd x = random_matrix(rng, 60, 7);
        if (std::abs(linear_cka(x, x) - 1.0) > 1e-9)
            return {false, "self-CKA deviates beyond 1e-9"};
    }
    const std::vector<double> scales{1e-3, 1.0, 1e3};
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::MatrixXd x = random_matrix(rng, 40, 6);
        const Eigen::MatrixXd g = random_matrix(rng, 6, 6);
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
        const double c = scales[rep % scales.size()];
        if (std::abs(linear_cka(x, (c * x * q).eval()) - 1.0) > 1e-9)
            return {false, "orthogonal/scaling invariance broken at draw " + std::to_string(rep)};
        const Eigen::MatrixXd y = random_matrix(rng, 40, 5);
        if (std::abs(linear_cka(x, y) - linear_cka((c * x * q).eval(), y)) > 1e-9)
            return {false, "invariance of cross similarity broken"};
    }
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::MatrixXd x = random_matrix(rng, 30, 4);
        const Eigen::MatrixXd y = random_matrix(rng, 30, 9);
        if (std::abs(linear_cka(x, y) - linear_cka(y, x)) > 1e-12)
            return {false, "symmetry beyond 1e-12"};
    }
    Eigen::MatrixXd gx(3, 2), gy(3, 2);
    gx << 1, 0, 0, 1, 1, 1;
    gy << 1, 1, 0, 2, 2, 0;
    const double golden = 0.47434164902525688;  // extended-precision oracle
    const double got = linear_cka(gx, gy);
    if (std::abs(got - golden) > 1e-12)
        return {false, "golden value off: " + std::to_string(got)};
    return {true, "self=1, invariances 1e-9 over 100 draws, symmetry 1e-12, golden 1e-12"};
}

// 2. Shift recovery

Outcome criterion_shift_recovery() {
    RngStream rng(202);
    const std::int64_t n = 600;
    const Eigen::MatrixXd a = random_matrix(rng, n, 8);
    for (int k : {1, 5, 20}) {
        Eigen::MatrixXd b(n, 8);
        b.topRows(k) = random_matrix(rng, k, 8);
        b.bottomRows(n - k) = a.topRows(n - k);
        const CkaCurve curve = lagged_cka(a, b, default_lag_grid(40), 2);
        int best_lag = -1000;
        double best = -1.0;
        for (std::size_t i = 0; i < curve.values.size(); ++i) {
            if (!curve.valid[i]) continue;
            if (curve.values[i] > best) {
                best = curve.values[i];
                best_lag = curve.lags_frames[i];
            }
        }
        if (best_lag != k)
            return {false, "k=" + std::to_string(k) + " peaked at " + std::to_string(best_lag)};
        if (best < 1.0 - 1e-9)
            return {false, "k=" + std::to_string(k) + " peak value " + std::to_string(best)};
    }
    return {true, "peaks exactly at +1, +5, +20 with value >= 1 - 1e-9"};
}

// Shared simulation helper for criteria 3 and 4.

struct PeakBaseline {
    double peak;
    double baseline;
};

PeakBaseline peak_for(double noise, double bias, std::uint64_t seed) {
    ExperimentCondition cond;
    cond.noise_p = noise;
    cond.pad_bias_a = bias;
    cond.pad_bias_b = bias;
    cond.seed = seed;
    const DialogueTrace trace = simulate_dialogue(cond, 1250);
    const CkaCurve curve =
        lagged_cka(trace.a.activations, trace.b.activations, default_lag_grid(60), 50);
    const CurveStats stats = curve_stats({curve}, 50);
    return {stats.peak_value, stats.baseline_value};
}

std::vector<PeakBaseline> sweep_seeds(double noise, double bias, int n_seeds) {
    std::vector<std::future<PeakBaseline>> futures;
    for (int s = 0; s < n_seeds; ++s)
        futures.push_back(std::async(std::launch::async, peak_for, noise, bias,
                                     static_cast<std::uint64_t>(3000 + s)));
    std::vector<PeakBaseline> out;
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

// 3. Noise degrades synchronization

Outcome criterion_noise_trend() {
    const int seeds = 20;
    const auto clean = sweep_seeds(0.0, 0.0, seeds);
    const auto noisy = sweep_seeds(0.7, 0.0, seeds);
    std::vector<double> peak_diffs, base_diffs;
    for (int s = 0; s < seeds; ++s) {
        peak_diffs.push_back(clean[s].peak - noisy[s].peak);
        base_diffs.push_back(clean[s].baseline - noisy[s].baseline);
    }
    double peak_lo = 0, base_lo = 0;
    const bool peak_ok = gap_excludes_zero(peak_diffs, &peak_lo);
    const bool base_ok = gap_excludes_zero(base_diffs, &base_lo);
    std::ostringstream detail;
    detail << "peak gap " << mean_of(peak_diffs) << " (CI lower " << peak_lo << "), baseline gap "
           << mean_of(base_diffs) << " (CI lower " << base_lo << ") over " << seeds << " seeds";
    return {peak_ok && base_ok, detail.str()};
}

// 4. Bias degrades synchronization

Outcome criterion_bias_trend() {
    const int seeds = 20;
    const auto unbiased = sweep_seeds(0.0, 0.0, seeds);
    const auto biased = sweep_seeds(0.0, 4.0, seeds);  // maximal configured level
    std::vector<double> diffs;
    for (int s = 0; s < seeds; ++s) diffs.push_back(unbiased[s].peak - biased[s].peak);
    double lower = 0;
    const bool ok = gap_excludes_zero(diffs, &lower);
    std::ostringstream detail;
    detail << "peak gap " << mean_of(diffs) << " (CI lower " << lower << ") over " << seeds
           << " seeds";
    return {ok, detail.str()};
}

// 5. Segmentation oracle equivalence

std::vector<Ipu> reference_ipus(const std::vector<std::uint8_t>& voiced) {
    std::vector<Ipu> out;
    const std::int64_t n = static_cast<std::int64_t>(voiced.size());
    for (std::int64_t t = 0; t < n; ++t) {
        const bool starts = voiced[t] && (t == 0 || !voiced[t - 1]);
        if (!starts) continue;
        std::int64_t e = t;
        while (e + 1 < n && voiced[e + 1]) ++e;
        out.push_back(Ipu{t, e, Speaker::A});
    }
    return out;
}

bool same_ipus(const std::vector<Ipu>& a, const std::vector<Ipu>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].onset_frame != b[i].onset_frame || a[i].offset_frame != b[i].offset_frame)
            return false;
    return true;
}

Outcome criterion_segmentation() {
    // Exhaustive enumeration of every binary track up to length 12.
    long checked = 0;
    for (int len = 0; len <= 12; ++len) {
        for (unsigned mask = 0; mask < (1u << len); ++mask) {
            VadTrack vad;
            for (int t = 0; t < len; ++t) vad.voiced.push_back((mask >> t) & 1u);
            if (!same_ipus(extract_ipus(vad, FrameClock{}, Speaker::A), reference_ipus(vad.voiced)))
                return {false, "exhaustive mismatch at len " + std::to_string(len) + " mask " +
                                   std::to_string(mask)};
            ++checked;
        }
    }
    // 1e4 random tracks up to length 64.
    RngStream rng(505);
    for (int rep = 0; rep < 10000; ++rep) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_below(64));
        VadTrack vad;
        const double p = 0.2 + 0.6 * rng.uniform();
        for (std::int64_t t = 0; t < n; ++t) vad.voiced.push_back(rng.uniform() < p ? 1 : 0);
        if (!same_ipus(extract_ipus(vad, FrameClock{}, Speaker::A), reference_ipus(vad.voiced)))
            return {false, "random-track mismatch at rep " + std::to_string(rep)};
    }

    // The ten-case hand-derived golden table.
    std::ifstream in(std::string(GOLDEN_DIR) + "/transitions_golden.json");
    if (!in.good()) return {false, "golden table missing"};
    const nlohmann::json golden = nlohmann::json::parse(in);
    int cases = 0;
    for (const auto& test_case : golden.at("cases")) {
        const auto n = test_case.at("n_frames").get<std::int64_t>();
        auto parse = [](const nlohmann::json& arr, Speaker sp) {
            std::vector<Ipu> ipus;
            for (const auto& pair : arr)
                ipus.push_back(Ipu{pair.at(0).get<std::int64_t>(), pair.at(1).get<std::int64_t>(), sp});
            return ipus;
        };
        const auto labels = label_transitions(parse(test_case.at("a"), Speaker::A),
                                              parse(test_case.at("b"), Speaker::B), FrameClock{}, n);
        const auto& expected = test_case.at("expected");
        if (labels.size() != expected.size())
            return {false, "golden case '" + test_case.at("name").get<std::string>() +
                               "': label count mismatch"};
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto& want = expected[i];
            if (std::string(to_string(labels[i].speaker)) != want.at("speaker") ||
                labels[i].boundary_frame != want.at("boundary").get<std::int64_t>() ||
                std::string(to_string(labels[i].label)) != want.at("label") ||
                std::string(to_string(labels[i].exclusion_reason)) != want.at("reason"))
                return {false, "golden case '" + test_case.at("name").get<std::string>() +
                                   "' row " + std::to_string(i) + " mismatch"};
        }
        ++cases;
    }
    return {true, std::to_string(checked) + " exhaustive + 10000 random tracks exact; " +
                      std::to_string(cases) + "-case golden table exact"};
}

// 6. Probe machinery

Outcome criterion_probe_machinery() {
    // BPTT vs central finite differences on a 6-frame toy, every parameter.
    RngStream rng(606);
    LstmParams params = LstmParams::init(3, 4, rng);
    const Eigen::MatrixXd features = random_matrix(rng, 6, 3);
    const std::vector<std::uint8_t> labels{1, 0, 1, 1, 0, 1};
    const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1};
    std::size_t masked = 0;
    for (auto m : mask) masked += m;

    LstmCache cache;
    const Eigen::VectorXd logits = lstm_forward(params, features, &cache);
    Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(6);
    for (int t = 0; t < 6; ++t)
        if (mask[t])
            dlogits(t) = (sigmoid(logits(t)) - (labels[t] ? 1.0 : 0.0)) / static_cast<double>(masked);
    const LstmGrads grads = lstm_backward(params, features, cache, dlogits);

    std::vector<double*> param_ptrs;
    std::vector<const double*> grad_ptrs;
    auto collect = [&](auto& p, const auto& g) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            param_ptrs.push_back(p.data() + i);
            grad_ptrs.push_back(g.data() + i);
        }
    };
    collect(params.w_input, grads.w_input);
    collect(params.w_recur, grads.w_recur);
    collect(params.bias, grads.bias);
    collect(params.readout_w, grads.readout_w);
    param_ptrs.push_back(&params.readout_b);
    grad_ptrs.push_back(&grads.readout_b);

    const double step = 1e-5;
    for (std::size_t k = 0; k < param_ptrs.size(); ++k) {
        const double saved = *param_ptrs[k];
        *param_ptrs[k] = saved + step;
        const double up = bce_with_logits(lstm_forward(params, features), labels, mask);
        *param_ptrs[k] = saved - step;
        const double down = bce_with_logits(lstm_forward(params, features), labels, mask);
        *param_ptrs[k] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double analytic = *grad_ptrs[k];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        if (std::abs(numeric - analytic) / scale >= 1e-4)
            return {false, "gradient mismatch at parameter " + std::to_string(k)};
    }

    // AUC equals the O(n^2) pairwise oracle exactly, ties included.
    RngStream auc_rng(607);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 10 + auc_rng.uniform_below(191);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> lab(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::floor(auc_rng.uniform() * 6.0) / 6.0;
            lab[i] = auc_rng.uniform() < 0.5 ? 1 : 0;
        }
        lab[0] = 1;
        lab[1] = 0;
        double wins = 0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!lab[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (lab[j]) continue;
                ++pairs;
                wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
            }
        }
        if (auc_roc(scores, lab) != wins / static_cast<double>(pairs))
            return {false, "AUC differs from pairwise oracle at rep " + std::to_string(rep)};
    }

    // Bit-deterministic training.
    std::vector<DialogueTrace> traces;
    for (int i = 0; i < 4; ++i) {
        ExperimentCondition cond;
        cond.seed = static_cast<std::uint64_t>(700 + i);
        traces.push_back(simulate_dialogue(cond, 150));
    }
    const ProbeDataset ds =
        build_probe_dataset(traces, ProbeTask::EndOfIpu, Perspective::Production, 2, 11);
    ProbeConfig cfg;
    cfg.delay_frames = 2;
    cfg.hidden_size = 8;
    cfg.epochs = 5;
    cfg.seed = 13;
    const ProbeRun r1 = train_probe(ds, cfg);
    const ProbeRun r2 = train_probe(ds, cfg);
    if (r1.loss_history != r2.loss_history || r1.test_auc != r2.test_auc ||
        r1.params.w_input != r2.params.w_input || r1.params.bias != r2.params.bias)
        return {false, "training is not bit-deterministic"};

    return {true, "BPTT matches FD < 1e-4 on all parameters; AUC exact vs pairwise; "
                  "training bit-deterministic"};
}

// 7. Anticipatory-information trend

Outcome criterion_anticipatory_trend() {
    std::vector<DialogueTrace> traces;
    for (int i = 0; i < 40; ++i) {
        ExperimentCondition cond;
        cond.seed = static_cast<std::uint64_t>(100 + i);
        traces.push_back(simulate_dialogue(cond, 375));
    }
    const int n_seeds = 5;
    auto run_delta = [&](int delta) {
        std::vector<std::future<std::pair<double, double>>> futures;
        for (int seed = 1; seed <= n_seeds; ++seed) {
            futures.push_back(std::async(std::launch::async, [&traces, seed, delta] {
                ProbeConfig cfg;
                cfg.epochs = 50;
                cfg.delay_frames = delta;
                cfg.seed = static_cast<std::uint64_t>(seed);
                const ProbeDataset ds = build_probe_dataset(
                    traces, ProbeTask::EndOfIpu, Perspective::Production, delta,
                    static_cast<std::uint64_t>(seed));
                const double real = train_probe(ds, cfg).test_auc;
                const double shuffled = shuffled_baseline(ds, cfg).test_auc;
                return std::make_pair(real, shuffled);
            }));
        }
        std::vector<std::pair<double, double>> out;
        for (auto& f : futures) out.push_back(f.get());
        return out;
    };

    const auto at_zero = run_delta(0);
    const auto at_far = run_delta(24);
    std::vector<double> gaps, shuffled_values, real_zero, real_far;
    for (int s = 0; s < n_seeds; ++s) {
        gaps.push_back(at_zero[s].first - at_zero[s].second);
        shuffled_values.push_back(at_zero[s].second);
        shuffled_values.push_back(at_far[s].second);
        real_zero.push_back(at_zero[s].first);
        real_far.push_back(at_far[s].first);
    }
    const double mean_gap = mean_of(gaps);
    const double mean_shuffled = mean_of(shuffled_values);
    const bool gap_ok = mean_gap > 0.1;
    const bool band_ok = mean_shuffled >= 0.4 && mean_shuffled <= 0.6;
    const bool delay_ok = mean_of(real_zero) >= mean_of(real_far);
    std::ostringstream detail;
    detail << "AUC(0)=" << mean_of(real_zero) << " shuffled=" << mean_shuffled << " gap="
           << mean_gap << " AUC(24)=" << mean_of(real_far) << " over " << n_seeds << " seeds";
    return {gap_ok && band_ok && delay_ok, detail.str()};
}

// 8. Strict-causality audit

Outcome criterion_causality() {
    std::vector<DialogueTrace> traces;
    for (int i = 0; i < 3; ++i) {
        ExperimentCondition cond;
        cond.seed = static_cast<std::uint64_t>(800 + i);
        traces.push_back(simulate_dialogue(cond, 140));
    }
    RngStream rng(808);
    LstmParams params;
    {
        RngStream init(9, "probe-init");
        params = LstmParams::init(static_cast<int>(traces[0].a.activations.cols()), 16, init);
    }
    for (int rep = 0; rep < 100; ++rep) {
        const int delta = static_cast<int>(rng.uniform_below(25));
        const ProbeDataset ds =
            build_probe_dataset(traces, ProbeTask::EndOfIpu, Perspective::Production, delta, 3);
        const ProbeSequence& seq = ds.sequences[rng.uniform_below(ds.sequences.size())];
        const auto t = static_cast<Eigen::Index>(
            delta + static_cast<int>(
                        rng.uniform_below(static_cast<std::uint64_t>(seq.features.rows() - delta))));
        const Eigen::VectorXd base = lstm_forward(params, seq.features);
        Eigen::MatrixXd zeroed = seq.features;
        if (t + 1 < zeroed.rows()) zeroed.bottomRows(zeroed.rows() - (t + 1)).setZero();
        const Eigen::VectorXd after = lstm_forward(params, zeroed);
        if (after(t) != base(t))
            return {false, "score changed at rep " + std::to_string(rep) + " (t=" +
                               std::to_string(t) + ", delta=" + std::to_string(delta) + ")"};
    }
    return {true, "score at frame t bit-identical after zeroing features newer than t - delta, "
                  "100 random (t, delta)"};
}

// 9. End-to-end determinism through the CLI

Outcome criterion_end_to_end_determinism() {
    const fs::path base = fs::temp_directory_path() / "duplex_acceptance_e2e";
    fs::remove_all(base);
    fs::create_directories(base);
    const fs::path config = base / "pinned.toml";
    {
        std::ofstream out(config);
        out << "[grid]\n"
               "noise = [0.0, 0.7]\n"
               "pad_bias = [0.0]\n"
               "pairings = [\"default/default\"]\n"
               "seeds = [1, 2]\n"
               "duration_frames = 120\n"
               "[cka]\n"
               "max_lag = 10\n"
               "baseline_lag = 8\n"
               "min_overlap = 20\n"
               "[probe]\n"
               "epochs = 2\n"
               "delay_grid = [0, 2]\n"
               "bootstrap = 10\n";
    }

    auto run = [&](const std::string& tag) -> bool {
        const fs::path store = base / ("store_" + tag);
        const std::string grid_cmd = std::string(DUPLEX_CLI_PATH) + " grid --config " +
                                     config.string() + " --out " + store.string() +
                                     " --workers 2 > " + (base / (tag + "_grid.log")).string() +
                                     " 2>&1";
        if (std::system(grid_cmd.c_str()) != 0) return false;
        const std::string report_cmd = std::string(DUPLEX_CLI_PATH) + " report --store " +
                                       store.string() + " --deterministic > " +
                                       (base / (tag + "_report.log")).string() + " 2>&1";
        return std::system(report_cmd.c_str()) == 0;
    };
    if (!run("one")) return {false, "first grid/report run failed"};
    if (!run("two")) return {false, "second grid/report run failed"};

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    std::vector<std::string> csvs;
    for (const auto& entry : fs::recursive_directory_iterator(base / "store_one"))
        if (entry.path().extension() == ".csv" || entry.path().extension() == ".svg" ||
            entry.path().extension() == ".json")
            csvs.push_back(fs::relative(entry.path(), base / "store_one").string());
    if (csvs.empty()) return {false, "no outputs found"};
    int compared = 0;
    for (const std::string& rel : csvs) {
        const fs::path other = base / "store_two" / rel;
        if (!fs::exists(other)) return {false, rel + " missing from the second run"};
        if (slurp(base / "store_one" / rel) != slurp(other))
            return {false, rel + " differs between runs"};
        ++compared;
    }
    fs::remove_all(base);
    return {true, std::to_string(compared) + " output files byte-identical across two CLI runs"};
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "CKA correctness suite", 5, criterion_cka_correctness},
        {2, "shift recovery", 10, criterion_shift_recovery},
        {3, "noise degrades synchronization", 600, criterion_noise_trend},
        {4, "bias degrades synchronization", 600, criterion_bias_trend},
        {5, "segmentation oracle equivalence", 30, criterion_segmentation},
        {6, "probe machinery", 60, criterion_probe_machinery},
        {7, "anticipatory-information trend", 1200, criterion_anticipatory_trend},
        {8, "strict-causality audit", 60, criterion_causality},
        {9, "end-to-end determinism", 600, criterion_end_to_end_determinism},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = elapsed < criterion.budget_s;
        const bool pass = outcome.pass && in_budget;
        std::printf("[%s] criterion %d (%s): %s [%.1fs%s]\n", pass ? "PASS" : "FAIL",
                    criterion.number, criterion.name, outcome.detail.c_str(), elapsed,
                    in_budget ? "" : ", OVER BUDGET");
        std::fflush(stdout);
        failures += pass ? 0 : 1;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "duplex/errors.hpp"
#include "duplex/experiments.hpp"
#include "duplex/segmentation.hpp"
#include "duplex/trace_io.hpp"

namespace duplex {

namespace fs = std::filesystem;
using nlohmann::json;

std::string csv_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string CellKey::id() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "noise%.2f_bias%.2f_%c%c", noise_p, pad_bias,
                  variant_a == AgentVariant::Default ? 'd' : 'f',
                  variant_b == AgentVariant::Default ? 'd' : 'f');
    return buf;
}

std::string CellKey::pairing() const {
    return std::string(to_string(variant_a)) + "/" + to_string(variant_b);
}

GridSpec GridSpec::desk_default() {
    GridSpec spec;
    spec.probe.epochs = 50;
    return spec;
}

void GridSpec::validate() const {
    if (noise_levels.empty()) throw ValidationError("grid: noise level list is empty");
    if (bias_levels.empty()) throw ValidationError("grid: bias level list is empty");
    if (pairings.empty()) throw ValidationError("grid: pairing list is empty");
    if (seeds.empty()) throw ValidationError("grid: seed list is empty");
    for (double p : noise_levels)
        if (p < 0.0 || p > 1.0) throw ValidationError("grid: noise level outside [0,1]");
    for (double b : bias_levels)
        if (b < 0.0) throw ValidationError("grid: bias level must be nonnegative");
    if (duration_frames < 2) throw ValidationError("grid: duration must be >= 2 frames");
    if (lag_grid.empty()) throw ValidationError("grid: lag grid is empty");
    for (int lag : lag_grid)
        if (std::abs(static_cast<std::int64_t>(lag)) >= duration_frames - 1)
            throw ValidationError("grid: |lag| must be < duration - 1");
    if (run_probes && delay_grid.empty()) throw ValidationError("grid: delay grid is empty");
    if (frame_ms <= 0) throw ValidationError("grid: frame_ms must be > 0");
}

std::vector<CellKey> GridSpec::cells() const {
    std::vector<CellKey> out;
    for (double noise : noise_levels)
        for (double bias : bias_levels)
            for (const auto& [va, vb] : pairings) out.push_back(CellKey{noise, bias, va, vb});
    return out;
}

std::string GridSpec::plan_summary() const {
    std::ostringstream out;
    const std::size_t n_cells = cells().size();
    out << "grid plan: " << noise_levels.size() << " noise x " << bias_levels.size() << " bias x "
        << pairings.size() << " pairings = " << n_cells << " cells; " << seeds.size()
        << " seeds/cell -> " << n_cells * seeds.size() << " dialogues of " << duration_frames
        << " frames (" << duration_frames * frame_ms / 1000 << " s)";
    if (run_probes)
        out << "; probe sweep over " << delay_grid.size() << " delays x 2 tasks x 2 perspectives ("
            << probe.epochs << " epochs)";
    return out.str();
}

namespace {

AgentVariant variant_from_letterless(const std::string& s) { return variant_from_string(s); }

std::pair<AgentVariant, AgentVariant> pairing_from_string(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos)
        throw DataError("config: pairing '" + s + "' must look like 'default/finetuned'");
    return {variant_from_letterless(s.substr(0, slash)), variant_from_letterless(s.substr(slash + 1))};
}

}  // namespace

GridSpec GridSpec::from_config(const ConfigFile& cfg) {
    GridSpec spec = GridSpec::desk_default();

    spec.noise_levels = cfg.get_double_list("grid.noise", spec.noise_levels);
    spec.bias_levels = cfg.get_double_list("grid.pad_bias", spec.bias_levels);
    {
        std::vector<std::string> defaults;
        for (const auto& [va, vb] : spec.pairings)
            defaults.push_back(std::string(to_string(va)) + "/" + to_string(vb));
        std::vector<std::string> raw = cfg.get_string_list("grid.pairings", defaults);
        spec.pairings.clear();
        for (const std::string& s : raw) spec.pairings.push_back(pairing_from_string(s));
    }
    {
        std::vector<std::int64_t> defaults(spec.seeds.begin(), spec.seeds.end());
        std::vector<std::int64_t> raw = cfg.get_int_list("grid.seeds", defaults);
        spec.seeds.clear();
        for (std::int64_t s : raw) spec.seeds.push_back(static_cast<std::uint64_t>(s));
        if (cfg.has("grid.n_seeds")) {
            if (!raw.empty() && cfg.has("grid.seeds"))
                throw DataError("config: give either grid.seeds or grid.n_seeds, not both");
            const auto n = cfg.get_int("grid.n_seeds", 0);
            spec.seeds.clear();
            for (std::int64_t s = 1; s <= n; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    spec.frame_ms = static_cast<int>(cfg.get_int("clock.frame_ms", spec.frame_ms));
    if (cfg.has("grid.duration_s") && cfg.has("grid.duration_frames"))
        throw DataError("config: give either grid.duration_s or grid.duration_frames, not both");
    if (cfg.has("grid.duration_s"))
        spec.duration_frames = cfg.get_int("grid.duration_s", 0) * 1000 / spec.frame_ms;
    else
        spec.duration_frames = cfg.get_int("grid.duration_frames", spec.duration_frames);

    {
        const auto max_lag = cfg.get_int("cka.max_lag", 60);
        spec.lag_grid = default_lag_grid(static_cast<int>(max_lag));
        spec.baseline_lag_frames = static_cast<int>(cfg.get_int("cka.baseline_lag", 50));
        spec.min_overlap = cfg.get_int("cka.min_overlap", 50);
    }

    spec.run_probes = cfg.get_bool("probe.enabled", spec.run_probes);
    {
        std::vector<std::int64_t> defaults(spec.delay_grid.begin(), spec.delay_grid.end());
        const auto raw = cfg.get_int_list("probe.delay_grid", defaults);
        spec.delay_grid.assign(raw.begin(), raw.end());
    }
    spec.probe.hidden_size = static_cast<int>(cfg.get_int("probe.hidden", spec.probe.hidden_size));
    spec.probe.learning_rate = cfg.get_double("probe.learning_rate", spec.probe.learning_rate);
    spec.probe.batch_size = static_cast<int>(cfg.get_int("probe.batch", spec.probe.batch_size));
    spec.probe.epochs = static_cast<int>(cfg.get_int("probe.epochs", spec.probe.epochs));
    spec.bootstrap_samples = static_cast<int>(cfg.get_int("probe.bootstrap", spec.bootstrap_samples));
    spec.probe_seed_base = static_cast<std::uint64_t>(cfg.get_int("probe.seed", 1));

    ToyHyperparams& hp = spec.agents;
    hp.dim = static_cast<int>(cfg.get_int("agents.dim", hp.dim));
    hp.vocab_size = static_cast<std::uint32_t>(cfg.get_int("agents.vocab_size", hp.vocab_size));
    hp.spectral_radius = cfg.get_double("agents.spectral_radius", hp.spectral_radius);
    hp.input_scale = cfg.get_double("agents.input_scale", hp.input_scale);
    hp.self_scale = cfg.get_double("agents.self_scale", hp.self_scale);
    hp.speak_drive = cfg.get_double("agents.speak_drive", hp.speak_drive);
    hp.output_scale = cfg.get_double("agents.output_scale", hp.output_scale);
    hp.pad_readout_gain = cfg.get_double("agents.pad_readout_gain", hp.pad_readout_gain);
    hp.pad_base_logit = cfg.get_double("agents.pad_base_logit", hp.pad_base_logit);
    hp.inhibition_gain = cfg.get_double("agents.inhibition_gain", hp.inhibition_gain);
    hp.temperature = cfg.get_double("agents.temperature", hp.temperature);
    hp.finetune_scale = cfg.get_double("agents.finetune_scale", hp.finetune_scale);
    hp.model_seed_a = static_cast<std::uint64_t>(cfg.get_int("agents.model_seed_a",
                                                             static_cast<std::int64_t>(hp.model_seed_a)));
    hp.model_seed_b = static_cast<std::uint64_t>(cfg.get_int("agents.model_seed_b",
                                                             static_cast<std::int64_t>(hp.model_seed_b)));
    hp.prompt_frames = static_cast<int>(cfg.get_int("agents.prompt_frames", hp.prompt_frames));
    hp.prompt_seed = static_cast<std::uint64_t>(cfg.get_int("agents.prompt_seed",
                                                            static_cast<std::int64_t>(hp.prompt_seed)));

    const auto leftovers = cfg.unconsumed_keys();
    if (!leftovers.empty()) {
        std::string msg = "config: unknown key(s):";
        for (const auto& key : leftovers) msg += " " + key;
        throw DataError(msg);
    }

    spec.validate();
    return spec;
}

std::string config_reference() {
    return R"(# Configuration reference (all keys optional; values shown are the defaults)

[clock]
frame_ms = 80              # milliseconds per frame

[grid]
noise = [0.0, 0.7]         # channel corruption probabilities
pad_bias = [0.0, 2.0]      # PAD logit bias applied to both participants
pairings = ["default/default", "default/finetuned"]
seeds = [1, 2, 3, 4, 5]    # per-dialogue seeds (or n_seeds = N for 1..N)
duration_s = 30            # dialogue length (or duration_frames = 375)

[cka]
max_lag = 60               # lag grid is -max_lag..+max_lag frames
baseline_lag = 50          # |lag| >= baseline_lag defines the baseline
min_overlap = 50           # lags with fewer overlapping frames are skipped

[probe]
enabled = true
delay_grid = [0, 8, 16, 24]  # probe delays in frames
hidden = 64
learning_rate = 0.001
batch = 16
epochs = 50                # desk-scale reduction; full runs use 200
bootstrap = 200            # dialogue-level bootstrap resamples for CIs
seed = 1                   # base seed for probe init/splits

[agents]
dim = 64
vocab_size = 32
spectral_radius = 0.9
input_scale = 0.5
self_scale = 0.25
speak_drive = 1.2
output_scale = 1.5
pad_readout_gain = 2.8
pad_base_logit = 3.2
inhibition_gain = 4.0
temperature = 1.0
finetune_scale = 0.1
model_seed_a = 101
model_seed_b = 202
prompt_frames = 25
prompt_seed = 77
)";
}

namespace {

json spec_to_json(const GridSpec& spec) {
    json grid;
    grid["noise_levels"] = spec.noise_levels;
    grid["bias_levels"] = spec.bias_levels;
    std::vector<std::string> pairings;
    for (const auto& [va, vb] : spec.pairings)
        pairings.push_back(std::string(to_string(va)) + "/" + to_string(vb));
    grid["pairings"] = pairings;
    grid["seeds"] = spec.seeds;
    grid["duration_frames"] = spec.duration_frames;
    grid["frame_ms"] = spec.frame_ms;
    grid["lag_grid_min"] = spec.lag_grid.front();
    grid["lag_grid_max"] = spec.lag_grid.back();
    grid["baseline_lag_frames"] = spec.baseline_lag_frames;
    grid["min_overlap"] = spec.min_overlap;
    grid["run_probes"] = spec.run_probes;
    grid["delay_grid"] = spec.delay_grid;
    grid["probe"] = {{"hidden", spec.probe.hidden_size},
                     {"learning_rate", spec.probe.learning_rate},
                     {"batch", spec.probe.batch_size},
                     {"epochs", spec.probe.epochs},
                     {"bootstrap", spec.bootstrap_samples},
                     {"seed_base", spec.probe_seed_base}};
    grid["agents"] = {{"dim", spec.agents.dim},
                      {"vocab_size", spec.agents.vocab_size},
                      {"spectral_radius", spec.agents.spectral_radius},
                      {"input_scale", spec.agents.input_scale},
                      {"self_scale", spec.agents.self_scale},
                      {"speak_drive", spec.agents.speak_drive},
                      {"output_scale", spec.agents.output_scale},
                      {"pad_readout_gain", spec.agents.pad_readout_gain},
                      {"pad_base_logit", spec.agents.pad_base_logit},
                      {"inhibition_gain", spec.agents.inhibition_gain},
                      {"temperature", spec.agents.temperature},
                      {"finetune_scale", spec.agents.finetune_scale},
                      {"model_seed_a", spec.agents.model_seed_a},
                      {"model_seed_b", spec.agents.model_seed_b},
                      {"prompt_frames", spec.agents.prompt_frames},
                      {"prompt_seed", spec.agents.prompt_seed}};
    return grid;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out << text;
        if (!out) throw DataError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

json load_manifest(const fs::path& store_dir) {
    const fs::path path = store_dir / "manifest.json";
    if (!fs::exists(path)) return {};
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ManifestError("store manifest is malformed: " + std::string(e.what()));
    }
}

void write_manifest(const fs::path& store_dir, const json& grid_echo,
                    std::vector<std::string> completed) {
    std::sort(completed.begin(), completed.end());
    json manifest;
    manifest["format_version"] = 1;
    manifest["toolkit"] = kToolkitVersion;
    manifest["grid"] = grid_echo;
    manifest["completed"] = completed;
    write_text_atomic(store_dir / "manifest.json", manifest.dump(2) + "\n");
}

// Everything one cell writes lives under its own directory.
void process_cell(const GridSpec& spec, const CellKey& cell, const fs::path& cell_dir) {
    fs::create_directories(cell_dir / "traces");
    fs::create_directories(cell_dir / "annot");

    std::vector<DialogueTrace> traces;
    traces.reserve(spec.seeds.size());
    for (std::uint64_t seed : spec.seeds) {
        ExperimentCondition cond;
        cond.noise_p = cell.noise_p;
        cond.pad_bias_a = cell.pad_bias;
        cond.pad_bias_b = cell.pad_bias;
        cond.variant_a = cell.variant_a;
        cond.variant_b = cell.variant_b;
        cond.seed = seed;
        DialogueTrace trace = simulate_dialogue(cond, spec.duration_frames, spec.agents);
        trace.clock.frame_ms = spec.frame_ms;
        write_trace(trace, cell_dir / "traces" / ("seed" + std::to_string(seed)));

        const auto ipus_a = extract_ipus(trace.a.vad, trace.clock, Speaker::A);
        const auto ipus_b = extract_ipus(trace.b.vad, trace.clock, Speaker::B);
        std::vector<Ipu> all_ipus = ipus_a;
        all_ipus.insert(all_ipus.end(), ipus_b.begin(), ipus_b.end());
        std::sort(all_ipus.begin(), all_ipus.end(), [](const Ipu& x, const Ipu& y) {
            if (x.onset_frame != y.onset_frame) return x.onset_frame < y.onset_frame;
            return static_cast<int>(x.speaker) < static_cast<int>(y.speaker);
        });
        const auto labels =
            label_transitions(ipus_a, ipus_b, trace.clock, trace.duration_frames);
        const std::string stem = "seed" + std::to_string(seed);
        write_ipus_jsonl(all_ipus, trace.clock, cell_dir / "annot" / (stem + ".ipus.jsonl"));
        write_transitions_jsonl(labels, trace.clock,
                                cell_dir / "annot" / (stem + ".transitions.jsonl"));
        traces.push_back(std::move(trace));
    }

    // Per-dialogue lagged CKA plus the per-cell aggregate.
    std::vector<CkaCurve> curves;
    curves.reserve(traces.size());
    for (const DialogueTrace& trace : traces)
        curves.push_back(
            lagged_cka(trace.a.activations, trace.b.activations, spec.lag_grid, spec.min_overlap));
    const CurveStats stats = curve_stats(curves, spec.baseline_lag_frames);

    {
        std::ostringstream csv;
        csv << "seed,lag_ms,value,n_overlap,valid\n";
        for (std::size_t k = 0; k < curves.size(); ++k)
            for (std::size_t i = 0; i < curves[k].lags_frames.size(); ++i)
                csv << spec.seeds[k] << "," << curves[k].lags_frames[i] * spec.frame_ms << ","
                    << csv_double(curves[k].values[i]) << "," << curves[k].n_overlap[i] << ","
                    << int(curves[k].valid[i]) << "\n";
        write_text_atomic(cell_dir / "cka_per_dialogue.csv", csv.str());
    }
    {
        std::ostringstream csv;
        csv << "lag_ms,mean,ci_lo,ci_hi,n_overlap\n";
        for (std::size_t i = 0; i < stats.lags_frames.size(); ++i)
            csv << stats.lags_frames[i] * spec.frame_ms << "," << csv_double(stats.mean[i]) << ","
                << csv_double(stats.ci_lo[i]) << "," << csv_double(stats.ci_hi[i]) << ","
                << stats.n_overlap[i] << "\n";
        write_text_atomic(cell_dir / "cka_mean.csv", csv.str());
    }
    {
        json j;
        j["cell"] = cell.id();
        j["noise_p"] = cell.noise_p;
        j["pad_bias"] = cell.pad_bias;
        j["pairing"] = cell.pairing();
        j["n_dialogues"] = traces.size();
        j["peak_lag_frames"] = stats.peak_lag;
        j["peak_lag_ms"] = stats.peak_lag * spec.frame_ms;
        j["peak_value"] = stats.peak_value;
        j["baseline_value"] = stats.baseline_value;
        std::vector<std::int64_t> lag_ms;
        for (int lag : stats.lags_frames) lag_ms.push_back(static_cast<std::int64_t>(lag) * spec.frame_ms);
        auto sanitize = [](const std::vector<double>& v) {
            json arr = json::array();
            for (double x : v) {
                if (std::isnan(x))
                    arr.push_back(nullptr);
                else
                    arr.push_back(x);
            }
            return arr;
        };
        j["lag_ms"] = lag_ms;
        j["mean"] = sanitize(stats.mean);
        j["ci_lo"] = sanitize(stats.ci_lo);
        j["ci_hi"] = sanitize(stats.ci_hi);
        j["n_overlap"] = stats.n_overlap;
        write_text_atomic(cell_dir / "cka_stats.json", j.dump(2) + "\n");
    }

    if (!spec.run_probes) return;

    std::ostringstream csv;
    csv << "task,perspective,delta_frames,delta_ms,auc,auc_shuffled,ci_lo,ci_hi,ok,error\n";
    json probe_json = json::array();
    for (ProbeTask task : {ProbeTask::EndOfIpu, ProbeTask::HoldVsNonHold}) {
        for (Perspective perspective : {Perspective::Production, Perspective::Perception}) {
            ProbeConfig cfg = spec.probe;
            cfg.task = task;
            cfg.perspective = perspective;
            const std::string scope =
                cell.id() + "/" + to_string(task) + "/" + to_string(perspective);
            cfg.seed = RngStream::derive_seed(spec.probe_seed_base, scope);
            const std::uint64_t split_seed =
                RngStream::derive_seed(spec.probe_seed_base, scope + "/split");
            const auto rows = delay_sweep(traces, task, perspective, spec.delay_grid, cfg,
                                          split_seed, spec.bootstrap_samples);
            for (const DelaySweepRow& row : rows) {
                csv << to_string(task) << "," << to_string(perspective) << "," << row.delay_frames
                    << "," << row.delay_frames * spec.frame_ms << "," << csv_double(row.auc) << ","
                    << csv_double(row.auc_shuffled) << "," << csv_double(row.ci_lo) << ","
                    << csv_double(row.ci_hi) << "," << (row.ok ? 1 : 0) << ","
                    << csv_safe(row.error) << "\n";
                json r;
                r["task"] = to_string(task);
                r["perspective"] = to_string(perspective);
                r["delta_frames"] = row.delay_frames;
                r["delta_ms"] = row.delay_frames * spec.frame_ms;
                r["auc"] = std::isnan(row.auc) ? json(nullptr) : json(row.auc);
                r["auc_shuffled"] =
                    std::isnan(row.auc_shuffled) ? json(nullptr) : json(row.auc_shuffled);
                r["ci_lo"] = std::isnan(row.ci_lo) ? json(nullptr) : json(row.ci_lo);
                r["ci_hi"] = std::isnan(row.ci_hi) ? json(nullptr) : json(row.ci_hi);
                r["ok"] = row.ok;
                r["error"] = row.error;
                probe_json.push_back(std::move(r));
            }
        }
    }
    write_text_atomic(cell_dir / "probe_results.csv", csv.str());
    write_text_atomic(cell_dir / "probe_results.json", probe_json.dump(2) + "\n");
}

}  // namespace

GridRunResult run_grid(const GridSpec& spec, const fs::path& out_dir, int workers) {
    spec.validate();
    fs::create_directories(out_dir / "cells");

    const json grid_echo = spec_to_json(spec);
    std::vector<std::string> completed;
    {
        const json manifest = load_manifest(out_dir);
        if (!manifest.is_null() && manifest.contains("grid")) {
            if (manifest.at("grid").dump() != grid_echo.dump())
                throw DataError("store at " + out_dir.string() +
                                " was produced by a different grid spec; use a fresh directory");
            completed = manifest.at("completed").get<std::vector<std::string>>();
        }
    }

    if (workers <= 0) {
        if (const char* env = std::getenv("DUPLEX_COUPLING_WORKERS"))
            workers = std::max(1, std::atoi(env));
        else
            workers = std::max(1u, std::thread::hardware_concurrency());
    }

    const std::vector<CellKey> all_cells = spec.cells();
    std::vector<CellKey> pending;
    GridRunResult result;
    result.completed = completed;
    for (const CellKey& cell : all_cells) {
        if (std::find(completed.begin(), completed.end(), cell.id()) != completed.end())
            result.skipped.push_back(cell.id());
        else
            pending.push_back(cell);
    }
    write_manifest(out_dir, grid_echo, result.completed);

    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const CellKey& cell = pending[i];
            try {
                process_cell(spec, cell, out_dir / "cells" / cell.id());
                std::lock_guard<std::mutex> lock(mutex);
                result.completed.push_back(cell.id());
                write_manifest(out_dir, grid_echo, result.completed);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mutex);
                result.failed.emplace_back(cell.id(), e.what());
                std::cerr << "cell " << cell.id() << " failed: " << e.what() << "\n";
            }
        }
    };

    const int n_threads = std::min<std::size_t>(workers, std::max<std::size_t>(1, pending.size()));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    return result;
}

}  // namespace duplex

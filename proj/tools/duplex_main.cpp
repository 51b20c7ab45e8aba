#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "duplex/agents.hpp"
#include "duplex/cka.hpp"
#include "duplex/errors.hpp"
#include "duplex/experiments.hpp"
#include "duplex/probe.hpp"
#include "duplex/segmentation.hpp"
#include "duplex/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace duplex;

// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric fault.
namespace {

struct GlobalOptions {
    std::uint64_t seed = 1;
    std::string out;
    std::string config_path;
    int frame_ms = 80;
    bool json_output = false;
};

ConfigFile load_config(const GlobalOptions& opts) {
    if (opts.config_path.empty()) return {};
    return ConfigFile::parse_file(opts.config_path);
}

std::vector<fs::path> trace_dirs_from_args(const std::vector<std::string>& paths) {
    std::vector<fs::path> dirs;
    for (const std::string& p : paths) {
        const fs::path path(p);
        if (fs::exists(path / "manifest.json")) {
            dirs.push_back(path);
            continue;
        }
        // A directory of trace directories: take every child with a manifest.
        std::vector<fs::path> children;
        if (fs::is_directory(path))
            for (const auto& entry : fs::directory_iterator(path))
                if (entry.is_directory() && fs::exists(entry.path() / "manifest.json"))
                    children.push_back(entry.path());
        std::sort(children.begin(), children.end());
        if (children.empty())
            throw DataError("no trace container found under " + path.string());
        dirs.insert(dirs.end(), children.begin(), children.end());
    }
    return dirs;
}

ExperimentCondition condition_from_flags(double noise, double bias_a, double bias_b,
                                         const std::string& variant_a,
                                         const std::string& variant_b, std::uint64_t seed) {
    ExperimentCondition cond;
    cond.noise_p = noise;
    cond.pad_bias_a = bias_a;
    cond.pad_bias_b = bias_b;
    cond.variant_a = variant_from_string(variant_a);
    cond.variant_b = variant_from_string(variant_b);
    cond.seed = seed;
    return cond;
}

ToyHyperparams agents_from_config(const ConfigFile& cfg) {
    // Reuse the grid loader for the [agents] table; other sections stay unread.
    ToyHyperparams hp;
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
    hp.model_seed_a = static_cast<std::uint64_t>(
        cfg.get_int("agents.model_seed_a", static_cast<std::int64_t>(hp.model_seed_a)));
    hp.model_seed_b = static_cast<std::uint64_t>(
        cfg.get_int("agents.model_seed_b", static_cast<std::int64_t>(hp.model_seed_b)));
    hp.prompt_frames = static_cast<int>(cfg.get_int("agents.prompt_frames", hp.prompt_frames));
    hp.prompt_seed = static_cast<std::uint64_t>(
        cfg.get_int("agents.prompt_seed", static_cast<std::int64_t>(hp.prompt_seed)));
    return hp;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"duplex-coupling: simulated full-duplex dialogues, representation "
                 "synchronization (lagged CKA), and turn-taking probes"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalOptions global;
    app.add_option("--seed", global.seed, "base random seed");
    app.add_option("--out", global.out, "output path");
    app.add_option("--config", global.config_path, "configuration file");
    app.add_option("--frame-ms", global.frame_ms, "milliseconds per frame");
    app.add_flag("--json", global.json_output, "machine-readable output on stdout");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "simulate one dialogue from condition flags");
    double sim_noise = 0.0, sim_bias_a = 0.0, sim_bias_b = 0.0;
    std::string sim_variant_a = "default", sim_variant_b = "default";
    double sim_duration_s = 0.0;
    std::int64_t sim_duration_frames = 0;
    simulate->add_option("--noise", sim_noise, "per-frame token corruption probability");
    simulate->add_option("--pad-bias-a", sim_bias_a, "PAD logit bias for participant A");
    simulate->add_option("--pad-bias-b", sim_bias_b, "PAD logit bias for participant B");
    simulate->add_option("--variant-a", sim_variant_a, "default | finetuned");
    simulate->add_option("--variant-b", sim_variant_b, "default | finetuned");
    auto* dur_s = simulate->add_option("--duration-s", sim_duration_s, "dialogue length, seconds");
    simulate->add_option("--duration-frames", sim_duration_frames, "dialogue length, frames")
        ->excludes(dur_s);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate an external trace directory");
    std::string ingest_dir;
    bool ingest_strict = false;
    ingest->add_option("dir", ingest_dir, "trace container directory")->required();
    ingest->add_flag("--strict-vad", ingest_strict, "require VAD to match tokens exactly");

    // segment
    auto* segment = app.add_subcommand("segment", "emit IPU and transition JSON for a trace");
    std::string segment_dir;
    segment->add_option("dir", segment_dir, "trace container directory")->required();

    // cka
    auto* cka_cmd = app.add_subcommand("cka", "lagged CKA curve for one or more traces");
    std::vector<std::string> cka_paths;
    int cka_max_lag = 60;
    std::int64_t cka_min_overlap = 50;
    int cka_baseline = 50;
    bool cka_uncentered = false;
    cka_cmd->add_option("traces", cka_paths, "trace directory / directory of traces")->required();
    cka_cmd->add_option("--max-lag", cka_max_lag, "lag grid half-width, frames");
    cka_cmd->add_option("--min-overlap", cka_min_overlap, "minimum overlapping frames per lag");
    cka_cmd->add_option("--baseline-lag", cka_baseline, "|lag| >= this defines the baseline");
    cka_cmd->add_flag("--uncentered", cka_uncentered, "skip column centering (ablation)");

    // probe
    auto* probe_cmd = app.add_subcommand("probe", "train turn-taking probes (one cell or a sweep)");
    std::vector<std::string> probe_paths;
    std::string probe_task = "eoi", probe_perspective = "production";
    std::vector<int> probe_deltas;
    bool probe_full_sweep = false;
    int probe_epochs = 50, probe_hidden = 64, probe_batch = 16, probe_bootstrap = 200;
    double probe_lr = 1e-3;
    probe_cmd->add_option("traces", probe_paths, "trace directory / directory of traces")
        ->required();
    probe_cmd->add_option("--task", probe_task, "eoi | hold_vs_nonhold");
    probe_cmd->add_option("--perspective", probe_perspective, "production | perception");
    probe_cmd->add_option("--delta", probe_deltas, "probe delay(s), frames");
    probe_cmd->add_flag("--sweep", probe_full_sweep, "use the full 0..24 frame delay grid");
    probe_cmd->add_option("--epochs", probe_epochs, "training epochs");
    probe_cmd->add_option("--hidden", probe_hidden, "LSTM hidden size");
    probe_cmd->add_option("--batch", probe_batch, "sequences per optimizer step");
    probe_cmd->add_option("--lr", probe_lr, "Adam learning rate");
    probe_cmd->add_option("--bootstrap", probe_bootstrap, "bootstrap resamples for CIs");
    std::string probe_save_params;
    probe_cmd->add_option("--save-params", probe_save_params,
                          "save trained parameters under this directory (per delta)");

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "run the full condition grid");
    int grid_workers = 0;
    bool grid_plan_only = false;
    bool grid_reference = false;
    grid_cmd->add_option("--workers", grid_workers,
                         "worker threads (default: DUPLEX_COUPLING_WORKERS or all cores)");
    grid_cmd->add_flag("--plan", grid_plan_only, "print the plan and exit");
    grid_cmd->add_flag("--config-reference", grid_reference,
                       "print the documented configuration defaults and exit");

    // report
    auto* report_cmd = app.add_subcommand("report", "emit plots, CSVs and a summary for a store");
    std::string report_store;
    bool report_deterministic = false;
    report_cmd->add_option("--store", report_store, "grid output directory")->required();
    report_cmd->add_flag("--deterministic", report_deterministic,
                         "suppress the timestamp comment in SVGs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (simulate->parsed()) {
            if (global.out.empty()) throw UsageError("simulate: --out is required");
            const ConfigFile cfg = load_config(global);
            const ToyHyperparams hp = agents_from_config(cfg);
            std::int64_t frames = sim_duration_frames;
            if (sim_duration_s > 0.0)
                frames = static_cast<std::int64_t>(sim_duration_s * 1000.0 / global.frame_ms);
            if (frames <= 0) frames = 1250;
            const ExperimentCondition cond = condition_from_flags(
                sim_noise, sim_bias_a, sim_bias_b, sim_variant_a, sim_variant_b, global.seed);
            DialogueTrace trace = simulate_dialogue(cond, frames, hp);
            trace.clock.frame_ms = global.frame_ms;
            write_trace(trace, global.out);
            if (global.json_output) {
                json j{{"trace", global.out},
                       {"n_frames", trace.duration_frames},
                       {"frame_ms", trace.clock.frame_ms}};
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "wrote " << trace.duration_frames << "-frame trace to " << global.out
                          << "\n";
            }
        } else if (ingest->parsed()) {
            const DialogueTrace trace = read_trace(ingest_dir);
            validate_trace(trace, ingest_strict);
            if (global.json_output) {
                json j{{"ok", true},
                       {"n_frames", trace.duration_frames},
                       {"frame_ms", trace.clock.frame_ms},
                       {"dim_a", trace.a.activations.cols()},
                       {"dim_b", trace.b.activations.cols()},
                       {"vocab_size", trace.a.tokens.vocab_size},
                       {"noise_p", trace.condition.noise_p}};
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "ok: " << trace.duration_frames << " frames, dims "
                          << trace.a.activations.cols() << "/" << trace.b.activations.cols()
                          << ", vocab " << trace.a.tokens.vocab_size << "\n";
            }
        } else if (segment->parsed()) {
            const DialogueTrace trace = read_trace(segment_dir);
            const auto ipus_a = extract_ipus(trace.a.vad, trace.clock, Speaker::A);
            const auto ipus_b = extract_ipus(trace.b.vad, trace.clock, Speaker::B);
            std::vector<Ipu> all = ipus_a;
            all.insert(all.end(), ipus_b.begin(), ipus_b.end());
            std::sort(all.begin(), all.end(), [](const Ipu& x, const Ipu& y) {
                if (x.onset_frame != y.onset_frame) return x.onset_frame < y.onset_frame;
                return static_cast<int>(x.speaker) < static_cast<int>(y.speaker);
            });
            const auto labels =
                label_transitions(ipus_a, ipus_b, trace.clock, trace.duration_frames);
            const fs::path out_dir = global.out.empty() ? fs::path(segment_dir) : fs::path(global.out);
            fs::create_directories(out_dir);
            write_ipus_jsonl(all, trace.clock, out_dir / "ipus.jsonl");
            write_transitions_jsonl(labels, trace.clock, out_dir / "transitions.jsonl");
            if (global.json_output) {
                json j{{"ipus", all.size()},
                       {"transitions", labels.size()},
                       {"ipus_file", (out_dir / "ipus.jsonl").string()},
                       {"transitions_file", (out_dir / "transitions.jsonl").string()}};
                std::cout << j.dump() << "\n";
            } else {
                std::cout << all.size() << " IPUs, " << labels.size() << " transitions -> "
                          << out_dir.string() << "\n";
            }
        } else if (cka_cmd->parsed()) {
            const auto dirs = trace_dirs_from_args(cka_paths);
            std::vector<CkaCurve> curves;
            int frame_ms = global.frame_ms;
            for (const fs::path& dir : dirs) {
                const DialogueTrace trace = read_trace(dir);
                frame_ms = trace.clock.frame_ms;
                curves.push_back(lagged_cka(trace.a.activations, trace.b.activations,
                                            default_lag_grid(cka_max_lag), cka_min_overlap,
                                            !cka_uncentered));
            }
            const CurveStats stats = curve_stats(curves, cka_baseline);
            std::ostringstream csv;
            csv << "lag_ms,mean,ci_lo,ci_hi,n_overlap\n";
            for (std::size_t i = 0; i < stats.lags_frames.size(); ++i)
                csv << stats.lags_frames[i] * frame_ms << "," << csv_double(stats.mean[i]) << ","
                    << csv_double(stats.ci_lo[i]) << "," << csv_double(stats.ci_hi[i]) << ","
                    << stats.n_overlap[i] << "\n";
            if (!global.out.empty()) {
                std::ofstream out(global.out, std::ios::trunc);
                if (!out) throw DataError("cannot open for writing: " + global.out);
                out << csv.str();
            }
            if (global.json_output) {
                auto sanitize = [](const std::vector<double>& v) {
                    json arr = json::array();
                    for (double x : v) arr.push_back(std::isnan(x) ? json(nullptr) : json(x));
                    return arr;
                };
                std::vector<std::int64_t> lag_ms;
                for (int lag : stats.lags_frames)
                    lag_ms.push_back(static_cast<std::int64_t>(lag) * frame_ms);
                json j{{"n_curves", stats.n_curves},
                       {"peak_lag_frames", stats.peak_lag},
                       {"peak_lag_ms", stats.peak_lag * frame_ms},
                       {"peak_value", stats.peak_value},
                       {"baseline_value", stats.baseline_value},
                       {"lag_ms", lag_ms},
                       {"mean", sanitize(stats.mean)},
                       {"ci_lo", sanitize(stats.ci_lo)},
                       {"ci_hi", sanitize(stats.ci_hi)},
                       {"n_overlap", stats.n_overlap}};
                std::cout << j.dump() << "\n";
            } else {
                if (global.out.empty()) std::cout << csv.str();
                std::cout << "peak " << stats.peak_value << " at lag "
                          << stats.peak_lag * frame_ms << " ms; baseline "
                          << stats.baseline_value << "\n";
            }
        } else if (probe_cmd->parsed()) {
            const auto dirs = trace_dirs_from_args(probe_paths);
            std::vector<DialogueTrace> traces;
            int frame_ms = global.frame_ms;
            for (const fs::path& dir : dirs) {
                traces.push_back(read_trace(dir));
                frame_ms = traces.back().clock.frame_ms;
            }
            std::vector<int> deltas = probe_deltas;
            if (probe_full_sweep) deltas = default_delay_grid();
            if (deltas.empty()) deltas = {0};

            ProbeConfig cfg;
            cfg.task = probe_task_from_string(probe_task);
            cfg.perspective = perspective_from_string(probe_perspective);
            cfg.hidden_size = probe_hidden;
            cfg.learning_rate = probe_lr;
            cfg.batch_size = probe_batch;
            cfg.epochs = probe_epochs;
            cfg.seed = global.seed;
            std::vector<LstmParams> trained;
            const auto rows = delay_sweep(traces, cfg.task, cfg.perspective, deltas, cfg,
                                          RngStream::derive_seed(global.seed, "cli/split"),
                                          probe_bootstrap,
                                          probe_save_params.empty() ? nullptr : &trained);
            if (!probe_save_params.empty()) {
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (!rows[i].ok) continue;
                    save_lstm_params(trained[i],
                                     fs::path(probe_save_params) /
                                         ("delta" + std::to_string(rows[i].delay_frames)));
                }
            }
            std::ostringstream csv;
            csv << "task,perspective,delta_frames,delta_ms,auc,auc_shuffled,ci_lo,ci_hi,ok,error\n";
            json rows_json = json::array();
            for (const DelaySweepRow& row : rows) {
                csv << probe_task << "," << probe_perspective << "," << row.delay_frames << ","
                    << row.delay_frames * frame_ms << "," << csv_double(row.auc) << ","
                    << csv_double(row.auc_shuffled) << "," << csv_double(row.ci_lo) << ","
                    << csv_double(row.ci_hi) << "," << (row.ok ? 1 : 0) << ","
                    << csv_safe(row.error) << "\n";
                rows_json.push_back({{"delta_frames", row.delay_frames},
                                     {"delta_ms", row.delay_frames * frame_ms},
                                     {"auc", row.ok ? json(row.auc) : json(nullptr)},
                                     {"auc_shuffled",
                                      row.ok ? json(row.auc_shuffled) : json(nullptr)},
                                     {"ok", row.ok},
                                     {"error", row.error}});
            }
            if (!global.out.empty()) {
                std::ofstream out(global.out, std::ios::trunc);
                if (!out) throw DataError("cannot open for writing: " + global.out);
                out << csv.str();
            }
            if (global.json_output)
                std::cout << rows_json.dump() << "\n";
            else if (global.out.empty())
                std::cout << csv.str();
            for (const DelaySweepRow& row : rows)
                if (!row.ok)
                    std::cerr << "delta " << row.delay_frames << " failed: " << row.error << "\n";
        } else if (grid_cmd->parsed()) {
            if (grid_reference) {
                std::cout << config_reference();
                return 0;
            }
            const ConfigFile cfg = load_config(global);
            const GridSpec spec =
                global.config_path.empty() ? GridSpec::desk_default() : GridSpec::from_config(cfg);
            std::cout << spec.plan_summary() << "\n";
            if (grid_plan_only) return 0;
            if (global.out.empty()) throw UsageError("grid: --out is required");
            const GridRunResult result = run_grid(spec, global.out, grid_workers);
            std::cout << "completed cells: " << result.completed.size() << " (skipped "
                      << result.skipped.size() << " already present)\n";
            if (!result.failed.empty()) {
                for (const auto& [id, msg] : result.failed)
                    std::cerr << "failed: " << id << ": " << msg << "\n";
                return 2;
            }
        } else if (report_cmd->parsed()) {
            const fs::path out_dir =
                global.out.empty() ? fs::path(report_store) / "report" : fs::path(global.out);
            emit_report(report_store, out_dir, report_deterministic);
            std::cout << "report written to " << out_dir.string() << "\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericFault& e) {
        std::cerr << "numeric fault: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

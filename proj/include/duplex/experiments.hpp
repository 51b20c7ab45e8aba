#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "duplex/agents.hpp"
#include "duplex/cka.hpp"
#include "duplex/config.hpp"
#include "duplex/probe.hpp"
#include "duplex/trace.hpp"

namespace duplex {

inline constexpr const char* kToolkitVersion = "duplex-coupling 0.1.0";

// One grid cell = (noise level, pad bias level, variant pairing); the bias
// level applies to both participants, so the summed bias is twice the level.
struct CellKey {
    double noise_p = 0.0;
    double pad_bias = 0.0;
    AgentVariant variant_a = AgentVariant::Default;
    AgentVariant variant_b = AgentVariant::Default;

    std::string id() const;
    std::string pairing() const;  // e.g. "default/finetuned"
};

struct GridSpec {
    std::vector<double> noise_levels{0.0, 0.7};
    std::vector<double> bias_levels{0.0, 2.0};
    std::vector<std::pair<AgentVariant, AgentVariant>> pairings{
        {AgentVariant::Default, AgentVariant::Default},
        {AgentVariant::Default, AgentVariant::Finetuned}};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::int64_t duration_frames = 375;  // 30 s at the default clock

    std::vector<int> lag_grid = default_lag_grid(60);
    int baseline_lag_frames = 50;
    std::int64_t min_overlap = 50;

    bool run_probes = true;
    std::vector<int> delay_grid{0, 8, 16, 24};
    ProbeConfig probe{};  // epochs reduced to 50 for the desk default
    int bootstrap_samples = 200;
    std::uint64_t probe_seed_base = 1;

    ToyHyperparams agents{};
    int frame_ms = 80;

    static GridSpec desk_default();
    static GridSpec from_config(const ConfigFile& cfg);

    void validate() const;
    std::vector<CellKey> cells() const;
    std::string plan_summary() const;  // echoed before execution
};

// The documented configuration reference (all keys with their defaults).
std::string config_reference();

struct GridRunResult {
    std::vector<std::string> completed;  // cell ids, this run + previous runs
    std::vector<std::string> skipped;    // already present
    std::vector<std::pair<std::string, std::string>> failed;  // (cell id, error)
};

// Simulates, annotates, computes per-dialogue lagged CKA, aggregates, and
// runs probe sweeps, one subdirectory per cell. Idempotent: completed cells
// listed in the store manifest are skipped on re-run. Parallelism is bounded
// by DUPLEX_COUPLING_WORKERS (or the explicit workers argument).
GridRunResult run_grid(const GridSpec& spec, const std::filesystem::path& out_dir,
                       int workers = 0);

// Report emission over a completed (possibly partial) store: CKA-vs-lag SVGs
// per manipulation, AUC-vs-delay SVGs per task x perspective, the underlying
// CSVs, and a summary JSON. Missing cells render as gaps and are flagged.
void emit_report(const std::filesystem::path& store_dir, const std::filesystem::path& out_dir,
                 bool deterministic = false);

// %.17g: shortest text that round-trips a double through parsing.
std::string csv_double(double v);

// Free text destined for a CSV field: separators replaced, never quoted.
std::string csv_safe(std::string s);

}  // namespace duplex

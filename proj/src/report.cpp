#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "duplex/errors.hpp"
#include "duplex/experiments.hpp"
#include "duplex/svg.hpp"

namespace duplex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CellData {
    CellKey key;
    json cka;    // cka_stats.json
    json probe;  // probe_results.json (array), may be null
};

struct StoreView {
    json grid;
    std::vector<double> noise_levels;
    std::vector<double> bias_levels;
    std::vector<std::string> pairings;
    int frame_ms = 80;
    std::map<std::string, CellData> cells;   // by cell id
    std::vector<std::string> missing;        // expected but absent
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + " is malformed: " + e.what());
    }
}

std::string cell_id_for(double noise, double bias, const std::string& pairing) {
    CellKey key;
    key.noise_p = noise;
    key.pad_bias = bias;
    const auto slash = pairing.find('/');
    key.variant_a = variant_from_string(pairing.substr(0, slash));
    key.variant_b = variant_from_string(pairing.substr(slash + 1));
    return key.id();
}

StoreView load_store(const fs::path& store_dir) {
    const fs::path manifest_path = store_dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw DataError("no manifest.json in " + store_dir.string() + "; run the grid first");
    const json manifest = read_json(manifest_path);

    StoreView view;
    view.grid = manifest.at("grid");
    view.noise_levels = view.grid.at("noise_levels").get<std::vector<double>>();
    view.bias_levels = view.grid.at("bias_levels").get<std::vector<double>>();
    view.pairings = view.grid.at("pairings").get<std::vector<std::string>>();
    view.frame_ms = view.grid.at("frame_ms").get<int>();

    const auto completed = manifest.at("completed").get<std::vector<std::string>>();
    for (double noise : view.noise_levels)
        for (double bias : view.bias_levels)
            for (const std::string& pairing : view.pairings) {
                const std::string id = cell_id_for(noise, bias, pairing);
                if (std::find(completed.begin(), completed.end(), id) == completed.end()) {
                    view.missing.push_back(id);
                    continue;
                }
                CellData data;
                data.key.noise_p = noise;
                data.key.pad_bias = bias;
                const auto slash = pairing.find('/');
                data.key.variant_a = variant_from_string(pairing.substr(0, slash));
                data.key.variant_b = variant_from_string(pairing.substr(slash + 1));
                const fs::path cell_dir = store_dir / "cells" / id;
                data.cka = read_json(cell_dir / "cka_stats.json");
                if (fs::exists(cell_dir / "probe_results.json"))
                    data.probe = read_json(cell_dir / "probe_results.json");
                view.cells.emplace(id, std::move(data));
            }
    return view;
}

double json_num(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

SvgChart::Series cka_series(const CellData& cell, const std::string& label,
                            const std::string& color) {
    SvgChart::Series series;
    series.label = label;
    series.color = color;
    const auto& lag_ms = cell.cka.at("lag_ms");
    const auto& mean = cell.cka.at("mean");
    const auto& lo = cell.cka.at("ci_lo");
    const auto& hi = cell.cka.at("ci_hi");
    for (std::size_t i = 0; i < lag_ms.size(); ++i) {
        series.x.push_back(lag_ms[i].get<double>() / 1000.0);
        series.y.push_back(json_num(mean[i]));
        series.band_lo.push_back(json_num(lo[i]));
        series.band_hi.push_back(json_num(hi[i]));
    }
    return series;
}

std::string trim_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void emit_report(const fs::path& store_dir, const fs::path& out_dir, bool deterministic) {
    const StoreView view = load_store(store_dir);
    if (view.cells.empty()) throw DataError("store has no completed cells to report on");
    fs::create_directories(out_dir);

    const double ref_noise = *std::min_element(view.noise_levels.begin(), view.noise_levels.end());
    const double ref_bias = *std::min_element(view.bias_levels.begin(), view.bias_levels.end());
    const std::string ref_pairing =
        std::find(view.pairings.begin(), view.pairings.end(), "default/default") !=
                view.pairings.end()
            ? "default/default"
            : view.pairings.front();

    auto find_cell = [&](double noise, double bias, const std::string& pairing) -> const CellData* {
        const auto it = view.cells.find(cell_id_for(noise, bias, pairing));
        return it == view.cells.end() ? nullptr : &it->second;
    };

    // (a) CKA vs lag, one panel per manipulation.
    {
        SvgChart chart("Synchronization vs channel noise", "lag (s), positive = A leads B",
                       "linear CKA");
        std::size_t color = 0;
        for (double noise : view.noise_levels) {
            const CellData* cell = find_cell(noise, ref_bias, ref_pairing);
            if (!cell) continue;
            chart.add_series(cka_series(*cell, "noise p=" + trim_number(noise),
                                        chart_palette()[color++ % chart_palette().size()]));
        }
        chart.write(out_dir / "cka_noise.svg", deterministic);
    }
    {
        SvgChart chart("Synchronization vs PAD bias", "lag (s), positive = A leads B",
                       "linear CKA");
        std::size_t color = 0;
        for (double bias : view.bias_levels) {
            const CellData* cell = find_cell(ref_noise, bias, ref_pairing);
            if (!cell) continue;
            chart.add_series(cka_series(*cell, "summed bias " + trim_number(2.0 * bias),
                                        chart_palette()[color++ % chart_palette().size()]));
        }
        chart.write(out_dir / "cka_bias.svg", deterministic);
    }
    {
        SvgChart chart("Synchronization vs model pairing", "lag (s), positive = A leads B",
                       "linear CKA");
        std::size_t color = 0;
        for (const std::string& pairing : view.pairings) {
            const CellData* cell = find_cell(ref_noise, ref_bias, pairing);
            if (!cell) continue;
            chart.add_series(cka_series(*cell, "A:" + pairing.substr(0, pairing.find('/')) +
                                                   " B:" + pairing.substr(pairing.find('/') + 1),
                                        chart_palette()[color++ % chart_palette().size()]));
        }
        chart.write(out_dir / "cka_pairing.svg", deterministic);
    }

    // (b) AUC vs delay per task x perspective, real vs shuffled per noise level.
    for (const std::string task : {"eoi", "hold_vs_nonhold"}) {
        for (const std::string perspective : {"production", "perception"}) {
            SvgChart chart(std::string(task == "eoi" ? "End-of-IPU" : "Hold vs Non-Hold") + ", " +
                               perspective,
                           "probe delay (ms)", "AUC-ROC");
            std::size_t color = 0;
            bool any = false;
            for (double noise : view.noise_levels) {
                const CellData* cell = find_cell(noise, ref_bias, ref_pairing);
                if (!cell || cell->probe.is_null()) continue;
                SvgChart::Series real, shuffled;
                real.label = "noise p=" + trim_number(noise);
                real.color = chart_palette()[color % chart_palette().size()];
                shuffled.label = "shuffled p=" + trim_number(noise);
                shuffled.color = real.color;
                shuffled.dashed = true;
                ++color;
                for (const json& row : cell->probe) {
                    if (row.at("task") != task || row.at("perspective") != perspective) continue;
                    const double x = row.at("delta_ms").get<double>();
                    real.x.push_back(x);
                    real.y.push_back(json_num(row.at("auc")));
                    shuffled.x.push_back(x);
                    shuffled.y.push_back(json_num(row.at("auc_shuffled")));
                }
                if (!real.x.empty()) {
                    chart.add_series(std::move(real));
                    chart.add_series(std::move(shuffled));
                    any = true;
                }
            }
            if (any) {
                const std::string name = std::string("auc_") + task + "_" + perspective + ".svg";
                chart.write(out_dir / name, deterministic);
            }
        }
    }

    // (c) Aggregated CSVs, rows in grid order.
    {
        std::ostringstream csv;
        csv << "cell,noise_p,pad_bias,pairing,lag_ms,mean,ci_lo,ci_hi,n_overlap\n";
        for (double noise : view.noise_levels)
            for (double bias : view.bias_levels)
                for (const std::string& pairing : view.pairings) {
                    const CellData* cell = find_cell(noise, bias, pairing);
                    if (!cell) continue;
                    const auto& lag_ms = cell->cka.at("lag_ms");
                    const auto& mean = cell->cka.at("mean");
                    const auto& lo = cell->cka.at("ci_lo");
                    const auto& hi = cell->cka.at("ci_hi");
                    const auto& overlap = cell->cka.at("n_overlap");
                    for (std::size_t i = 0; i < lag_ms.size(); ++i)
                        csv << cell->key.id() << "," << csv_double(noise) << "," << csv_double(bias)
                            << "," << pairing << "," << lag_ms[i].get<std::int64_t>() << ","
                            << csv_double(json_num(mean[i])) << "," << csv_double(json_num(lo[i]))
                            << "," << csv_double(json_num(hi[i])) << ","
                            << overlap[i].get<std::int64_t>() << "\n";
                }
        std::ofstream out(out_dir / "cka_curves.csv", std::ios::trunc);
        out << csv.str();
    }
    {
        std::ostringstream csv;
        csv << "cell,noise_p,pad_bias,pairing,peak_lag_ms,peak_value,baseline_value,n_dialogues\n";
        for (double noise : view.noise_levels)
            for (double bias : view.bias_levels)
                for (const std::string& pairing : view.pairings) {
                    const CellData* cell = find_cell(noise, bias, pairing);
                    if (!cell) continue;
                    csv << cell->key.id() << "," << csv_double(noise) << "," << csv_double(bias)
                        << "," << pairing << "," << cell->cka.at("peak_lag_ms").get<std::int64_t>()
                        << "," << csv_double(cell->cka.at("peak_value").get<double>()) << ","
                        << csv_double(cell->cka.at("baseline_value").get<double>()) << ","
                        << cell->cka.at("n_dialogues").get<std::int64_t>() << "\n";
                }
        std::ofstream out(out_dir / "cka_summary.csv", std::ios::trunc);
        out << csv.str();
    }
    {
        std::ostringstream csv;
        csv << "task,perspective,noise_p,pad_bias,pairing,delta_ms,auc,auc_shuffled,ci_lo,ci_hi\n";
        for (const std::string task : {"eoi", "hold_vs_nonhold"})
            for (const std::string perspective : {"production", "perception"})
                for (double noise : view.noise_levels)
                    for (double bias : view.bias_levels)
                        for (const std::string& pairing : view.pairings) {
                            const CellData* cell = find_cell(noise, bias, pairing);
                            if (!cell || cell->probe.is_null()) continue;
                            for (const json& row : cell->probe) {
                                if (row.at("task") != task || row.at("perspective") != perspective)
                                    continue;
                                csv << task << "," << perspective << "," << csv_double(noise) << ","
                                    << csv_double(bias) << "," << pairing << ","
                                    << row.at("delta_ms").get<std::int64_t>() << ","
                                    << csv_double(json_num(row.at("auc"))) << ","
                                    << csv_double(json_num(row.at("auc_shuffled"))) << ","
                                    << csv_double(json_num(row.at("ci_lo"))) << ","
                                    << csv_double(json_num(row.at("ci_hi"))) << "\n";
                            }
                        }
        std::ofstream out(out_dir / "probe_results.csv", std::ios::trunc);
        out << csv.str();
    }

    // (d) Summary with peak/baseline and AUC endpoints per cell.
    {
        json summary;
        summary["toolkit"] = kToolkitVersion;
        summary["missing_cells"] = view.missing;
        json cells = json::object();
        for (const auto& [id, cell] : view.cells) {
            json entry;
            entry["noise_p"] = cell.key.noise_p;
            entry["pad_bias"] = cell.key.pad_bias;
            entry["pairing"] = cell.key.pairing();
            entry["peak_lag_ms"] = cell.cka.at("peak_lag_ms");
            entry["peak_value"] = cell.cka.at("peak_value");
            entry["baseline_value"] = cell.cka.at("baseline_value");
            if (!cell.probe.is_null()) {
                json probes = json::object();
                for (const json& row : cell.probe) {
                    const std::string key = row.at("task").get<std::string>() + "/" +
                                            row.at("perspective").get<std::string>();
                    if (!probes.contains(key))
                        probes[key] = {{"delta_ms", json::array()},
                                       {"auc", json::array()},
                                       {"auc_shuffled", json::array()}};
                    probes[key]["delta_ms"].push_back(row.at("delta_ms"));
                    probes[key]["auc"].push_back(row.at("auc"));
                    probes[key]["auc_shuffled"].push_back(row.at("auc_shuffled"));
                }
                entry["probes"] = std::move(probes);
            }
            cells[id] = std::move(entry);
        }
        summary["cells"] = std::move(cells);
        std::ofstream out(out_dir / "summary.json", std::ios::trunc);
        out << summary.dump(2) << "\n";
    }
}

}  // namespace duplex

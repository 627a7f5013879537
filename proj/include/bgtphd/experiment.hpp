#pragma once

// Experiment orchestration and result files. Requires nlohmann/json (json.hpp)
// and yaml-cpp through config_io.hpp.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bgtphd/config_io.hpp"
#include "bgtphd/scenario.hpp"

namespace bgtphd {

// Column order of the result files. Stable; readers rely on it.
inline const std::vector<std::string> kAggregateColumns{
    "scan",           "variant",       "L", "mean_cardinality", "cardinality_std", "mean_clutter_rate",
    "rms_tm",         "mean_true_cardinality", "mean_detection_prob", "runs"};
inline const std::vector<std::string> kRuntimeColumns{"variant",     "L",           "runs",       "failed_runs",
                                                      "mean_seconds", "min_seconds", "max_seconds"};
inline const std::vector<std::string> kRunTimesColumns{"variant", "L", "run", "seed", "failed", "seconds"};
inline const std::vector<std::string> kTrackColumns{"run", "scan", "kind", "track_id", "birth_time", "x", "y", "p_D"};

namespace detail {

/// Shortest decimal text that parses back to the same double; empty for NaN.
inline std::string fmt(double v) {
    return std::isnan(v) ? std::string() : num(v);
}

inline std::string join(const std::vector<std::string>& cols) {
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out += ',';
        out += cols[i];
    }
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace detail

using ProgressFn = std::function<void(const MonteCarloResult&)>;

/// Runs every variant of the grid and writes aggregate.csv, runtime.csv,
/// run_times.csv and manifest.json into `out_dir`. Returns the results in
/// variant order.
inline std::vector<MonteCarloResult> run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                                    unsigned threads = 0, const ProgressFn& progress = {}) {
    if (const std::string problem = check_experiment(spec); !problem.empty()) throw ConfigError(problem);
    std::filesystem::create_directories(out_dir);
    const ScenarioConfig& cfg = spec.scenario;

    MonteCarloOptions opts;
    opts.compute_metric = spec.compute_metric;
    opts.threads = threads;
    std::vector<MonteCarloResult> results;
    for (const auto& v : spec.variants) {
        results.push_back(run_monte_carlo(cfg, v, opts));
        if (progress) progress(results.back());
    }

    auto agg = detail::open_out(out_dir / "aggregate.csv");
    agg << detail::join(kAggregateColumns) << '\n';
    for (const auto& r : results) {
        for (const auto& a : r.aggregate) {
            agg << a.time << ',' << to_string(r.variant.kind) << ',' << r.variant.window << ','
                << detail::fmt(a.mean_cardinality) << ',' << detail::fmt(a.cardinality_std) << ','
                << detail::fmt(a.mean_clutter_rate) << ',' << detail::fmt(a.rms_tm) << ','
                << detail::fmt(a.mean_true_cardinality) << ',' << detail::fmt(a.mean_detection_prob) << ',' << a.runs
                << '\n';
        }
    }

    auto rt = detail::open_out(out_dir / "runtime.csv");
    rt << detail::join(kRuntimeColumns) << '\n';
    for (const auto& r : results) {
        rt << to_string(r.variant.kind) << ',' << r.variant.window << ',' << r.runs.size() << ',' << r.failed_runs << ','
           << detail::fmt(r.mean_seconds) << ',' << detail::fmt(r.min_seconds) << ',' << detail::fmt(r.max_seconds)
           << '\n';
    }

    auto per_run = detail::open_out(out_dir / "run_times.csv");
    per_run << detail::join(kRunTimesColumns) << '\n';
    for (const auto& r : results) {
        for (const auto& run : r.runs) {
            per_run << to_string(r.variant.kind) << ',' << r.variant.window << ',' << run.index << ',' << run.seed << ','
                    << (run.failed ? 1 : 0) << ',' << detail::fmt(run.wall_seconds) << '\n';
        }
    }

    nlohmann::ordered_json manifest;
    manifest["master_seed"] = cfg.master_seed;
    manifest["run_count"] = cfg.run_count;
    manifest["horizon"] = cfg.horizon;
    manifest["expected_clutter_rate"] = cfg.expected_clutter();
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < cfg.run_count; ++i) seeds.push_back(run_seed(cfg, i));
    manifest["run_seeds"] = seeds;
    manifest["variants"] = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json v;
        v["filter"] = to_string(r.variant.kind);
        v["L"] = r.variant.window;
        v["failed_runs"] = r.failed_runs;
        nlohmann::ordered_json errors = nlohmann::ordered_json::array();
        for (const auto& run : r.runs) {
            if (run.failed) errors.push_back({{"run", run.index}, {"error", run.error}});
        }
        v["failures"] = errors;
        manifest["variants"].push_back(v);
    }
    manifest["files"] = {"aggregate.csv", "runtime.csv", "run_times.csv"};
    manifest["config"] = dump_experiment(spec);
    detail::open_out(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    return results;
}

/// Long-format track table of one run: for every scan, one row per alive true
/// target (kind "truth", id = target index) and one per reported track (kind
/// "estimate", id = rank within the scan's estimate). Only "csv" is supported.
inline void export_tracks(const RunRecord& run, const std::string& format, std::ostream& out) {
    if (format != "csv") throw std::invalid_argument("unknown export format '" + format + "' (expected csv)");
    if (run.failed) throw std::invalid_argument("run " + std::to_string(run.index) + " failed: " + run.error);
    out << detail::join(kTrackColumns) << '\n';
    for (const auto& est : run.estimates) {
        const int k = est.time;
        for (std::size_t i = 0; i < run.truth.targets.size(); ++i) {
            const auto& t = run.truth.targets[i].trajectory;
            if (!t.alive_at(k)) continue;
            const Vector& x = t.at(k);
            out << run.index << ',' << k << ",truth," << i << ',' << t.birth_time << ',' << detail::fmt(x(0)) << ','
                << detail::fmt(x(1)) << ",\n";
        }
        for (std::size_t i = 0; i < est.tracks.size(); ++i) {
            const auto& t = est.tracks[i];
            const Vector x = t.current_state();
            out << run.index << ',' << k << ",estimate," << i << ',' << t.birth_time << ',' << detail::fmt(x(0)) << ','
                << detail::fmt(x(1)) << ',' << (t.detection_prob ? detail::fmt(*t.detection_prob) : "") << '\n';
        }
    }
}

inline void export_tracks(const RunRecord& run, const std::string& format, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    export_tracks(run, format, out);
}

}  // namespace bgtphd

#pragma once

#include "axonad/checkpoint.hpp"
#include "axonad/data.hpp"
#include "axonad/metrics.hpp"
#include "axonad/run_config.hpp"
#include "axonad/scoring.hpp"
#include "axonad/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace axonad {

// ---------------------------------------------------------------------------
// Library-level pipeline pieces shared by the commands
// ---------------------------------------------------------------------------

struct TrainOutcome {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double fit_seconds = 0.0;
};

/// Splits the value matrix chronologically, fits the normalizer on the
/// training segment, trains on train_sub with early stopping on val, rounds
/// the parameters to float32 and calibrates on the train_sub windows. Only
/// rows before the train/test boundary are read. The channel count is taken
/// from `values`.
TrainOutcome train_detector(const Mat& values, RunConfig cfg, const EpochCallback& on_epoch = {});

/// Component scores for every stride-1 window of the normalized series, in
/// order of end index (T-1, T, ..., N-1).
std::vector<ComponentScores> score_series(const Checkpoint& ckpt, const Mat& values);

std::vector<ScoreRecord> score_records(const std::vector<ComponentScores>& scores, int window,
                                       const Calibration& cal, ScoreMode mode);

/// Metrics of a per-timestep score series against labels over [from, N).
MetricReport evaluate_range(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            std::size_t from);

struct BenchReport {
    std::optional<double> fit_seconds;
    std::size_t windows = 0;
    std::size_t warmup = 0;
    double score_seconds_total = 0.0;  // sum of the timed per-window latencies
    double wall_seconds = 0.0;         // timed loop including bookkeeping
    double latency_median_ms = 0.0;
    double latency_p99_ms = 0.0;
    double latency_mean_ms = 0.0;
};

/// Times `Scorer::score` one window at a time on the calling thread, after
/// building the scorer once. The first `warmup` windows are scored but not
/// timed. Needs at least warmup + min_windows windows.
BenchReport bench_latency(const Model& m, const WindowSequence& windows, std::size_t warmup = 100,
                          std::size_t min_windows = 10000, std::optional<std::size_t> max_windows = {});

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::filesystem::path config;  // empty: defaults
    std::filesystem::path out;
    bool force = false;
    std::optional<std::uint64_t> seed;
};
/// Writes the CSV (with `label` column) and `<out>.intervals.json`.
void cmd_synth(const SynthOptions& opt);

struct TrainOptions {
    std::filesystem::path data;
    std::filesystem::path config;
    std::filesystem::path checkpoint;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};
/// Writes the checkpoint plus `<checkpoint>.train.json` with timings and the
/// epoch history.
TrainOutcome cmd_train(const TrainOptions& opt);

struct ScoreOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<AlignmentMode> align;  // default: the checkpoint's config
    std::optional<ScoreMode> mode;
};
void cmd_score(const ScoreOptions& opt);

struct EvalOptions {
    std::filesystem::path scores;
    std::filesystem::path labels;  // CSV with a `label` column
    std::filesystem::path report;  // .json: JSON, otherwise CSV
    std::size_t from = 0;          // first timestep evaluated
};
MetricReport cmd_eval(const EvalOptions& opt);

struct DiagnoseOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path report;
    bool test_only = true;  // windows ending in the test segment
};
DiagnosticsReport cmd_diagnose(const DiagnoseOptions& opt);

struct BenchOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path report;
    std::size_t warmup = 100;
    std::optional<std::size_t> windows;  // timed windows (default: all available)
};
BenchReport cmd_bench(const BenchOptions& opt);

struct AblateOptions {
    std::filesystem::path data;
    std::filesystem::path config;
    std::filesystem::path grid;
    std::filesystem::path report;  // CSV; paired summary goes to `<report>.paired.json`
    bool verbose = false;
};

struct AblationRow {
    std::string variant;
    nlohmann::json settings;
    std::uint64_t seed = 0;
    MetricReport metrics;
};
std::vector<AblationRow> cmd_ablate(const AblateOptions& opt);

}  // namespace axonad

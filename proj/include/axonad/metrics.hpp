#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace axonad {

using Interval = std::pair<std::int64_t, std::int64_t>;  // [start, end)

/// Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie). Throws
/// `E_METRIC` unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision: sum over descending distinct thresholds of
/// (R_i - R_{i-1}) * P_i. Throws `E_METRIC` without positives.
double auc_pr(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Marks a whole ground-truth interval positive when any of its points is.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred,
                                       std::span<const Interval> intervals);

enum class F1Variant { pa, event, range };
std::string_view to_string(F1Variant v);

struct F1Score {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// F1 of a binary prediction against ground-truth intervals.
F1Score f1_for_prediction(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels,
                          std::span<const Interval> intervals, F1Variant variant);

/// Candidate thresholds: 256 evenly spaced quantiles of the scores, plus all
/// distinct scores when there are fewer than 512. Sorted, deduplicated.
std::vector<double> candidate_thresholds(std::span<const double> scores);

struct SweepResult {
    double best_f1 = 0.0;
    double best_threshold = 0.0;
};

/// Oracle sweep: predicted positives are scores >= threshold.
SweepResult f1_sweep(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     F1Variant variant);

struct MetricReport {
    double auc_roc = 0.0, auc_pr = 0.0;
    double pa_f1 = 0.0, event_f1 = 0.0, range_f1 = 0.0;
    double pa_threshold = 0.0, event_threshold = 0.0, range_threshold = 0.0;
};

MetricReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Paired comparison across series
// ---------------------------------------------------------------------------

struct PairedComparison {
    std::size_t n = 0;
    std::size_t nonzero = 0;
    double win_rate = 0.0;   // fraction of series with A > B
    double loss_rate = 0.0;  // fraction with A < B
    double mean_delta = 0.0;
    double median_delta = 0.0;
    double p_value = 1.0;    // two-sided Wilcoxon signed-rank
    bool exact = true;       // exact enumeration (n' <= 25) or normal approximation
    double ci_low = 0.0, ci_high = 0.0;  // percentile bootstrap CI of the mean delta
};

/// Two-sided Wilcoxon signed-rank p-value; zero differences are dropped.
/// Exact for up to 25 nonzero differences, normal approximation with tie and
/// continuity correction beyond.
double wilcoxon_signed_rank_p(std::span<const double> diffs, bool* exact = nullptr);

PairedComparison paired_compare(std::span<const double> a, std::span<const double> b,
                                std::uint64_t seed = 2024, int resamples = 10000);

}  // namespace axonad

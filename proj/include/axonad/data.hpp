#pragma once

#include "axonad/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace axonad {

enum class AnomalyKind { flatline, drift, level_shift, spike, variance_jump, correlation_break };

inline constexpr AnomalyKind kAllAnomalyKinds[] = {
    AnomalyKind::flatline,  AnomalyKind::drift,         AnomalyKind::level_shift,
    AnomalyKind::spike,     AnomalyKind::variance_jump, AnomalyKind::correlation_break};

std::string_view to_string(AnomalyKind k);
AnomalyKind parse_anomaly_kind(std::string_view s);

/// [start, end) over absolute timesteps.
struct AnomalyInterval {
    std::int64_t start = 0;
    std::int64_t end = 0;
    AnomalyKind kind = AnomalyKind::spike;
    std::vector<int> channels;
    friend bool operator==(const AnomalyInterval&, const AnomalyInterval&) = default;
};

struct SeriesFrame {
    Mat values;  // N x F
    std::vector<std::string> channel_names;
    std::optional<std::vector<std::uint8_t>> labels;
    std::vector<AnomalyInterval> intervals;

    std::size_t length() const { return std::size_t(values.rows()); }
    std::size_t channels() const { return std::size_t(values.cols()); }
};

/// Per-timestep labels from intervals (1 inside any interval).
std::vector<std::uint8_t> labels_from_intervals(std::span<const AnomalyInterval> intervals,
                                                std::size_t length);

/// Maximal runs of 1 in a label vector, as [start, end) pairs.
std::vector<std::pair<std::int64_t, std::int64_t>> label_runs(std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// CSV: header row of channel names, optional trailing `label` column.
// Values are written with 9 significant digits.
// ---------------------------------------------------------------------------

struct CsvLoadOptions {
    bool read_labels = true;  // false: the label column is skipped unparsed
};

SeriesFrame load_csv(const std::filesystem::path& path, CsvLoadOptions opts = {});
SeriesFrame parse_csv(std::string_view text, CsvLoadOptions opts = {});
void save_csv(const SeriesFrame& frame, const std::filesystem::path& path);
std::string format_csv(const SeriesFrame& frame);

/// Formats a double with 9 significant digits (%.9g).
std::string format_g9(double v);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splits and windows
// ---------------------------------------------------------------------------

/// train_sub = [0, val_start), val = [val_start, train_end), test = [test_start, N).
struct SplitSpec {
    std::int64_t val_start = 0;
    std::int64_t train_end = 0;
    std::int64_t test_start = 0;
    friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Chronological split. Rejects any labeled interval that starts before the
/// train/test boundary.
SplitSpec chrono_split(std::size_t length, std::span<const AnomalyInterval> intervals = {},
                       double train_fraction = 0.5, double val_fraction_of_train = 0.2);
SplitSpec chrono_split(const SeriesFrame& frame, double train_fraction = 0.5,
                       double val_fraction_of_train = 0.2);

struct Normalizer {
    RowVec mean;
    RowVec std;  // floored at 1e-8

    Mat apply(const Mat& values) const;
};

/// Per-channel mean / population std over rows [0, train_end) only. The
/// caller passes just that segment so later rows are never visible.
Normalizer fit_normalizer(const Mat& train_segment);
Normalizer fit_normalizer(const SeriesFrame& frame, const SplitSpec& split);

/// Stride-s windows over a value matrix, ending at T-1, T-1+s, ... The
/// sequence references `values`, which must outlive it.
class WindowSequence {
public:
    WindowSequence(const Mat& values, int window, int stride = 1, std::int64_t index_offset = 0);

    std::size_t size() const noexcept { return count_; }
    int window() const noexcept { return window_; }
    /// Absolute end index of window i (includes the index offset of the
    /// segment the sequence was built over).
    std::int64_t end_index(std::size_t i) const {
        return offset_ + std::int64_t(window_ - 1) + std::int64_t(i) * stride_;
    }
    Mat operator[](std::size_t i) const {
        return values_->middleRows(Eigen::Index(i) * stride_, window_);
    }

private:
    const Mat* values_;
    int window_;
    int stride_;
    std::int64_t offset_;
    std::size_t count_;
};

WindowSequence make_windows(const Mat& values, int window, int stride = 1);

}  // namespace axonad

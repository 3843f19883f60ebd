#include "axonad/data.hpp"

#include "axonad/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace axonad {

std::string_view to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::flatline: return "flatline";
        case AnomalyKind::drift: return "drift";
        case AnomalyKind::level_shift: return "level_shift";
        case AnomalyKind::spike: return "spike";
        case AnomalyKind::variance_jump: return "variance_jump";
        case AnomalyKind::correlation_break: return "correlation_break";
    }
    return "spike";
}

AnomalyKind parse_anomaly_kind(std::string_view s) {
    for (auto k : kAllAnomalyKinds)
        if (to_string(k) == s) return k;
    fail(ErrorCode::config, "unknown anomaly kind '" + std::string(s) + "'");
}

std::vector<std::uint8_t> labels_from_intervals(std::span<const AnomalyInterval> intervals,
                                                std::size_t length) {
    std::vector<std::uint8_t> labels(length, 0);
    for (const auto& iv : intervals) {
        require(iv.start >= 0 && iv.start < iv.end && iv.end <= std::int64_t(length), ErrorCode::config,
                "anomaly interval [" + std::to_string(iv.start) + "," + std::to_string(iv.end) +
                    ") is outside the series");
        for (auto t = iv.start; t < iv.end; ++t) labels[std::size_t(t)] = 1;
    }
    return labels;
}

std::vector<std::pair<std::int64_t, std::int64_t>> label_runs(std::span<const std::uint8_t> labels) {
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    const auto n = std::int64_t(labels.size());
    for (std::int64_t t = 0; t < n;) {
        if (!labels[std::size_t(t)]) {
            ++t;
            continue;
        }
        std::int64_t e = t;
        while (e < n && labels[std::size_t(e)]) ++e;
        runs.emplace_back(t, e);
        t = e;
    }
    return runs;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

/// Splits one CSV record honoring double-quoted fields.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    require(!quoted, ErrorCode::parse, "unterminated quoted field on line " + std::to_string(line_no));
    fields.push_back(std::move(cur));
    return fields;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// 1-based (data row, column) as printed in error messages.
std::string cell(std::size_t row, std::size_t col) {
    return "(" + std::to_string(row + 1) + "," + std::to_string(col + 1) + ")";
}

}  // namespace

SeriesFrame parse_csv(std::string_view text, CsvLoadOptions opts) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos < text.size();) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    require(!lines.empty() && !lines.front().empty(), ErrorCode::parse, "missing CSV header row");

    auto header = split_record(lines.front(), 1);
    const bool has_label = header.back() == "label";
    SeriesFrame frame;
    frame.channel_names.assign(header.begin(), header.end() - (has_label ? 1 : 0));
    const std::size_t n_ch = frame.channel_names.size();
    require(n_ch >= 1, ErrorCode::parse, "CSV header has no value columns");
    const std::size_t n_rows = lines.size() - 1;
    frame.values.resize(Eigen::Index(n_rows), Eigen::Index(n_ch));
    std::vector<std::uint8_t> labels;
    if (has_label && opts.read_labels) labels.resize(n_rows);

    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto fields = split_record(lines[r + 1], r + 2);
        require(fields.size() == header.size(), ErrorCode::parse,
                "ragged row: data row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                    " fields, header has " + std::to_string(header.size()));
        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto& f = fields[c];
            double v = 0.0;
            const auto* begin = f.data();
            const auto* end = f.data() + f.size();
            auto [ptr, ec] = std::from_chars(begin, end, v);
            require(ec == std::errc() && ptr == end && !f.empty(), ErrorCode::parse,
                    "non-numeric cell " + cell(r, c) + ": '" + f + "'");
            require(std::isfinite(v), ErrorCode::parse, "non-finite value at cell " + cell(r, c));
            frame.values(Eigen::Index(r), Eigen::Index(c)) = v;
        }
        if (has_label && opts.read_labels) {
            const auto& f = fields.back();
            require(f == "0" || f == "1", ErrorCode::parse,
                    "label at cell " + cell(r, n_ch) + " must be 0 or 1, got '" + f + "'");
            labels[r] = f == "1" ? 1 : 0;
        }
    }
    if (has_label && opts.read_labels) frame.labels = std::move(labels);
    return frame;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SeriesFrame load_csv(const std::filesystem::path& path, CsvLoadOptions opts) {
    return parse_csv(read_file(path), opts);
}

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string format_csv(const SeriesFrame& frame) {
    require(frame.channel_names.size() == frame.channels(), ErrorCode::shape,
            "channel name count does not match the value matrix");
    const bool has_label = frame.labels.has_value();
    if (has_label)
        require(frame.labels->size() == frame.length(), ErrorCode::shape, "label length mismatch");
    std::string out;
    out.reserve(frame.length() * frame.channels() * 14 + 64);
    for (std::size_t c = 0; c < frame.channels(); ++c) {
        if (c) out += ',';
        out += quote_field(frame.channel_names[c]);
    }
    if (has_label) out += ",label";
    out += '\n';
    for (std::size_t r = 0; r < frame.length(); ++r) {
        for (std::size_t c = 0; c < frame.channels(); ++c) {
            if (c) out += ',';
            out += format_g9(frame.values(Eigen::Index(r), Eigen::Index(c)));
        }
        if (has_label) out += (*frame.labels)[r] ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(bool(out), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
        out.write(contents.data(), std::streamsize(contents.size()));
        require(bool(out), ErrorCode::io, "failed writing '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorCode::io, "cannot move temporary file onto '" + path.string() + "': " + ec.message());
}

void save_csv(const SeriesFrame& frame, const std::filesystem::path& path) {
    write_file_atomic(path, format_csv(frame));
}

// ---------------------------------------------------------------------------
// Splits, normalization, windows
// ---------------------------------------------------------------------------

SplitSpec chrono_split(std::size_t length, std::span<const AnomalyInterval> intervals,
                       double train_fraction, double val_fraction_of_train) {
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::config,
            "split.train_fraction must be in (0,1)");
    require(val_fraction_of_train > 0.0 && val_fraction_of_train < 1.0, ErrorCode::config,
            "split.val_fraction must be in (0,1)");
    const auto n = std::int64_t(length);
    SplitSpec s;
    s.train_end = std::int64_t(std::floor(train_fraction * double(n) + 1e-9));
    s.val_start = s.train_end - std::int64_t(std::floor(val_fraction_of_train * double(s.train_end) + 1e-9));
    s.test_start = s.train_end;
    require(s.val_start > 0 && s.val_start < s.train_end && s.train_end <= s.test_start && s.test_start < n,
            ErrorCode::config, "series of length " + std::to_string(n) + " is too short to split");
    for (const auto& iv : intervals)
        require(iv.start >= s.train_end, ErrorCode::hygiene,
                "labeled interval [" + std::to_string(iv.start) + "," + std::to_string(iv.end) +
                    ") lies inside the nominal training prefix [0," + std::to_string(s.train_end) + ")");
    return s;
}

SplitSpec chrono_split(const SeriesFrame& frame, double train_fraction, double val_fraction_of_train) {
    std::vector<AnomalyInterval> ivs = frame.intervals;
    if (ivs.empty() && frame.labels)
        for (auto [a, b] : label_runs(*frame.labels)) ivs.push_back({a, b, AnomalyKind::spike, {}});
    return chrono_split(frame.length(), ivs, train_fraction, val_fraction_of_train);
}

Mat Normalizer::apply(const Mat& values) const {
    require(values.cols() == mean.size(), ErrorCode::shape, "normalizer channel count mismatch");
    return (values.rowwise() - mean).array().rowwise() / std.array();
}

Normalizer fit_normalizer(const Mat& train_segment) {
    require(train_segment.rows() >= 1, ErrorCode::shape, "normalizer needs at least one row");
    Normalizer n;
    n.mean = train_segment.colwise().mean();
    n.std = ((train_segment.rowwise() - n.mean).array().square().colwise().mean()).sqrt().matrix();
    n.std = n.std.cwiseMax(1e-8);
    return n;
}

Normalizer fit_normalizer(const SeriesFrame& frame, const SplitSpec& split) {
    require(split.train_end > 0 && split.train_end <= std::int64_t(frame.length()), ErrorCode::config,
            "split train_end outside the series");
    return fit_normalizer(Mat(frame.values.topRows(Eigen::Index(split.train_end))));
}

WindowSequence::WindowSequence(const Mat& values, int window, int stride, std::int64_t index_offset)
    : values_(&values), window_(window), stride_(stride), offset_(index_offset) {
    require(window >= 1 && stride >= 1, ErrorCode::config, "window and stride must be >= 1");
    require(values.rows() >= window, ErrorCode::shape,
            "series length " + std::to_string(values.rows()) + " is shorter than the window " +
                std::to_string(window));
    count_ = std::size_t((values.rows() - window) / stride + 1);
}

WindowSequence make_windows(const Mat& values, int window, int stride) {
    return WindowSequence(values, window, stride);
}

}  // namespace axonad

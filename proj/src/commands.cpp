#include "axonad/commands.hpp"

#include "axonad/error.hpp"
#include "axonad/parallel.hpp"
#include "axonad/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace axonad {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const MetricReport& r) {
    return json{{"auc_roc", r.auc_roc},           {"auc_pr", r.auc_pr},
                {"pa_f1", r.pa_f1},               {"event_f1", r.event_f1},
                {"range_f1", r.range_f1},         {"pa_threshold", r.pa_threshold},
                {"event_threshold", r.event_threshold}, {"range_threshold", r.range_threshold}};
}

std::vector<std::pair<std::string, double>> metric_values(const MetricReport& r) {
    return {{"auc_roc", r.auc_roc}, {"auc_pr", r.auc_pr}, {"pa_f1", r.pa_f1},
            {"event_f1", r.event_f1}, {"range_f1", r.range_f1}};
}

std::filesystem::path sidecar(const std::filesystem::path& p, const char* suffix) {
    return std::filesystem::path(p.string() + suffix);
}

SeriesFrame load_values(const std::filesystem::path& path) {
    return load_csv(path, CsvLoadOptions{.read_labels = false});
}

void check_channels(const Checkpoint& ckpt, const Mat& values) {
    require(values.cols() == ckpt.config.model.channels, ErrorCode::shape,
            "data has " + std::to_string(values.cols()) + " channels, checkpoint expects " +
                std::to_string(ckpt.config.model.channels));
}

std::vector<std::uint8_t> require_labels(const SeriesFrame& f, const std::filesystem::path& path) {
    require(f.labels.has_value(), ErrorCode::parse, "'" + path.string() + "' has no label column");
    return *f.labels;
}

}  // namespace

TrainOutcome train_detector(const Mat& values, RunConfig cfg, const EpochCallback& on_epoch) {
    cfg.model.channels = int(values.cols());
    cfg.validate();
    const auto& mc = cfg.model;
    const SplitSpec split =
        chrono_split(std::size_t(values.rows()), {}, cfg.split.train_fraction, cfg.split.val_fraction);

    const Mat train_segment = values.topRows(Eigen::Index(split.train_end));
    Normalizer normalizer = fit_normalizer(train_segment);
    const Mat normalized = normalizer.apply(train_segment);
    const Mat train_sub = normalized.topRows(Eigen::Index(split.val_start));
    const Mat val = normalized.bottomRows(Eigen::Index(split.train_end - split.val_start));
    require(train_sub.rows() >= mc.window && val.rows() >= mc.window, ErrorCode::config,
            "train_sub and val segments must each hold at least one window of length " +
                std::to_string(mc.window));
    const WindowSequence train_windows(train_sub, mc.window, 1, 0);
    const WindowSequence val_windows(val, mc.window, 1, split.val_start);

    FitResult fitted = fit(train_windows, val_windows, initial_model(mc, cfg.seed), cfg.train_config(), on_epoch);
    Model model = std::move(fitted.model);
    round_to_float32(model);
    const Calibration cal = calibrate(score_windows(model, train_windows), mc.eps_rz);
    return TrainOutcome{Checkpoint{std::move(cfg), std::move(model), cal, std::move(normalizer), split},
                        std::move(fitted.history), fitted.best_epoch, fitted.fit_seconds};
}

std::vector<ComponentScores> score_series(const Checkpoint& ckpt, const Mat& values) {
    check_channels(ckpt, values);
    const Mat normalized = ckpt.normalizer.apply(values);
    return score_windows(ckpt.model, WindowSequence(normalized, ckpt.config.model.window));
}

std::vector<ScoreRecord> score_records(const std::vector<ComponentScores>& scores, int window,
                                       const Calibration& cal, ScoreMode mode) {
    std::vector<ScoreRecord> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        out.push_back(make_record(std::int64_t(window - 1) + std::int64_t(i), scores[i], cal, mode));
    return out;
}

MetricReport evaluate_range(std::span<const double> scores, std::span<const std::uint8_t> labels,
                            std::size_t from) {
    require(scores.size() == labels.size(), ErrorCode::shape,
            "score series has " + std::to_string(scores.size()) + " rows, labels have " +
                std::to_string(labels.size()));
    require(from < scores.size(), ErrorCode::config, "evaluation start is past the end of the series");
    return evaluate_scores(scores.subspan(from), labels.subspan(from));
}

BenchReport bench_latency(const Model& m, const WindowSequence& windows, std::size_t warmup,
                          std::size_t min_windows, std::optional<std::size_t> max_windows) {
    using clock = std::chrono::steady_clock;
    require(windows.size() >= warmup + min_windows, ErrorCode::config,
            "bench needs at least " + std::to_string(warmup + min_windows) + " windows, data has " +
                std::to_string(windows.size()));
    std::size_t timed = windows.size() - warmup;
    if (max_windows) {
        require(*max_windows >= min_windows, ErrorCode::config,
                "bench needs at least " + std::to_string(min_windows) + " timed windows");
        timed = std::min(timed, *max_windows);
    }
    const Scorer scorer(m);
    volatile double sink = 0.0;
    for (std::size_t i = 0; i < warmup; ++i) sink = sink + scorer.score(windows[i]).d_rec;

    std::vector<double> ms(timed);
    const auto wall_start = clock::now();
    for (std::size_t i = 0; i < timed; ++i) {
        const Mat x = windows[warmup + i];
        const auto t0 = clock::now();
        const ComponentScores c = scorer.score(x);
        const auto t1 = clock::now();
        sink = sink + c.d_rec;
        ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    BenchReport r;
    r.wall_seconds = std::chrono::duration<double>(clock::now() - wall_start).count();
    r.windows = timed;
    r.warmup = warmup;
    double total = 0.0;
    for (double v : ms) total += v;
    r.score_seconds_total = total / 1000.0;
    r.latency_mean_ms = total / double(timed);
    r.latency_median_ms = stats::quantile(ms, 0.5);
    r.latency_p99_ms = stats::quantile(ms, 0.99);
    return r;
}

// ---------------------------------------------------------------------------

void cmd_synth(const SynthOptions& opt) {
    require(!opt.out.empty(), ErrorCode::usage, "--out is required");
    if (!opt.force && std::filesystem::exists(opt.out))
        fail(ErrorCode::io, "'" + opt.out.string() + "' exists; pass --force to overwrite");
    RunConfig cfg = load_run_config(opt.config);
    if (opt.seed) cfg.generator.seed = *opt.seed;
    const SeriesFrame frame = generate_synthetic(cfg.generator);

    json intervals = json::array();
    for (const auto& iv : frame.intervals)
        intervals.push_back({{"start", iv.start},
                             {"end", iv.end},
                             {"kind", std::string(to_string(iv.kind))},
                             {"channels", iv.channels}});
    const json meta{{"generator", to_json(cfg)["generator"]},
                    {"length", frame.length()},
                    {"test_start", chrono_split(frame, cfg.split.train_fraction, cfg.split.val_fraction).test_start},
                    {"intervals", intervals}};
    save_csv(frame, opt.out);
    write_file_atomic(sidecar(opt.out, ".intervals.json"), meta.dump(2) + "\n");
}

TrainOutcome cmd_train(const TrainOptions& opt) {
    RunConfig cfg = load_run_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    const SeriesFrame frame = load_values(opt.data);
    EpochCallback log;
    if (opt.verbose) {
        log = [](const EpochRecord& e) {
            std::fprintf(stderr, "epoch %d  train %.6g (rec %.6g, jepa %.6g)  val_rec %.6g  %.1fs\n", e.epoch,
                         e.train_total, e.train_rec, e.train_jepa, e.val_rec, e.seconds);
        };
    }
    TrainOutcome out = train_detector(frame.values, std::move(cfg), log);
    save_checkpoint(out.checkpoint, opt.checkpoint);

    json history = json::array();
    for (const auto& e : out.history)
        history.push_back({{"epoch", e.epoch},
                           {"train_total", e.train_total},
                           {"train_rec", e.train_rec},
                           {"train_jepa", e.train_jepa},
                           {"val_rec", e.val_rec},
                           {"s_rec", e.s_rec},
                           {"s_q", e.s_q},
                           {"seconds", e.seconds}});
    const json meta{{"fit_seconds", out.fit_seconds}, {"best_epoch", out.best_epoch}, {"history", history}};
    write_file_atomic(sidecar(opt.checkpoint, ".train.json"), meta.dump(2) + "\n");
    return out;
}

void cmd_score(const ScoreOptions& opt) {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    const SeriesFrame frame = load_values(opt.data);
    const ScoreMode mode = opt.mode.value_or(ckpt.config.score.mode);
    const AlignmentMode align = opt.align.value_or(ckpt.config.score.align);
    const int T = ckpt.config.model.window;

    const auto records = score_records(score_series(ckpt, frame.values), T, ckpt.calibration, mode);
    const AlignedScores aligned = align_scores(records, align, T, frame.length());

    std::string out = "index,d_rec,d_q,score\n";
    out.reserve(frame.length() * 48);
    for (std::size_t i = 0; i < frame.length(); ++i) {
        out += std::to_string(i);
        for (double v : {aligned.d_rec[i], aligned.d_q[i], aligned.score[i]}) {
            out += ',';
            out += format_g9(v);
        }
        out += '\n';
    }
    write_file_atomic(opt.out, out);
}

MetricReport cmd_eval(const EvalOptions& opt) {
    const SeriesFrame scores = load_values(opt.scores);
    const auto& names = scores.channel_names;
    const auto col = std::find(names.begin(), names.end(), "score");
    require(col != names.end(), ErrorCode::parse, "'" + opt.scores.string() + "' has no score column");
    const Eigen::Index c = Eigen::Index(col - names.begin());
    std::vector<double> s(scores.length());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = scores.values(Eigen::Index(i), c);

    const SeriesFrame labels_frame = load_csv(opt.labels);
    const auto labels = require_labels(labels_frame, opt.labels);
    const MetricReport r = evaluate_range(s, labels, opt.from);

    if (!opt.report.empty()) {
        if (opt.report.extension() == ".json") {
            json j = metrics_json(r);
            j["from"] = opt.from;
            j["timesteps"] = s.size() - opt.from;
            write_file_atomic(opt.report, j.dump(2) + "\n");
        } else {
            const std::string series = opt.scores.stem().string();
            const std::map<std::string, double> thresholds{
                {"pa_f1", r.pa_threshold}, {"event_f1", r.event_threshold}, {"range_f1", r.range_threshold}};
            std::string out = "series,metric,value,threshold\n";
            for (const auto& [name, value] : metric_values(r)) {
                const auto t = thresholds.find(name);
                out += series + "," + name + "," + format_g9(value) + "," +
                       (t == thresholds.end() ? std::string() : format_g9(t->second)) + "\n";
            }
            write_file_atomic(opt.report, out);
        }
    }
    return r;
}

DiagnosticsReport cmd_diagnose(const DiagnoseOptions& opt) {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    const SeriesFrame frame = load_csv(opt.data);
    const int T = ckpt.config.model.window;
    auto scores = score_series(ckpt, frame.values);

    std::size_t first = 0;
    if (opt.test_only) {
        const auto lead = ckpt.split.test_start - (T - 1);
        first = std::size_t(std::clamp<std::int64_t>(lead, 0, std::int64_t(scores.size())));
    }
    scores.erase(scores.begin(), scores.begin() + std::ptrdiff_t(first));
    std::vector<std::uint8_t> window_labels;
    if (frame.labels) {
        for (std::size_t i = 0; i < scores.size(); ++i)
            window_labels.push_back((*frame.labels)[first + i + std::size_t(T - 1)]);
    }
    const DiagnosticsReport d = diagnostics_report(scores, ckpt.calibration, T, window_labels);
    if (!opt.report.empty()) {
        const json j{{"windows", d.windows},
                     {"first_window_end", first + std::size_t(T - 1)},
                     {"spearman_dq_norm_vs_tail_kl", optional_json(d.spearman_dq_kl)},
                     {"spearman_d_rec_vs_d_q", optional_json(d.spearman_rec_q)},
                     {"tail_entropy", {{"min", d.entropy_min}, {"median", d.entropy_median}, {"max", d.entropy_max},
                                       {"upper_bound_ln_T", d.entropy_upper_bound}}},
                     {"quadrants",
                      {{"population", d.quadrant_population},
                       {"windows", d.quadrant_windows},
                       {"thresholds", "training medians of d_rec and d_q"},
                       {"high_q_low_rec", d.frac_high_q_low_rec},
                       {"high_rec_low_q", d.frac_high_rec_low_q},
                       {"both_high", d.frac_both_high},
                       {"both_low", d.frac_both_low}}},
                     {"dq_norm_definition", d.dq_norm_definition}};
        write_file_atomic(opt.report, j.dump(2) + "\n");
    }
    return d;
}

BenchReport cmd_bench(const BenchOptions& opt) {
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    const SeriesFrame frame = load_values(opt.data);
    check_channels(ckpt, frame.values);
    const Mat normalized = ckpt.normalizer.apply(frame.values);
    const WindowSequence windows(normalized, ckpt.config.model.window);
    BenchReport r = bench_latency(ckpt.model, windows, opt.warmup, 10000, opt.windows);

    const auto train_meta = sidecar(opt.checkpoint, ".train.json");
    if (std::filesystem::exists(train_meta)) {
        try {
            r.fit_seconds = json::parse(read_file(train_meta)).at("fit_seconds").get<double>();
        } catch (const json::exception&) {
            fail(ErrorCode::parse, "'" + train_meta.string() + "' has no numeric fit_seconds");
        }
    }
    if (!opt.report.empty()) {
        const json j{{"fit_seconds", optional_json(r.fit_seconds)},
                     {"score_seconds_total", r.score_seconds_total},
                     {"wall_seconds", r.wall_seconds},
                     {"windows", r.windows},
                     {"warmup", r.warmup},
                     {"threads", 1},
                     {"per_window_latency_ms",
                      {{"median", r.latency_median_ms}, {"p99", r.latency_p99_ms}, {"mean", r.latency_mean_ms}}}};
        write_file_atomic(opt.report, j.dump(2) + "\n");
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Variant {
    std::string name;
    json settings = json::object();
    RunConfig config;
};

std::vector<Variant> expand_grid(const RunConfig& base, const json& grid, std::vector<std::uint64_t>& seeds) {
    require(grid.is_object(), ErrorCode::config, "grid must be a JSON object of key -> list");
    seeds.clear();
    std::vector<std::pair<std::string, json>> axes;
    for (const auto& [key, values] : grid.items()) {
        if (key == "seeds") {
            require(values.is_array() && !values.empty(), ErrorCode::config, "grid key 'seeds': expected a non-empty list");
            for (const auto& s : values) {
                require(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0),
                        ErrorCode::config, "grid key 'seeds': expected non-negative integers");
                seeds.push_back(s.get<std::uint64_t>());
            }
            continue;
        }
        require(values.is_array() && !values.empty(), ErrorCode::config,
                "grid key '" + key + "': expected a non-empty list");
        axes.emplace_back(key, values);
    }
    if (seeds.empty()) seeds.push_back(base.seed);

    std::vector<Variant> out{Variant{"", json::object(), base}};
    for (const auto& [key, values] : axes) {
        std::vector<Variant> next;
        for (const auto& v : out) {
            for (const auto& value : values) {
                Variant w = v;
                apply_override(w.config, key, value);
                w.settings[key] = value;
                const std::string part = key + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
                w.name = w.name.empty() ? part : w.name + ";" + part;
                next.push_back(std::move(w));
            }
        }
        out = std::move(next);
    }
    for (auto& v : out) {
        if (v.name.empty()) v.name = "base";
        try {
            RunConfig check = v.config;
            check.model.channels = std::max(1, check.model.channels);
            check.validate();
        } catch (const Error& e) {
            fail(ErrorCode::config, "grid variant '" + v.name + "' is invalid: " + e.what());
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

std::vector<AblationRow> cmd_ablate(const AblateOptions& opt) {
    const RunConfig base = load_run_config(opt.config);
    json grid;
    try {
        grid = json::parse(read_file(opt.grid));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, "grid '" + opt.grid.string() + "' is not valid JSON: " + e.what());
    }
    std::vector<std::uint64_t> seeds;
    const auto variants = expand_grid(base, grid, seeds);

    const SeriesFrame frame = load_csv(opt.data);
    const auto labels = require_labels(frame, opt.data);

    // Trained models are shared between variants that differ only in scoring.
    std::map<std::string, Checkpoint> trained;
    std::map<std::string, std::vector<ComponentScores>> scored;
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        for (const auto seed : seeds) {
            RunConfig cfg = v.config;
            cfg.seed = seed;
            json key = to_json(cfg);
            key.erase("score");
            key["model"].erase("channels");
            const std::string k = key.dump();
            if (!trained.contains(k)) {
                if (opt.verbose) std::fprintf(stderr, "training %s seed %llu\n", v.name.c_str(), (unsigned long long)seed);
                TrainOutcome t = train_detector(frame.values, cfg);
                scored.emplace(k, score_series(t.checkpoint, frame.values));
                trained.emplace(k, std::move(t.checkpoint));
            }
            const Checkpoint& ckpt = trained.at(k);
            const int T = ckpt.config.model.window;
            const auto records = score_records(scored.at(k), T, ckpt.calibration, cfg.score.mode);
            const AlignedScores aligned = align_scores(records, cfg.score.align, T, frame.length());
            rows.push_back(AblationRow{v.name, v.settings, seed,
                                       evaluate_range(aligned.score, labels, std::size_t(ckpt.split.test_start))});
        }
    }

    if (!opt.report.empty()) {
        std::string out = "variant,seed,metric,value\n";
        for (const auto& r : rows)
            for (const auto& [name, value] : metric_values(r.metrics))
                out += csv_field(r.variant) + "," + std::to_string(r.seed) + "," + name + "," + format_g9(value) + "\n";
        write_file_atomic(opt.report, out);

        if (seeds.size() >= 5 && variants.size() >= 2) {
            const std::size_t n_seeds = seeds.size();
            json paired = json::array();
            for (std::size_t v = 1; v < variants.size(); ++v) {
                for (const auto& [metric, _] : metric_values(MetricReport{})) {
                    std::vector<double> a, b;
                    for (std::size_t s = 0; s < n_seeds; ++s) {
                        const auto find = [&](const MetricReport& m) {
                            for (const auto& [n, val] : metric_values(m))
                                if (n == metric) return val;
                            return 0.0;
                        };
                        a.push_back(find(rows[v * n_seeds + s].metrics));
                        b.push_back(find(rows[s].metrics));
                    }
                    const PairedComparison p = paired_compare(a, b);
                    paired.push_back({{"variant", variants[v].name},
                                      {"baseline", variants[0].name},
                                      {"metric", metric},
                                      {"n", p.n},
                                      {"win_rate", p.win_rate},
                                      {"loss_rate", p.loss_rate},
                                      {"mean_delta", p.mean_delta},
                                      {"median_delta", p.median_delta},
                                      {"p_value", p.p_value},
                                      {"exact", p.exact},
                                      {"ci95", {p.ci_low, p.ci_high}}});
                }
            }
            write_file_atomic(sidecar(opt.report, ".paired.json"), paired.dump(2) + "\n");
        }
    }
    return rows;
}

}  // namespace axonad

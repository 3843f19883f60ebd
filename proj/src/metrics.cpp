#include "axonad/metrics.hpp"

#include "axonad/data.hpp"
#include "axonad/error.hpp"
#include "axonad/rng.hpp"
#include "axonad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace axonad {

namespace {

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    require(scores.size() == labels.size(), ErrorCode::shape, "scores and labels differ in length");
    require(scores.size() >= 2, ErrorCode::metric, "metrics need at least 2 points");
    for (double s : scores) require(std::isfinite(s), ErrorCode::numeric, "non-finite score");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
    std::size_t pos = 0;
    for (auto l : labels) pos += l ? 1 : 0;
    return {pos, labels.size() - pos};
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    require(pos > 0 && neg > 0, ErrorCode::metric, "AUC-ROC is undefined for single-class labels");
    const auto ranks = stats::average_ranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i]) rank_sum += ranks[i];
    const double u = rank_sum - double(pos) * double(pos + 1) / 2.0;
    return u / (double(pos) * double(neg));
}

double auc_pr(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    require(pos > 0, ErrorCode::metric, "AUC-PR is undefined without positives");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp) += 1.0;
            ++j;
        }
        const double recall = tp / double(pos);
        const double precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred,
                                       std::span<const Interval> intervals) {
    std::vector<std::uint8_t> out(pred.begin(), pred.end());
    for (auto [a, b] : intervals) {
        require(a >= 0 && a < b && b <= std::int64_t(pred.size()), ErrorCode::config,
                "point-adjust interval outside the series");
        bool hit = false;
        for (auto t = a; t < b && !hit; ++t) hit = pred[std::size_t(t)] != 0;
        if (hit)
            for (auto t = a; t < b; ++t) out[std::size_t(t)] = 1;
    }
    return out;
}

std::string_view to_string(F1Variant v) {
    switch (v) {
        case F1Variant::pa: return "pa_f1";
        case F1Variant::event: return "event_f1";
        case F1Variant::range: return "range_f1";
    }
    return "pa_f1";
}

F1Score f1_for_prediction(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels,
                          std::span<const Interval> intervals, F1Variant variant) {
    F1Score out;
    switch (variant) {
        case F1Variant::pa: {
            const auto adj = point_adjust(pred, intervals);
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < adj.size(); ++i) {
                if (adj[i] && labels[i]) ++tp;
                else if (adj[i]) ++fp;
                else if (labels[i]) ++fn;
            }
            out.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
            out.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
            break;
        }
        case F1Variant::event: {
            const auto segments = label_runs(pred);
            double tp = 0, fn = 0, fp = 0;
            for (auto [a, b] : intervals) {
                bool hit = false;
                for (auto t = a; t < b && !hit; ++t) hit = pred[std::size_t(t)] != 0;
                (hit ? tp : fn) += 1;
            }
            for (auto [a, b] : segments) {
                bool inside = false;
                for (auto t = a; t < b && !inside; ++t) inside = labels[std::size_t(t)] != 0;
                if (!inside) fp += 1;
            }
            out.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
            out.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
            break;
        }
        case F1Variant::range: {
            const auto segments = label_runs(pred);
            double rec = 0.0, prec = 0.0;
            for (auto [a, b] : intervals) {
                std::int64_t hit = 0;
                for (auto t = a; t < b; ++t) hit += pred[std::size_t(t)] ? 1 : 0;
                rec += double(hit) / double(b - a);
            }
            for (auto [a, b] : segments) {
                std::int64_t in = 0;
                for (auto t = a; t < b; ++t) in += labels[std::size_t(t)] ? 1 : 0;
                prec += double(in) / double(b - a);
            }
            out.recall = intervals.empty() ? 0.0 : rec / double(intervals.size());
            out.precision = segments.empty() ? 0.0 : prec / double(segments.size());
            break;
        }
    }
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(768);
    const double n1 = double(sorted.size() - 1);
    for (int i = 0; i < 256; ++i) {
        const double pos = double(i) / 255.0 * n1;
        const auto lo = std::size_t(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        out.push_back(sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]));
    }
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 512) out.insert(out.end(), distinct.begin(), distinct.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SweepResult f1_sweep(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     F1Variant variant) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    require(pos > 0 && neg > 0, ErrorCode::metric, "F1 sweep needs both classes");
    const auto runs = label_runs(labels);
    SweepResult best{-1.0, 0.0};
    std::vector<std::uint8_t> pred(scores.size());
    for (double th : candidate_thresholds(scores)) {
        for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= th ? 1 : 0;
        const double f1 = f1_for_prediction(pred, labels, runs, variant).f1;
        if (f1 > best.best_f1) best = {f1, th};
    }
    return best;
}

MetricReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    MetricReport r;
    r.auc_roc = auc_roc(scores, labels);
    r.auc_pr = auc_pr(scores, labels);
    auto pa = f1_sweep(scores, labels, F1Variant::pa);
    auto ev = f1_sweep(scores, labels, F1Variant::event);
    auto rg = f1_sweep(scores, labels, F1Variant::range);
    r.pa_f1 = pa.best_f1;
    r.pa_threshold = pa.best_threshold;
    r.event_f1 = ev.best_f1;
    r.event_threshold = ev.best_threshold;
    r.range_f1 = rg.best_f1;
    r.range_threshold = rg.best_threshold;
    return r;
}

double wilcoxon_signed_rank_p(std::span<const double> diffs, bool* exact) {
    std::vector<double> nz;
    for (double d : diffs)
        if (d != 0.0) nz.push_back(d);
    const std::size_t n = nz.size();
    if (exact) *exact = n <= 25;
    if (n == 0) return 1.0;
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(nz[i]);
    const auto ranks = stats::average_ranks(abs_d);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (nz[i] > 0) w_plus += ranks[i];

    if (n <= 25) {
        // Doubled ranks are integers even with ties; enumerate the null
        // distribution of 2 * W+ over all 2^n sign assignments.
        std::vector<long> r2(n);
        long total = 0;
        for (std::size_t i = 0; i < n; ++i) total += r2[i] = std::lround(2.0 * ranks[i]);
        std::vector<double> dist(std::size_t(total) + 1, 0.0);
        dist[0] = 1.0;
        long reach = 0;
        for (long r : r2) {
            for (long s = reach; s >= 0; --s) dist[std::size_t(s + r)] += dist[std::size_t(s)];
            reach += r;
        }
        const double all = std::ldexp(1.0, int(n));
        const long w2 = std::lround(2.0 * w_plus);
        double lower = 0.0, upper = 0.0;
        for (long s = 0; s <= total; ++s) {
            if (s <= w2) lower += dist[std::size_t(s)];
            if (s >= w2) upper += dist[std::size_t(s)];
        }
        return std::min(1.0, 2.0 * std::min(lower, upper) / all);
    }

    const double nn = double(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = double(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

PairedComparison paired_compare(std::span<const double> a, std::span<const double> b,
                                std::uint64_t seed, int resamples) {
    require(a.size() == b.size(), ErrorCode::shape, "paired comparison needs equal-length vectors");
    require(a.size() >= 5, ErrorCode::metric, "paired comparison needs at least 5 series");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

    PairedComparison out;
    out.n = n;
    for (double x : d) {
        if (x > 0) out.win_rate += 1.0;
        if (x < 0) out.loss_rate += 1.0;
        if (x != 0) ++out.nonzero;
    }
    out.win_rate /= double(n);
    out.loss_rate /= double(n);
    out.mean_delta = stats::mean(d);
    out.median_delta = stats::median(d);
    out.p_value = wilcoxon_signed_rank_p(d, &out.exact);
    if (out.nonzero == 0) {
        out.ci_low = out.ci_high = 0.0;
        return out;
    }
    Rng rng(substream_seed(seed, {0xB007}));
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += d[std::size_t(uniform_int(rng, 0, std::int64_t(n) - 1))];
        m = acc / double(n);
    }
    out.ci_low = stats::quantile(means, 0.025);
    out.ci_high = stats::quantile(means, 0.975);
    return out;
}

}  // namespace axonad

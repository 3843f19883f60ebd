#include "axonad/metrics.hpp"
#include "axonad/data.hpp"
#include "axonad/rng.hpp"
#include "axonad/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace axonad;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] && !y[j]) {
                den += 1.0;
                num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return num / den;
}

// Average precision by brute force: every distinct score is tried as a
// threshold (predict score >= t) in descending order.
double sweep_ap(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    std::vector<double> t = s;
    std::sort(t.begin(), t.end(), std::greater<>());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    const double pos = double(std::count(y.begin(), y.end(), 1));
    double ap = 0.0, prev_recall = 0.0;
    for (double th : t) {
        double tp = 0.0, fp = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] >= th) (y[i] ? tp : fp) += 1.0;
        const double recall = tp / pos, precision = tp / (tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

void random_instance(Rng& rng, std::vector<double>& s, std::vector<std::uint8_t>& y) {
    const std::size_t n = std::size_t(uniform_int(rng, 2, 200));
    s.resize(n);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Coarse scores so ties are common.
        s[i] = double(uniform_int(rng, 0, 15)) / 4.0;
        y[i] = uniform01(rng) < 0.3;
    }
    y[0] = 1;
    y[1] = 0;
}

}  // namespace

TEST_CASE("auc_roc fixtures") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    CHECK(auc_roc(s, y) == 0.75);
    CHECK(auc_roc(std::vector<double>{1, 2, 3, 4}, y) == 1.0);
    CHECK(auc_roc(std::vector<double>(4, 2.0), y) == 0.5);
    CHECK_THROWS_AS(auc_roc(s, std::vector<std::uint8_t>(4, 1)), Error);
}

TEST_CASE("auc_roc and auc_pr match brute-force oracles") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> s;
        std::vector<std::uint8_t> y;
        random_instance(rng, s, y);
        CHECK(std::abs(auc_roc(s, y) - pairwise_auc(s, y)) <= 1e-9);
        CHECK(std::abs(auc_pr(s, y) - sweep_ap(s, y)) <= 1e-9);
    }
}

TEST_CASE("auc_pr fixtures") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    // Descending: 0.8(+) 0.4(-) 0.35(+) 0.1(-): 0.5*1 + 0.5*(2/3).
    CHECK(auc_pr(s, y) == doctest::Approx(0.5 + 1.0 / 3.0));
    CHECK(auc_pr(std::vector<double>{1, 2, 3, 4}, y) == 1.0);
    CHECK(auc_pr(std::vector<double>{5, 4, 3, 2, 1}, std::vector<std::uint8_t>{0, 0, 0, 0, 1}) == doctest::Approx(0.2));
    CHECK_THROWS_AS(auc_pr(s, std::vector<std::uint8_t>(4, 0)), Error);
}

TEST_CASE("ranking metrics are invariant to increasing transforms") {
    Rng rng(3);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    random_instance(rng, s, y);
    std::vector<double> t;
    for (double v : s) t.push_back(std::exp(3.0 * v) - 7.0);
    CHECK(auc_roc(s, y) == auc_roc(t, y));
    CHECK(auc_pr(s, y) == auc_pr(t, y));
}

TEST_CASE("point adjust") {
    const std::vector<Interval> iv{{2, 12}};
    std::vector<std::uint8_t> pred(15, 0);
    CHECK(point_adjust(pred, iv) == pred);
    pred[5] = 1;
    const auto adj = point_adjust(pred, iv);
    CHECK(std::count(adj.begin(), adj.end(), 1) == 10);
    std::vector<std::uint8_t> outside(15, 0);
    outside[0] = outside[14] = 1;
    CHECK(point_adjust(outside, iv) == outside);
    // Idempotent and monotone.
    CHECK(point_adjust(adj, iv) == adj);
    auto more = pred;
    more[13] = 1;
    const auto adj_more = point_adjust(more, iv);
    for (std::size_t i = 0; i < 15; ++i) CHECK(adj_more[i] >= adj[i]);
}

TEST_CASE("F1 variants") {
    std::vector<std::uint8_t> labels(20, 0);
    for (int i = 4; i < 12; ++i) labels[std::size_t(i)] = 1;
    const auto iv = label_runs(labels);

    for (auto v : {F1Variant::pa, F1Variant::event, F1Variant::range})
        CHECK(f1_for_prediction(labels, labels, iv, v).f1 == doctest::Approx(1.0));

    // Half of the interval, no false positives.
    std::vector<std::uint8_t> half(20, 0);
    for (int i = 4; i < 8; ++i) half[std::size_t(i)] = 1;
    CHECK(f1_for_prediction(half, labels, iv, F1Variant::range).f1 == doctest::Approx(2.0 / 3.0));

    // One detected interval plus one spurious segment.
    auto spurious = half;
    spurious[16] = spurious[17] = 1;
    const F1Score e = f1_for_prediction(spurious, labels, iv, F1Variant::event);
    CHECK(e.precision == doctest::Approx(0.5));
    CHECK(e.recall == doctest::Approx(1.0));
    CHECK(e.f1 == doctest::Approx(2.0 / 3.0));

    // Point adjust: 8 TP after adjustment, 2 FP.
    const F1Score pa = f1_for_prediction(spurious, labels, iv, F1Variant::pa);
    CHECK(pa.precision == doctest::Approx(0.8));
    CHECK(pa.recall == doctest::Approx(1.0));
}

TEST_CASE("F1 sweep is the maximum over its candidates") {
    Rng rng(5);
    std::vector<std::uint8_t> labels(300, 0);
    for (int i = 100; i < 130; ++i) labels[std::size_t(i)] = 1;
    for (int i = 200; i < 205; ++i) labels[std::size_t(i)] = 1;
    std::vector<double> s(300);
    for (std::size_t i = 0; i < 300; ++i) s[i] = standard_normal(rng) + 1.5 * labels[i];
    const auto iv = label_runs(labels);
    const auto cands = candidate_thresholds(s);
    CHECK(std::is_sorted(cands.begin(), cands.end()));
    CHECK(cands.size() <= 256 + 300);
    for (auto v : {F1Variant::pa, F1Variant::event, F1Variant::range}) {
        const SweepResult r = f1_sweep(s, labels, v);
        for (double t : cands) {
            std::vector<std::uint8_t> pred(300);
            for (std::size_t i = 0; i < 300; ++i) pred[i] = s[i] >= t;
            CHECK(r.best_f1 >= f1_for_prediction(pred, labels, iv, v).f1);
        }
    }
    // Perfect scores: every variant reaches 1.
    std::vector<double> perfect(labels.begin(), labels.end());
    const MetricReport m = evaluate_scores(perfect, labels);
    CHECK(m.auc_roc == 1.0);
    CHECK(m.pa_f1 == doctest::Approx(1.0));
    CHECK(m.event_f1 == doctest::Approx(1.0));
    CHECK(m.range_f1 == doctest::Approx(1.0));
    CHECK(evaluate_scores(std::vector<double>(300, 1.0), labels).auc_roc == 0.5);
}

TEST_CASE("candidate thresholds on large inputs are capped") {
    std::vector<double> s(5000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = double(i);
    CHECK(candidate_thresholds(s).size() == 256);
}

TEST_CASE("Wilcoxon signed-rank") {
    // A dominates B on all 20 series: exact two-sided p = 2 * 2^-20.
    std::vector<double> a(20), b(20);
    for (int i = 0; i < 20; ++i) {
        a[std::size_t(i)] = 1.0 + 0.1 * i;
        b[std::size_t(i)] = 0.5;
    }
    const PairedComparison c = paired_compare(a, b);
    CHECK(c.exact);
    CHECK(c.p_value == doctest::Approx(2.0 * std::pow(2.0, -20)).epsilon(1e-12));
    CHECK(c.win_rate == 1.0);
    CHECK(c.ci_low > 0.0);

    const PairedComparison same = paired_compare(a, a);
    CHECK(same.p_value == 1.0);
    CHECK(same.win_rate == 0.0);
    CHECK(same.loss_rate == 0.0);
    CHECK(same.ci_low == 0.0);
    CHECK(same.ci_high == 0.0);

    CHECK_THROWS_AS(paired_compare(std::vector<double>(4, 1.0), std::vector<double>(4, 0.0)), Error);
}

TEST_CASE("paired comparison is antisymmetric") {
    Rng rng(6);
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < 40; ++i) {
        a[i] = standard_normal(rng);
        b[i] = standard_normal(rng) + 0.3;
    }
    const PairedComparison ab = paired_compare(a, b), ba = paired_compare(b, a);
    CHECK_FALSE(ab.exact);
    CHECK(ab.win_rate == doctest::Approx(ba.loss_rate));
    CHECK(ab.mean_delta == doctest::Approx(-ba.mean_delta));
    CHECK(ab.median_delta == doctest::Approx(-ba.median_delta));
    CHECK(ab.p_value == doctest::Approx(ba.p_value));
    CHECK(ab.p_value > 0.0);
    CHECK(ab.p_value <= 1.0);
}

TEST_CASE("Wilcoxon small exact case") {
    // Differences 1,2,3,-4,5: W+ = 11, W- = 4 over 32 sign patterns.
    // P(W+ >= 11) = 7/32 by enumeration, so the two-sided p is 14/32.
    bool exact = false;
    const double p = wilcoxon_signed_rank_p(std::vector<double>{1, 2, 3, -4, 5}, &exact);
    CHECK(exact);
    CHECK(p == doctest::Approx(14.0 / 32.0));
}

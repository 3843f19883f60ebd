#include "axonad/data.hpp"
#include "axonad/stats.hpp"
#include "axonad/synth.hpp"
#include "axonad/error.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

using namespace axonad;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("axonad_test_" + name);
}

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("csv round trip at 9 significant digits") {
    SeriesFrame f;
    f.values = Mat(3, 2);
    f.values << 1.0, -2.5, 3.14159265358979, 1e-20, 123456789.0, -0.000123456789;
    f.channel_names = {"a", "b,c"};
    const auto path = temp_path("rt.csv");
    save_csv(f, path);
    const SeriesFrame g = load_csv(path);
    CHECK(g.channel_names == f.channel_names);
    CHECK_FALSE(g.labels.has_value());
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(g.values(i) == std::stod(format_g9(f.values(i))));
    // A second round trip is bit-exact.
    save_csv(g, path);
    CHECK(load_csv(path).values == g.values);
    std::filesystem::remove(path);
}

TEST_CASE("csv labels") {
    const SeriesFrame f = parse_csv("x,y,label\n1,2,0\n3,4,1\n5,6,1\n");
    REQUIRE(f.labels.has_value());
    CHECK(*f.labels == std::vector<std::uint8_t>{0, 1, 1});
    CHECK(f.channels() == 2);
    const SeriesFrame g = parse_csv("x,y,label\n1,2,0\n3,4,1\n5,6,1\n", {.read_labels = false});
    CHECK_FALSE(g.labels.has_value());
    CHECK(g.channels() == 2);
    // The label column round-trips.
    CHECK(parse_csv(format_csv(f)).labels == f.labels);
}

TEST_CASE("csv errors") {
    CHECK(error_message([] { parse_csv("a,b\n1,2\n3,4\n5,6\n7,8\n9,nan\n"); }).find("(5,2)") != std::string::npos);
    CHECK_THROWS_AS(parse_csv("a,b\n1,2\n3\n"), Error);
    CHECK_THROWS_AS(parse_csv("a,b\n1,x\n"), Error);
    CHECK_THROWS_AS(parse_csv(""), Error);
    CHECK_THROWS_AS(parse_csv("a,label\n1,2\n"), Error);
    CHECK_THROWS_AS(load_csv(temp_path("missing.csv")), Error);
}

TEST_CASE("labels and runs") {
    const std::vector<AnomalyInterval> iv{{2, 4, AnomalyKind::spike, {0}}, {6, 7, AnomalyKind::drift, {1}}};
    const auto labels = labels_from_intervals(iv, 9);
    CHECK(labels == std::vector<std::uint8_t>{0, 0, 1, 1, 0, 0, 1, 0, 0});
    const auto runs = label_runs(labels);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0] == std::pair<std::int64_t, std::int64_t>{2, 4});
    CHECK(runs[1] == std::pair<std::int64_t, std::int64_t>{6, 7});
}

TEST_CASE("chronological split") {
    const SplitSpec a = chrono_split(80000);
    CHECK(a.val_start == 32000);
    CHECK(a.train_end == 40000);
    CHECK(a.test_start == 40000);
    const SplitSpec b = chrono_split(10);
    CHECK(b.val_start == 4);
    CHECK(b.train_end == 5);
    CHECK(b.test_start == 5);
    const std::vector<AnomalyInterval> early{{3, 4, AnomalyKind::spike, {0}}};
    CHECK_THROWS_AS(chrono_split(10, early), Error);
    const std::vector<AnomalyInterval> late{{6, 8, AnomalyKind::spike, {0}}};
    CHECK_NOTHROW(chrono_split(10, late));
}

TEST_CASE("normalizer") {
    Mat v(6, 3);
    v << 1, 5, 2,  //
        2, 5, 4,   //
        3, 5, 6,   //
        4, 5, 8,   //
        100, -7, 1e6, 100, 9, -1e6;
    SeriesFrame f;
    f.values = v;
    const SplitSpec split{3, 4, 4};
    const Normalizer n = fit_normalizer(f, split);
    const Mat z = n.apply(v.topRows(4));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(z.col(c).mean()) <= 1e-9);
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(n.std[1] == 1e-8);
    // Test rows do not influence the fit.
    f.values.bottomRows(2).setConstant(-3e9);
    const Normalizer m = fit_normalizer(f, split);
    CHECK(m.mean == n.mean);
    CHECK(m.std == n.std);
}

TEST_CASE("windows") {
    const Mat a = Mat::Random(100, 2);
    CHECK(make_windows(a, 100).size() == 1);
    const Mat b = Mat::Random(105, 2);
    const WindowSequence w = make_windows(b, 100);
    REQUIRE(w.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(w.end_index(i) == 99 + std::int64_t(i));
        CHECK(w[i] == b.middleRows(Eigen::Index(i), 100));
    }
    CHECK_THROWS_AS(make_windows(Mat::Random(99, 2), 100), Error);
    const WindowSequence off(b, 10, 1, 500);
    CHECK(off.end_index(0) == 509);
}

TEST_CASE("generator: determinism, labels, placement") {
    GeneratorConfig cfg;
    cfg.length = 4000;
    const SeriesFrame a = generate_synthetic(cfg);
    const SeriesFrame b = generate_synthetic(cfg);
    CHECK(a.values == b.values);
    CHECK(a.intervals == b.intervals);
    CHECK(a.values.allFinite());
    CHECK(a.intervals.size() == 20);
    CHECK(*a.labels == labels_from_intervals(a.intervals, a.length()));

    std::map<AnomalyKind, int> kinds;
    auto sorted = a.intervals;
    std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.start < y.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& iv = sorted[i];
        ++kinds[iv.kind];
        CHECK(iv.start >= 2000);
        CHECK(iv.end <= 4000);
        CHECK(iv.start < iv.end);
        CHECK(iv.channels.size() >= 1);
        CHECK(iv.channels.size() <= 4);
        if (i > 0) CHECK(sorted[i - 1].end <= iv.start);
    }
    CHECK(kinds.size() == 6);

    cfg.seed = 7;
    CHECK(generate_synthetic(cfg).values != a.values);
}

TEST_CASE("generator: zero counts give all-zero labels") {
    GeneratorConfig cfg;
    cfg.length = 1000;
    cfg.counts.fill(0);
    const SeriesFrame f = generate_synthetic(cfg);
    CHECK(f.intervals.empty());
    CHECK(std::count(f.labels->begin(), f.labels->end(), 1) == 0);
}

TEST_CASE("generator: impossible placement is an error") {
    GeneratorConfig cfg;
    cfg.length = 400;
    cfg.counts.fill(20);
    cfg.length_min = 100;
    cfg.length_median = 150;
    cfg.length_max = 200;
    CHECK_THROWS_AS(generate_synthetic(cfg), Error);
}

TEST_CASE("generator: interval lengths") {
    GeneratorConfig cfg;
    std::vector<double> lengths;
    for (double half : {0.25, 0.75})
        for (int i = 0; i < 10000; ++i) lengths.push_back(double(sample_interval_length(cfg, half, (i + 0.5) / 10000.0)));
    CHECK(*std::min_element(lengths.begin(), lengths.end()) >= 1);
    CHECK(*std::max_element(lengths.begin(), lengths.end()) <= 292);
    CHECK(stats::median(lengths) == 108.0);
}

TEST_CASE("generator: correlation break keeps marginals and breaks coupling") {
    for (std::uint64_t seed = 2024; seed < 2028; ++seed) {
        GeneratorConfig cfg;
        cfg.seed = seed;
        cfg.counts.fill(0);
        cfg.count(AnomalyKind::correlation_break) = 20;
        const SeriesFrame f = generate_synthetic(cfg);
        cfg.count(AnomalyKind::correlation_break) = 0;
        const SeriesFrame nominal = generate_synthetic(cfg);
        const Mat train = nominal.values.topRows(cfg.length / 2);

        int checked = 0;
        for (const auto& iv : f.intervals) {
            const auto len = iv.end - iv.start;
            if (len < 30) continue;  // correlations of very short slices are noise
            for (int c : iv.channels) {
                // Most coupled partner by nominal training correlation.
                int partner = -1;
                double best = -1.0;
                for (int j = 0; j < int(f.channels()); ++j) {
                    if (j == c) continue;
                    const std::vector<double> a(train.col(c).begin(), train.col(c).end());
                    const std::vector<double> b(train.col(j).begin(), train.col(j).end());
                    const double r = std::abs(stats::pearson(a, b).value_or(0.0));
                    if (r > best) best = r, partner = j;
                }
                auto slice = [&](const Mat& m, int col) {
                    const Eigen::VectorXd s = m.block(iv.start, col, len, 1);
                    return std::vector<double>(s.begin(), s.end());
                };
                const auto nom = slice(nominal.values, c), got = slice(f.values, c);
                const double sd = stats::stddev(nom);
                CHECK(std::abs(stats::mean(got) - stats::mean(nom)) <= 0.25 * sd);
                CHECK(std::abs(stats::stddev(got) / sd - 1.0) <= 0.25);
                const double r_nom = std::abs(stats::pearson(nom, slice(nominal.values, partner)).value_or(0.0));
                const double r_got = std::abs(stats::pearson(got, slice(f.values, partner)).value_or(0.0));
                CHECK(r_got < 0.5 * r_nom);
                ++checked;
            }
        }
        CHECK(checked > 0);
    }
}

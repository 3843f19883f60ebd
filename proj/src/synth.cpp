#include "axonad/synth.hpp"

#include "axonad/error.hpp"
#include "axonad/rng.hpp"
#include "axonad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace axonad {

void GeneratorConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::config, msg); };
    check(length >= 2, "generator.length must be >= 2");
    check(channels >= 1, "generator.channels must be >= 1");
    check(latent_dim >= 1, "generator.latent_dim must be >= 1");
    check(sinusoids_per_latent >= 0, "generator.sinusoids_per_latent must be >= 0");
    check(period_min > 0.0 && period_max >= period_min, "generator period range is invalid");
    check(ar_coef > -1.0 && ar_coef < 1.0, "generator.ar_coef must be in (-1,1)");
    check(ar_std >= 0.0 && noise_fraction >= 0.0, "generator noise levels must be >= 0");
    for (int c : counts) check(c >= 0, "generator.counts entries must be >= 0");
    check(magnitude_min > 0.0 && magnitude_max >= magnitude_min, "generator magnitude range is invalid");
    check(length_min >= 1 && length_min <= length_median && length_median <= length_max,
          "generator interval lengths need 1 <= min <= median <= max");
    check(channels_min >= 1 && channels_min <= channels_max, "generator channel range is invalid");
    check(test_start_fraction > 0.0 && test_start_fraction < 1.0,
          "generator.test_start_fraction must be in (0,1)");
}

std::int64_t sample_interval_length(const GeneratorConfig& cfg, double u_half, double u_pos) {
    const double lo = u_half < 0.5 ? double(cfg.length_min) : double(cfg.length_median);
    const double hi = u_half < 0.5 ? double(cfg.length_median) : double(cfg.length_max);
    const double v = std::exp(std::log(lo) + u_pos * (std::log(hi) - std::log(lo)));
    return std::clamp<std::int64_t>(std::llround(v), cfg.length_min, cfg.length_max);
}

namespace {

struct LatentProcess {
    std::vector<double> amp, period, phase;
};

/// n x L latent path starting at absolute time t0.
Mat latent_path(const GeneratorConfig& cfg, std::int64_t t0, std::int64_t n, Rng& rng) {
    const int L = cfg.latent_dim;
    Mat z = Mat::Zero(n, L);
    const double innovation = cfg.ar_std * std::sqrt(1.0 - cfg.ar_coef * cfg.ar_coef);
    const double log_lo = std::log(cfg.period_min), log_hi = std::log(cfg.period_max);
    for (int l = 0; l < L; ++l) {
        for (int j = 0; j < cfg.sinusoids_per_latent; ++j) {
            const double amp = 0.5 + uniform01(rng);
            const double period = std::exp(log_lo + uniform01(rng) * (log_hi - log_lo));
            const double phase = 6.283185307179586 * uniform01(rng);
            for (std::int64_t t = 0; t < n; ++t)
                z(t, l) += amp * std::sin(6.283185307179586 * double(t0 + t) / period + phase);
        }
        double ar = cfg.ar_std * standard_normal(rng);
        for (std::int64_t t = 0; t < n; ++t) {
            ar = cfg.ar_coef * ar + innovation * standard_normal(rng);
            z(t, l) += ar;
        }
    }
    return z;
}

double column_std(const Mat& m, Eigen::Index c) {
    const double mu = m.col(c).mean();
    return std::sqrt((m.col(c).array() - mu).square().mean());
}

int most_coupled_partner(const Mat& nominal, int c) {
    int best = -1;
    double best_abs = -1.0;
    for (int j = 0; j < nominal.cols(); ++j) {
        if (j == c) continue;
        const Eigen::VectorXd a = nominal.col(c), b = nominal.col(j);
        const auto r = stats::pearson(std::span<const double>(a.data(), a.size()),
                                      std::span<const double>(b.data(), b.size()));
        const double v = r ? std::abs(*r) : 0.0;
        if (v > best_abs) {
            best_abs = v;
            best = j;
        }
    }
    return best;
}

/// Removes from `y` (centered) its least-squares projection on the centered
/// columns of `basis`.
Eigen::VectorXd orthogonalize(const Eigen::VectorXd& y, const Mat& basis) {
    Eigen::VectorXd yc = y.array() - y.mean();
    if (basis.cols() == 0) return yc;
    Eigen::MatrixXd b = basis.rowwise() - basis.colwise().mean();
    Eigen::VectorXd coef = b.colPivHouseholderQr().solve(yc);
    return yc - b * coef;
}

}  // namespace

SeriesFrame generate_synthetic(const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::int64_t N = cfg.length;
    const int F = cfg.channels;
    const int L = cfg.latent_dim;

    // Nominal signal.
    Mat coupling(F, L);
    for (int i = 0; i < F; ++i)
        for (int l = 0; l < L; ++l) coupling(i, l) = standard_normal(rng) / std::sqrt(double(L));
    const Mat z = latent_path(cfg, 0, N, rng);
    Mat signal = z * coupling.transpose();
    std::vector<double> noise_std(F);
    for (int c = 0; c < F; ++c) noise_std[c] = cfg.noise_fraction * column_std(signal, c);
    Mat x = signal;
    for (std::int64_t t = 0; t < N; ++t)
        for (int c = 0; c < F; ++c) x(t, c) += noise_std[c] * standard_normal(rng);
    const Mat nominal = x;
    std::vector<double> channel_std(F);
    for (int c = 0; c < F; ++c) channel_std[c] = column_std(nominal, c);

    // Interval placement.
    const auto test_start = std::int64_t(std::floor(cfg.test_start_fraction * double(N) + 1e-9));
    std::vector<AnomalyKind> kinds;
    for (auto k : kAllAnomalyKinds)
        for (int i = 0; i < cfg.count(k); ++i) kinds.push_back(k);
    for (std::size_t i = kinds.size(); i > 1; --i)
        std::swap(kinds[i - 1], kinds[std::size_t(uniform_int(rng, 0, std::int64_t(i) - 1))]);

    std::vector<AnomalyInterval> intervals;
    for (auto kind : kinds) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            const double u_half = uniform01(rng);
            const std::int64_t len = sample_interval_length(cfg, u_half, uniform01(rng));
            if (test_start + len > N) continue;
            const std::int64_t start = uniform_int(rng, std::max<std::int64_t>(test_start, 1), N - len);
            const std::int64_t end = start + len;
            // keep a one-step gap so label runs recover intervals exactly
            const bool clash = std::any_of(intervals.begin(), intervals.end(), [&](const auto& iv) {
                return start <= iv.end && iv.start <= end;
            });
            if (clash) continue;
            AnomalyInterval iv{start, end, kind, {}};
            const int max_ch = std::min(cfg.channels_max, F);
            const int n_ch = int(uniform_int(rng, std::min(cfg.channels_min, max_ch), max_ch));
            std::vector<int> pool(F);
            std::iota(pool.begin(), pool.end(), 0);
            for (int i = 0; i < n_ch; ++i)
                std::swap(pool[std::size_t(i)], pool[std::size_t(uniform_int(rng, i, F - 1))]);
            iv.channels.assign(pool.begin(), pool.begin() + n_ch);
            std::sort(iv.channels.begin(), iv.channels.end());
            intervals.push_back(std::move(iv));
            placed = true;
        }
        require(placed, ErrorCode::config,
                "cannot place a " + std::string(to_string(kind)) + " interval without overlap");
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });

    // Injection.
    const Mat nominal_train = nominal.topRows(test_start);
    for (const auto& iv : intervals) {
        const std::int64_t len = iv.end - iv.start;
        const double delta = cfg.magnitude_min + uniform01(rng) * (cfg.magnitude_max - cfg.magnitude_min);
        for (int c : iv.channels) {
            const double sigma = channel_std[c];
            const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            switch (iv.kind) {
                case AnomalyKind::flatline:
                    for (auto t = iv.start; t < iv.end; ++t) x(t, c) = x(iv.start - 1, c);
                    break;
                case AnomalyKind::drift:
                    for (auto t = iv.start; t < iv.end; ++t)
                        x(t, c) += sign * delta * sigma * double(t - iv.start + 1) / double(len);
                    break;
                case AnomalyKind::level_shift:
                    for (auto t = iv.start; t < iv.end; ++t) x(t, c) += sign * delta * sigma;
                    break;
                case AnomalyKind::spike: {
                    const std::int64_t pulses = std::max<std::int64_t>(1, len / 25);
                    for (std::int64_t p = 0; p < pulses; ++p) {
                        const auto t = iv.start + std::int64_t((double(p) + 0.5) * double(len) / double(pulses));
                        const double s = uniform01(rng) < 0.5 ? -1.0 : 1.0;
                        x(t, c) += s * delta * sigma;
                    }
                    break;
                }
                case AnomalyKind::variance_jump: {
                    const double extra = noise_std[c] * std::sqrt(std::max(0.0, delta * delta - 1.0));
                    for (auto t = iv.start; t < iv.end; ++t) x(t, c) += extra * standard_normal(rng);
                    break;
                }
                case AnomalyKind::correlation_break: {
                    const Eigen::VectorXd orig = nominal.block(iv.start, c, len, 1);
                    const double mu = orig.mean();
                    const double sd = std::sqrt((orig.array() - mu).square().mean());
                    const Mat zi = latent_path(cfg, iv.start, len, rng);
                    Eigen::VectorXd fresh = zi * coupling.row(c).transpose();
                    for (std::int64_t t = 0; t < len; ++t) fresh(t) += noise_std[c] * standard_normal(rng);
                    // Decorrelate from the other channels (or the most coupled one
                    // when the slice is too short for a full projection).
                    std::vector<int> others;
                    if (len > F + 1) {
                        for (int j = 0; j < F; ++j)
                            if (j != c) others.push_back(j);
                    } else if (F > 1) {
                        others.push_back(most_coupled_partner(nominal_train, c));
                    }
                    Mat basis(len, Eigen::Index(others.size()));
                    for (std::size_t j = 0; j < others.size(); ++j)
                        basis.col(Eigen::Index(j)) = x.block(iv.start, others[j], len, 1);
                    Eigen::VectorXd y = len > 2 ? orthogonalize(fresh, basis) : Eigen::VectorXd(fresh.array() - fresh.mean());
                    const double ysd = std::sqrt(y.array().square().mean());
                    if (ysd > 1e-12) y *= sd / ysd;
                    x.block(iv.start, c, len, 1) = (y.array() + mu).matrix();
                    break;
                }
            }
        }
    }

    SeriesFrame frame;
    frame.values = std::move(x);
    for (int c = 0; c < F; ++c) frame.channel_names.push_back("ch" + std::to_string(c));
    frame.labels = labels_from_intervals(intervals, std::size_t(N));
    frame.intervals = std::move(intervals);
    return frame;
}

}  // namespace axonad

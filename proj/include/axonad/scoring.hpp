#pragma once

#include "axonad/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace axonad {

/// First tail timestep (1-based) and number of tail timesteps used by the
/// query mismatch: tau0 = max(s + 1, T - k + 1), k_eff = T - tau0 + 1.
struct TailBounds {
    int tau0;
    int k_eff;
    friend bool operator==(const TailBounds&, const TailBounds&) = default;
};

TailBounds tail_bounds(int window, int horizon, int tail);

/// Mean over heads and tail timesteps of 1 - cos(q_pred, q_tgt).
double query_mismatch(const Mat& q_pred, const Mat& q_tgt, int heads, int window, int horizon,
                      int tail, double eps_cos);

/// (1/T) * sum_t ||x_hat_t - x_t||^2
double recon_score(const Mat& x_hat, const Mat& x);

/// Mean over heads and the last `rows` rows of KL(a_tgt || a_pred), with
/// probabilities floored at 1e-12 inside the logarithm.
double kl_tail(const std::vector<Mat>& a_tgt, const std::vector<Mat>& a_pred, int rows);

/// Per-window component scores. `d_q` is the cosine mismatch (or the tail KL
/// for attention-map prediction targets); the remaining fields feed the
/// ablation score modes and the diagnostics.
struct ComponentScores {
    double d_rec = 0.0;
    double d_q = 0.0;
    double d_q_mse = 0.0;       // mean squared query distance on the tail
    double kl_tail = 0.0;       // KL(A_tgt || A_pred) on the tail, online keys
    double dq_norm = 0.0;       // Frobenius norm of (Q_pred - Q_tgt) on the tail
    double tail_entropy = 0.0;  // mean Shannon entropy (nats) of A_tgt tail rows
};

/// Scores one window with frozen parameters in double precision. The
/// predictor and target branch are only evaluated on the tail rows that the
/// scores read. Reference path for `Scorer`.
ComponentScores score_window(const Model& m, const Mat& x);

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVecF = Eigen::Matrix<float, 1, Eigen::Dynamic>;

/// Frozen single-precision copy of a model for scoring. The forward pass
/// runs in float32 (the checkpoint storage precision); the score reductions
/// run in double. Thread-safe for concurrent `score` calls.
class Scorer {
public:
    explicit Scorer(const Model& m);
    ComponentScores score(const Mat& x) const;
    const ModelConfig& config() const noexcept { return cfg_; }

private:
    ModelConfig cfg_;
    bool has_tgt_queries_;
    Eigen::Index first_ = 0;
    std::vector<Eigen::Index> conv_first_;
    MatF embed_w_, pos_;
    RowVecF embed_b_, ln_g_, ln_b_;
    std::vector<MatF> proj_w_;  // q, k, v, attention output
    std::vector<RowVecF> proj_b_;
    RowVecF ln_ffn_g_, ln_ffn_b_;
    MatF ffn1_w_, ffn2_w_, head_w_, pred_w_;
    RowVecF ffn1_b_, ffn2_b_, head_b_, pred_b_;
    std::vector<MatF> conv_w_;
    std::vector<RowVecF> conv_b_;
    MatF t_embed_w_, t_pos_;
    RowVecF t_embed_b_, t_ln_g_, t_ln_b_;
    std::vector<MatF> t_proj_w_;  // q, k, v; empty when not tracked
    std::vector<RowVecF> t_proj_b_;
};

struct Calibration {
    double median_rec = 0.0, iqr_rec = 0.0;
    double median_q = 0.0, iqr_q = 0.0;
    double median_q_mse = 0.0, iqr_q_mse = 0.0;
    double median_kl = 0.0, iqr_kl = 0.0;
    double eps_rz = 1e-8;
    friend bool operator==(const Calibration&, const Calibration&) = default;
};

/// Medians and IQRs (linear-interpolation quantiles) per component. Needs at
/// least 4 windows.
Calibration calibrate(std::span<const ComponentScores> train_scores, double eps_rz);

/// (u - median) / (iqr + eps)
inline double robust_z(double u, double median, double iqr, double eps_rz) {
    return (u - median) / (iqr + eps_rz);
}

enum class ScoreMode {
    combined,     // rz(d_rec) + rz(d_q)
    recon,        // rz(d_rec)
    query,        // rz(d_q)
    query_mse,    // rz(d_rec) + rz(d_q_mse)
    combined_kl,  // rz(d_rec) + rz(d_q) + rz(kl_tail)
};

std::string_view to_string(ScoreMode m);
ScoreMode parse_score_mode(std::string_view s);

double combined_score(double d_rec, double d_q, const Calibration& cal);
double combined_score(const ComponentScores& c, const Calibration& cal, ScoreMode mode);

struct ScoreRecord {
    std::int64_t window_end_index = 0;
    double d_rec = 0.0;
    double d_q = 0.0;  // query component used by the score mode
    double score = 0.0;
};

ScoreRecord make_record(std::int64_t end_index, const ComponentScores& c, const Calibration& cal,
                        ScoreMode mode);

enum class AlignmentMode { endpoint, center };

std::string_view to_string(AlignmentMode m);
AlignmentMode parse_alignment(std::string_view s);

struct AlignedScores {
    std::vector<double> d_rec, d_q, score;
};

/// Expands window records to one value per timestep. Endpoint mode assigns a
/// window to its end index t; center mode to t - floor((T-1)/2). Timesteps
/// without an assignment take the nearest assigned value.
AlignedScores align_scores(std::span<const ScoreRecord> records, AlignmentMode mode, int window,
                           std::size_t series_length);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct DiagnosticsReport {
    std::size_t windows = 0;
    std::optional<double> spearman_dq_kl;        // ||dQ|| vs tail KL
    std::optional<double> spearman_rec_q;        // d_rec vs d_q
    double entropy_min = 0.0, entropy_median = 0.0, entropy_max = 0.0;
    double entropy_upper_bound = 0.0;            // ln T
    // Quadrants with per-component training-median thresholds, computed over
    // the anomalous windows when labels are given, else over all windows.
    std::string quadrant_population;
    std::size_t quadrant_windows = 0;
    double frac_high_q_low_rec = 0.0;
    double frac_high_rec_low_q = 0.0;
    double frac_both_high = 0.0;
    double frac_both_low = 0.0;
    std::string dq_norm_definition =
        "Frobenius norm of (Q_pred - Q_tgt) over all heads on the tail timesteps [tau0, T]";
};

/// `window_labels` (optional) flags anomalous windows, aligned with `scores`.
DiagnosticsReport diagnostics_report(std::span<const ComponentScores> scores, const Calibration& cal,
                                     int window, std::span<const std::uint8_t> window_labels = {});

}  // namespace axonad

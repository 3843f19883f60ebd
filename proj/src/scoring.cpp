#include "axonad/scoring.hpp"

#include "axonad/error.hpp"
#include "axonad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace axonad {

TailBounds tail_bounds(int window, int horizon, int tail) {
    require(horizon >= 1 && horizon < window && tail >= 1, ErrorCode::config,
            "tail bounds need 1 <= s < T and k >= 1");
    const int tau0 = std::max(horizon + 1, window - tail + 1);
    return {tau0, window - tau0 + 1};
}

double query_mismatch(const Mat& q_pred, const Mat& q_tgt, int heads, int window, int horizon,
                      int tail, double eps_cos) {
    require(q_pred.rows() == window && q_tgt.rows() == window && q_pred.cols() == q_tgt.cols(),
            ErrorCode::shape, "query tensors must be T x D and aligned");
    const auto tb = tail_bounds(window, horizon, tail);
    const Eigen::Index dh = q_pred.cols() / heads;
    double acc = 0.0;
    for (int r = tb.tau0 - 1; r < window; ++r)
        for (int h = 0; h < heads; ++h)
            acc += 1.0 - cosine_similarity(q_pred.row(r).segment(h * dh, dh),
                                           q_tgt.row(r).segment(h * dh, dh), eps_cos);
    return acc / double(heads * tb.k_eff);
}

double recon_score(const Mat& x_hat, const Mat& x) {
    require(x_hat.rows() == x.rows() && x_hat.cols() == x.cols(), ErrorCode::shape,
            "reconstruction and input shapes differ");
    return (x_hat - x).squaredNorm() / double(x.rows());
}

double kl_tail(const std::vector<Mat>& a_tgt, const std::vector<Mat>& a_pred, int rows) {
    require(a_tgt.size() == a_pred.size() && !a_tgt.empty(), ErrorCode::shape,
            "attention map lists must be non-empty and aligned");
    double acc = 0.0;
    for (std::size_t h = 0; h < a_tgt.size(); ++h) {
        const Eigen::Index t = a_tgt[h].rows();
        for (Eigen::Index r = t - rows; r < t; ++r) acc += kl_row(a_tgt[h].row(r), a_pred[h].row(r));
    }
    return acc / double(a_tgt.size() * std::size_t(rows));
}


namespace {

TargetFeature target_feature(PredictionTarget t) {
    switch (t) {
        case PredictionTarget::keys: return TargetFeature::keys;
        case PredictionTarget::values: return TargetFeature::values;
        case PredictionTarget::hidden: return TargetFeature::hidden;
        default: return TargetFeature::queries;
    }
}

/// Tail attention rows of two query sets against the same keys, per head:
/// probabilities and log-probabilities (from the logits, so no element-wise
/// logarithm is needed).
struct TailPair {
    std::vector<Mat> p_a, logp_a, p_b, logp_b;
};

TailPair tail_attention_pair(const Mat& qa, const Mat& qb, const Mat& k, int heads, Eigen::Index n) {
    const Eigen::Index dh = qa.cols() / heads, first = qa.rows() - n;
    const double scale = 1.0 / std::sqrt(double(dh));
    TailPair out;
    Mat q(2 * n, dh), s;
    for (int h = 0; h < heads; ++h) {
        q.topRows(n) = qa.block(first, h * dh, n, dh);
        q.bottomRows(n) = qb.block(first, h * dh, n, dh);
        s.noalias() = scale * q * k.middleCols(h * dh, dh).transpose();
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            auto row = s.row(r).array();
            row -= row.maxCoeff();
            row -= std::log(row.exp().sum());
        }
        Mat p = s.array().exp().matrix();
        out.p_a.push_back(p.topRows(n));
        out.p_b.push_back(p.bottomRows(n));
        out.logp_a.push_back(s.topRows(n));
        out.logp_b.push_back(s.bottomRows(n));
    }
    return out;
}

/// Mean over heads and rows of KL(a || b), probabilities floored at 1e-12
/// inside the logarithm: log max(p, f) = max(log p, log f).
double tail_kl(const TailPair& t) {
    const double lf = std::log(kKlFloor);
    double acc = 0.0;
    for (std::size_t h = 0; h < t.p_a.size(); ++h)
        acc += (t.p_a[h].array() * (t.logp_a[h].array().max(lf) - t.logp_b[h].array().max(lf))).sum();
    return acc / double(t.p_a.size() * std::size_t(t.p_a.front().rows()));
}

/// Component scores from the forward features. `q_pred` and `tgt` need only
/// their tail rows; `k_tgt` is read for the attn_map_qk target only.
ComponentScores finish_scores(const ModelConfig& c, const Mat& x, const Mat& x_hat, const Mat& k,
                              const Mat& q_pred, const Mat& tgt, const Mat& k_tgt, bool has_tgt_queries) {
    const Eigen::Index n = tail_bounds(c.window, c.horizon, c.tail).k_eff;
    const int heads = c.compare_heads();
    const auto target = c.prediction_target;

    ComponentScores out;
    out.d_rec = recon_score(x_hat, x);
    out.d_q_mse = (q_pred.bottomRows(n) - tgt.bottomRows(n)).squaredNorm() / double(heads * n);
    if (has_tgt_queries) {
        const TailPair t = tail_attention_pair(tgt, q_pred, k, c.heads, n);
        out.kl_tail = tail_kl(t);
        out.dq_norm = (q_pred.bottomRows(n) - tgt.bottomRows(n)).norm();
        double ent = 0.0;
        for (std::size_t h = 0; h < t.p_a.size(); ++h) ent -= (t.p_a[h].array() * t.logp_a[h].array()).sum();
        out.tail_entropy = ent / double(t.p_a.size() * std::size_t(n));
    } else {
        out.kl_tail = out.dq_norm = out.tail_entropy = std::numeric_limits<double>::quiet_NaN();
    }

    if (target == PredictionTarget::attn_map_q) {
        out.d_q = out.kl_tail;
    } else if (target == PredictionTarget::attn_map_qk) {
        out.d_q = tail_kl(tail_attention_pair(tgt, q_pred, k_tgt, c.heads, n));
    } else {
        out.d_q = query_mismatch(q_pred, tgt, heads, c.window, c.horizon, c.tail, c.eps_cos);
    }
    return out;
}

}  // namespace

ComponentScores score_window(const Model& m, const Mat& x) {
    const auto& c = m.config();
    const Eigen::Index first = tail_bounds(c.window, c.horizon, c.tail).tau0 - 1;
    const Mat h = embed(x, m);
    const auto rec = reconstruct(h, m);
    const Mat q_pred = predict_queries(shift_history(h, c.horizon), m, first);
    const Mat tgt = target_features(x, m, target_feature(c.prediction_target), first);
    const Mat k_tgt = c.prediction_target == PredictionTarget::attn_map_qk
                          ? target_features(x, m, TargetFeature::keys)
                          : Mat();
    return finish_scores(c, x, rec.x_hat, rec.k, q_pred, tgt, k_tgt, m.target().find("attn.q.w").has_value());
}

// ---------------------------------------------------------------------------
// Single-precision scorer
// ---------------------------------------------------------------------------

namespace {

MatF to_f(const Tensor& t) { return t.mat().cast<float>(); }
RowVecF to_fv(const Tensor& t) { return t.row().cast<float>(); }

void layer_norm_f(MatF& x, const RowVecF& g, const RowVecF& b, float eps) {
    const float inv_d = 1.0f / float(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        const float mean = r.sum() * inv_d;
        r.array() -= mean;
        const float rstd = 1.0f / std::sqrt(r.squaredNorm() * inv_d + eps);
        r = (r.array() * rstd * g.array() + b.array()).matrix();
    }
}

void softmax_rows_f(MatF& x) {
    const Eigen::Index n = x.cols();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Map<Eigen::ArrayXf> r(x.data() + i * n, n);
        r -= r.maxCoeff();
    }
    Eigen::Map<Eigen::ArrayXf> all(x.data(), x.size());
    all = all.exp();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Map<Eigen::ArrayXf> r(x.data() + i * n, n);
        r *= 1.0f / r.sum();
    }
}

/// Adds rows >= first of the causal dilated conv of `seq` into `out`, which
/// holds the bias on those rows.
void conv_f(const MatF& seq, const MatF& w, int dilation, Eigen::Index first, MatF& out) {
    const Eigen::Index t_len = seq.rows(), c_in = seq.cols(), taps = w.rows() / c_in;
    for (Eigen::Index j = 0; j < taps; ++j) {
        const Eigen::Index lag = (taps - 1 - j) * dilation;
        const Eigen::Index start = std::max(first, lag);
        if (start >= t_len) continue;
        const Eigen::Index n = t_len - start;
        out.middleRows(start, n).noalias() += seq.middleRows(start - lag, n) * w.middleRows(j * c_in, c_in);
    }
}

// Flushes single-precision denormals (far softmax tails) to zero while
// alive; denormal operands stall the vector units.
class FlushDenormals {
public:
#if defined(__SSE__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

// Per-thread buffers reused across windows.
struct Workspace {
    MatF x, h, q, k, v, s, z, u, n2, f, x_hat, cur, next, qp, th, tp;
    Mat x_hat_d, k_d, q_pred_d, tgt_d, k_tgt_d;
};

}  // namespace

Scorer::Scorer(const Model& m) : cfg_(m.config()), has_tgt_queries_(m.target().find("attn.q.w").has_value()) {
    const auto& p = m.online();
    const auto& l = m.layout();
    embed_w_ = to_f(p[l.embed_w]);
    embed_b_ = to_fv(p[l.embed_b]);
    pos_ = to_f(p[l.pos_bias]);
    ln_g_ = to_fv(p[l.ln_embed_g]);
    ln_b_ = to_fv(p[l.ln_embed_b]);
    for (auto [w, b] : {std::pair{l.q_w, l.q_b}, {l.k_w, l.k_b}, {l.v_w, l.v_b}, {l.out_w, l.out_b}}) {
        proj_w_.push_back(to_f(p[w]));
        proj_b_.push_back(to_fv(p[b]));
    }
    ln_ffn_g_ = to_fv(p[l.ln_ffn_g]);
    ln_ffn_b_ = to_fv(p[l.ln_ffn_b]);
    ffn1_w_ = to_f(p[l.ffn1_w]);
    ffn1_b_ = to_fv(p[l.ffn1_b]);
    ffn2_w_ = to_f(p[l.ffn2_w]);
    ffn2_b_ = to_fv(p[l.ffn2_b]);
    head_w_ = to_f(p[l.head_w]);
    head_b_ = to_fv(p[l.head_b]);
    for (std::size_t i = 0; i < l.conv_w.size(); ++i) {
        conv_w_.push_back(to_f(p[l.conv_w[i]]));
        conv_b_.push_back(to_fv(p[l.conv_b[i]]));
    }
    pred_w_ = to_f(p[l.pred_w]);
    pred_b_ = to_fv(p[l.pred_b]);

    const auto& t = m.target();
    t_embed_w_ = to_f(t.at("embed.w"));
    t_embed_b_ = to_fv(t.at("embed.b"));
    t_pos_ = to_f(t.at("pos_bias"));
    t_ln_g_ = to_fv(t.at("ln_embed.g"));
    t_ln_b_ = to_fv(t.at("ln_embed.b"));
    for (const char* proj : {"q", "k", "v"}) {
        const std::string base = std::string("attn.") + proj;
        if (t.find(base + ".w")) {
            t_proj_w_.push_back(to_f(t.at(base + ".w")));
            t_proj_b_.push_back(to_fv(t.at(base + ".b")));
        } else {
            t_proj_w_.emplace_back();
            t_proj_b_.emplace_back();
        }
    }
    first_ = tail_bounds(cfg_.window, cfg_.horizon, cfg_.tail).tau0 - 1;
    conv_first_ = predictor_first_rows(cfg_, first_);
}

ComponentScores Scorer::score(const Mat& x) const {
    const Eigen::Index T = cfg_.window, D = cfg_.dim, dh = cfg_.head_dim();
    require(x.rows() == T && x.cols() == cfg_.channels, ErrorCode::shape,
            "window shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " does not match model " +
                std::to_string(T) + "x" + std::to_string(cfg_.channels));
    const FlushDenormals ftz;
    thread_local Workspace w;
    const float eps = float(cfg_.ln_eps);
    w.x = x.cast<float>();

    w.h.noalias() = w.x * embed_w_;
    w.h.rowwise() += embed_b_;
    w.h += pos_;
    layer_norm_f(w.h, ln_g_, ln_b_, eps);

    // Reconstruction pathway.
    w.q.noalias() = w.h * proj_w_[0];
    w.k.noalias() = w.h * proj_w_[1];
    w.v.noalias() = w.h * proj_w_[2];
    w.q.rowwise() += proj_b_[0];
    w.k.rowwise() += proj_b_[1];
    w.v.rowwise() += proj_b_[2];
    const float scale = 1.0f / std::sqrt(float(dh));
    w.z.resize(T, D);
    for (int hd = 0; hd < cfg_.heads; ++hd) {
        w.s.noalias() = scale * w.q.middleCols(hd * dh, dh) * w.k.middleCols(hd * dh, dh).transpose();
        softmax_rows_f(w.s);
        w.z.middleCols(hd * dh, dh).noalias() = w.s * w.v.middleCols(hd * dh, dh);
    }
    w.u = w.h;
    w.u.noalias() += w.z * proj_w_[3];
    w.u.rowwise() += proj_b_[3];
    w.n2 = w.u;
    layer_norm_f(w.n2, ln_ffn_g_, ln_ffn_b_, eps);
    w.f.noalias() = w.n2 * ffn1_w_;
    w.f.rowwise() += ffn1_b_;
    w.f = w.f.cwiseMax(0.0f);
    w.u.noalias() += w.f * ffn2_w_;
    w.u.rowwise() += ffn2_b_;
    w.x_hat.noalias() = w.u * head_w_;
    w.x_hat.rowwise() += head_b_;

    // Predictor on the shifted history, tail rows only.
    const int sh = cfg_.horizon;
    w.cur.setZero(T, D);
    w.cur.bottomRows(T - sh) = w.h.topRows(T - sh);
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
        const Eigen::Index first = conv_first_[i];
        w.next.setZero(T, D);
        w.next.bottomRows(T - first).rowwise() = conv_b_[i];
        conv_f(w.cur, conv_w_[i], cfg_.dilations[i], first, w.next);
        w.cur = w.next.cwiseMax(0.0f);
    }
    const Eigen::Index n = T - first_;
    w.qp.noalias() = w.cur.bottomRows(n) * pred_w_;
    w.qp.rowwise() += pred_b_;
    w.q_pred_d.setZero(T, D);
    w.q_pred_d.bottomRows(n) = w.qp.cast<double>();
    // EMA target branch.
    auto target_rows = [&](Eigen::Index from) {
        w.th.noalias() = w.x.bottomRows(T - from) * t_embed_w_;
        w.th.rowwise() += t_embed_b_;
        w.th += t_pos_.bottomRows(T - from);
        layer_norm_f(w.th, t_ln_g_, t_ln_b_, eps);
    };
    auto project = [&](int which) -> const MatF& {
        w.tp.noalias() = w.th * t_proj_w_[std::size_t(which)];
        w.tp.rowwise() += t_proj_b_[std::size_t(which)];
        return w.tp;
    };
    const auto target = cfg_.prediction_target;
    target_rows(first_);
    w.tgt_d.setZero(T, D);
    switch (target_feature(target)) {
        case TargetFeature::hidden: w.tgt_d.bottomRows(n) = w.th.cast<double>(); break;
        case TargetFeature::keys: w.tgt_d.bottomRows(n) = project(1).cast<double>(); break;
        case TargetFeature::values: w.tgt_d.bottomRows(n) = project(2).cast<double>(); break;
        case TargetFeature::queries: w.tgt_d.bottomRows(n) = project(0).cast<double>(); break;
    }
    if (target == PredictionTarget::attn_map_qk) {
        target_rows(0);
        w.k_tgt_d = project(1).cast<double>();
    }
    w.x_hat_d = w.x_hat.cast<double>();
    w.k_d = w.k.cast<double>();
    return finish_scores(cfg_, x, w.x_hat_d, w.k_d, w.q_pred_d, w.tgt_d, w.k_tgt_d, has_tgt_queries_);
}

Calibration calibrate(std::span<const ComponentScores> s, double eps_rz) {
    require(s.size() >= 4, ErrorCode::metric, "calibration needs at least 4 training windows");
    auto fit = [&](auto field, double& median, double& iqr) {
        std::vector<double> v;
        v.reserve(s.size());
        for (const auto& c : s) v.push_back(c.*field);
        if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
            median = iqr = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        median = stats::quantile(v, 0.5);
        iqr = stats::quantile(v, 0.75) - stats::quantile(v, 0.25);
    };
    Calibration cal;
    cal.eps_rz = eps_rz;
    fit(&ComponentScores::d_rec, cal.median_rec, cal.iqr_rec);
    fit(&ComponentScores::d_q, cal.median_q, cal.iqr_q);
    fit(&ComponentScores::d_q_mse, cal.median_q_mse, cal.iqr_q_mse);
    fit(&ComponentScores::kl_tail, cal.median_kl, cal.iqr_kl);
    return cal;
}

std::string_view to_string(ScoreMode m) {
    switch (m) {
        case ScoreMode::combined: return "combined";
        case ScoreMode::recon: return "recon";
        case ScoreMode::query: return "query";
        case ScoreMode::query_mse: return "query_mse";
        case ScoreMode::combined_kl: return "combined_kl";
    }
    return "combined";
}

ScoreMode parse_score_mode(std::string_view s) {
    for (auto m : {ScoreMode::combined, ScoreMode::recon, ScoreMode::query, ScoreMode::query_mse,
                   ScoreMode::combined_kl})
        if (to_string(m) == s) return m;
    fail(ErrorCode::config, "unknown score mode '" + std::string(s) + "'");
}

double combined_score(double d_rec, double d_q, const Calibration& cal) {
    return robust_z(d_rec, cal.median_rec, cal.iqr_rec, cal.eps_rz) +
           robust_z(d_q, cal.median_q, cal.iqr_q, cal.eps_rz);
}

double combined_score(const ComponentScores& c, const Calibration& cal, ScoreMode mode) {
    const double rz_rec = robust_z(c.d_rec, cal.median_rec, cal.iqr_rec, cal.eps_rz);
    const double rz_q = robust_z(c.d_q, cal.median_q, cal.iqr_q, cal.eps_rz);
    switch (mode) {
        case ScoreMode::combined: return rz_rec + rz_q;
        case ScoreMode::recon: return rz_rec;
        case ScoreMode::query: return rz_q;
        case ScoreMode::query_mse:
            return rz_rec + robust_z(c.d_q_mse, cal.median_q_mse, cal.iqr_q_mse, cal.eps_rz);
        case ScoreMode::combined_kl:
            require(!std::isnan(cal.median_kl), ErrorCode::config,
                    "combined_kl score mode needs a query-based prediction target");
            return rz_rec + rz_q + robust_z(c.kl_tail, cal.median_kl, cal.iqr_kl, cal.eps_rz);
    }
    return rz_rec + rz_q;
}

ScoreRecord make_record(std::int64_t end_index, const ComponentScores& c, const Calibration& cal,
                        ScoreMode mode) {
    return {end_index, c.d_rec, mode == ScoreMode::query_mse ? c.d_q_mse : c.d_q,
            combined_score(c, cal, mode)};
}

std::string_view to_string(AlignmentMode m) {
    return m == AlignmentMode::center ? "center" : "endpoint";
}

AlignmentMode parse_alignment(std::string_view s) {
    if (s == "endpoint") return AlignmentMode::endpoint;
    if (s == "center") return AlignmentMode::center;
    fail(ErrorCode::config, "unknown alignment mode '" + std::string(s) + "'");
}

AlignedScores align_scores(std::span<const ScoreRecord> records, AlignmentMode mode, int window,
                           std::size_t series_length) {
    require(!records.empty(), ErrorCode::config, "no score records to align");
    for (std::size_t i = 1; i < records.size(); ++i)
        require(records[i].window_end_index > records[i - 1].window_end_index, ErrorCode::config,
                "score records must be sorted by strictly increasing window end index");
    const std::int64_t offset = mode == AlignmentMode::center ? (window - 1) / 2 : 0;
    const auto n = std::int64_t(series_length);

    // owner[t] = index of the record assigned to t, or -1.
    std::vector<std::int64_t> owner(series_length, -1);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::int64_t t = records[i].window_end_index - offset;
        require(t >= 0 && t < n, ErrorCode::shape, "aligned score index outside the series");
        owner[std::size_t(t)] = std::int64_t(i);
    }
    // Nearest assigned value; ties resolve to the earlier assignment.
    std::vector<std::int64_t> prev(series_length, -1), next(series_length, -1);
    for (std::int64_t t = 0, last = -1; t < n; ++t) {
        if (owner[std::size_t(t)] >= 0) last = t;
        prev[std::size_t(t)] = last;
    }
    for (std::int64_t t = n - 1, last = -1; t >= 0; --t) {
        if (owner[std::size_t(t)] >= 0) last = t;
        next[std::size_t(t)] = last;
    }
    AlignedScores out;
    out.d_rec.resize(series_length);
    out.d_q.resize(series_length);
    out.score.resize(series_length);
    for (std::int64_t t = 0; t < n; ++t) {
        const auto p = prev[std::size_t(t)];
        const auto q = next[std::size_t(t)];
        std::int64_t src = p;
        if (p < 0 || (q >= 0 && q - t < t - p)) src = q;
        const auto& rec = records[std::size_t(owner[std::size_t(src)])];
        out.d_rec[std::size_t(t)] = rec.d_rec;
        out.d_q[std::size_t(t)] = rec.d_q;
        out.score[std::size_t(t)] = rec.score;
    }
    return out;
}

DiagnosticsReport diagnostics_report(std::span<const ComponentScores> scores, const Calibration& cal,
                                     int window, std::span<const std::uint8_t> window_labels) {
    require(scores.size() >= 10, ErrorCode::metric, "diagnostics need at least 10 windows");
    require(window_labels.empty() || window_labels.size() == scores.size(), ErrorCode::shape,
            "window labels must align with window scores");
    DiagnosticsReport rep;
    rep.windows = scores.size();
    rep.entropy_upper_bound = std::log(double(window));

    std::vector<double> dq_norm, kl, rec, q, ent;
    for (const auto& s : scores) {
        dq_norm.push_back(s.dq_norm);
        kl.push_back(s.kl_tail);
        rec.push_back(s.d_rec);
        q.push_back(s.d_q);
        ent.push_back(s.tail_entropy);
    }
    const bool has_attn = !std::isnan(kl.front());
    if (has_attn) {
        rep.spearman_dq_kl = stats::spearman(dq_norm, kl);
        rep.entropy_min = *std::min_element(ent.begin(), ent.end());
        rep.entropy_max = *std::max_element(ent.begin(), ent.end());
        rep.entropy_median = stats::median(ent);
    }
    rep.spearman_rec_q = stats::spearman(rec, q);

    std::size_t both_high = 0, q_only = 0, rec_only = 0, both_low = 0, counted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!window_labels.empty() && !window_labels[i]) continue;
        ++counted;
        const bool high_rec = scores[i].d_rec > cal.median_rec;
        const bool high_q = scores[i].d_q > cal.median_q;
        if (high_rec && high_q) ++both_high;
        else if (high_q) ++q_only;
        else if (high_rec) ++rec_only;
        else ++both_low;
    }
    rep.quadrant_population = window_labels.empty() ? "all_windows" : "anomalous_windows";
    rep.quadrant_windows = counted;
    if (counted > 0) {
        const double n = double(counted);
        rep.frac_both_high = double(both_high) / n;
        rep.frac_high_q_low_rec = double(q_only) / n;
        rep.frac_high_rec_low_q = double(rec_only) / n;
        rep.frac_both_low = double(both_low) / n;
    }
    return rep;
}

}  // namespace axonad

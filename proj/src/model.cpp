#include "axonad/model.hpp"

#include "axonad/error.hpp"
#include "axonad/rng.hpp"

#include <cmath>

namespace axonad {

std::string_view to_string(PredictionTarget t) {
    switch (t) {
        case PredictionTarget::queries: return "queries";
        case PredictionTarget::keys: return "keys";
        case PredictionTarget::values: return "values";
        case PredictionTarget::attn_map_q: return "attn_map_q";
        case PredictionTarget::attn_map_qk: return "attn_map_qk";
        case PredictionTarget::hidden: return "hidden";
    }
    return "queries";
}

PredictionTarget parse_prediction_target(std::string_view s) {
    for (auto t : {PredictionTarget::queries, PredictionTarget::keys, PredictionTarget::values,
                   PredictionTarget::attn_map_q, PredictionTarget::attn_map_qk,
                   PredictionTarget::hidden})
        if (to_string(t) == s) return t;
    fail(ErrorCode::config, "unknown prediction target '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::config, msg); };
    check(window >= 2, "model.window must be >= 2");
    check(channels >= 1, "model.channels must be >= 1");
    check(dim >= 1 && heads >= 1, "model.dim and model.heads must be >= 1");
    check(dim % heads == 0, "model.dim must be divisible by model.heads");
    check(horizon >= 1 && horizon < window, "model.horizon must satisfy 1 <= s < T");
    check(tail >= 1, "model.tail must be >= 1");
    check(!dilations.empty(), "model.dilations must not be empty");
    for (int d : dilations) check(d >= 1, "model.dilations entries must be >= 1");
    check(conv_kernel >= 1, "model.conv_kernel must be >= 1");
    check(predictor_dropout >= 0.0 && predictor_dropout < 1.0, "model.predictor_dropout must be in [0,1)");
    check(eps_cos > 0.0 && eps_rz > 0.0 && ln_eps > 0.0, "epsilons must be positive");
}

std::vector<std::string> tracked_parameter_names(PredictionTarget t) {
    std::vector<std::string> names{"embed.w", "embed.b", "pos_bias", "ln_embed.g", "ln_embed.b"};
    auto add = [&](const char* proj) {
        names.push_back(std::string("attn.") + proj + ".w");
        names.push_back(std::string("attn.") + proj + ".b");
    };
    switch (t) {
        case PredictionTarget::queries:
        case PredictionTarget::attn_map_q: add("q"); break;
        case PredictionTarget::keys: add("k"); break;
        case PredictionTarget::values: add("v"); break;
        case PredictionTarget::attn_map_qk: add("q"); add("k"); break;
        case PredictionTarget::hidden: break;
    }
    return names;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
    const std::size_t F = c.channels, D = c.dim, T = c.window, W = c.ffn_width();
    const std::size_t K = c.conv_kernel, L = c.dilations.size();
    return F * D + D           // embedding
           + T * D             // positional bias
           + 2 * D             // embedding layer norm
           + 4 * (D * D + D)   // q, k, v, attention output
           + 2 * D             // ffn layer norm
           + D * W + W         // ffn in
           + W * D + D         // ffn out
           + D * F + F         // reconstruction head
           + L * (K * D * D + D)  // predictor conv stack
           + D * D + D         // predictor head
           + 2;                // loss log-variances
}

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = bound * (2.0 * uniform01(rng) - 1.0);
    return t;
}

Tensor normal_tensor(std::vector<std::size_t> shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = stddev * standard_normal(rng);
    return t;
}

OnlineLayout build_online(const ModelConfig& c, ParamSet& p, Rng* rng) {
    const std::size_t F = c.channels, D = c.dim, T = c.window, W = c.ffn_width();
    const std::size_t K = c.conv_kernel;
    auto weight = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
        if (!rng) return Tensor(std::move(shape));
        return uniform_tensor(std::move(shape), 1.0 / std::sqrt(double(fan_in)), *rng);
    };
    auto zeros = [](std::size_t n) { return Tensor({n}); };
    auto ones = [](std::size_t n) { return Tensor({n}, 1.0); };

    OnlineLayout l;
    l.embed_w = p.add("embed.w", weight({F, D}, F), true);
    l.embed_b = p.add("embed.b", zeros(D), false);
    l.pos_bias = p.add("pos_bias", rng ? normal_tensor({T, D}, c.pos_init_std, *rng) : Tensor({T, D}), false);
    l.ln_embed_g = p.add("ln_embed.g", ones(D), false);
    l.ln_embed_b = p.add("ln_embed.b", zeros(D), false);
    l.q_w = p.add("attn.q.w", weight({D, D}, D), true);
    l.q_b = p.add("attn.q.b", zeros(D), false);
    l.k_w = p.add("attn.k.w", weight({D, D}, D), true);
    l.k_b = p.add("attn.k.b", zeros(D), false);
    l.v_w = p.add("attn.v.w", weight({D, D}, D), true);
    l.v_b = p.add("attn.v.b", zeros(D), false);
    l.out_w = p.add("attn.out.w", weight({D, D}, D), true);
    l.out_b = p.add("attn.out.b", zeros(D), false);
    l.ln_ffn_g = p.add("ln_ffn.g", ones(D), false);
    l.ln_ffn_b = p.add("ln_ffn.b", zeros(D), false);
    l.ffn1_w = p.add("ffn.1.w", weight({D, W}, D), true);
    l.ffn1_b = p.add("ffn.1.b", zeros(W), false);
    l.ffn2_w = p.add("ffn.2.w", weight({W, D}, W), true);
    l.ffn2_b = p.add("ffn.2.b", zeros(D), false);
    l.head_w = p.add("head.w", weight({D, F}, D), true);
    l.head_b = p.add("head.b", zeros(F), false);
    for (std::size_t i = 0; i < c.dilations.size(); ++i) {
        const std::string base = "pred.conv" + std::to_string(i);
        l.conv_w.push_back(p.add(base + ".w", weight({K, D, D}, K * D), true));
        l.conv_b.push_back(p.add(base + ".b", zeros(D), false));
    }
    l.pred_w = p.add("pred.head.w", weight({D, D}, D), true);
    l.pred_b = p.add("pred.head.b", zeros(D), false);
    l.log_var_rec = p.add("loss.log_var_rec", Tensor({1}), false);
    l.log_var_q = p.add("loss.log_var_q", Tensor({1}), false);
    return l;
}

RowVec rowvec(const Tensor& t) { return t.row(); }

}  // namespace

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    layout_ = build_online(cfg_, online_, &rng);
    reset_target_from_online();
}

Model::Model(ModelConfig cfg, ParamSet online, ParamSet target) : cfg_(std::move(cfg)) {
    cfg_.validate();
    ParamSet reference;
    layout_ = build_online(cfg_, reference, nullptr);
    require(online.size() == reference.size(), ErrorCode::shape,
            "online parameter count does not match the model configuration");
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto& want = reference.entry(i);
        const auto& got = online.entry(i);
        require(want.name == got.name && want.value.shape() == got.value.shape(), ErrorCode::shape,
                "online parameter '" + got.name + "' " + shape_string(got.value.shape()) +
                    " does not match expected '" + want.name + "' " + shape_string(want.value.shape()));
        online.entry(i).decay = want.decay;
    }
    online_ = std::move(online);
    const auto names = tracked_parameter_names(cfg_.prediction_target);
    require(target.size() == names.size(), ErrorCode::shape, "target parameter set has the wrong size");
    for (std::size_t i = 0; i < names.size(); ++i) {
        require(target.entry(i).name == names[i] &&
                    target[i].shape() == online_.at(names[i]).shape(),
                ErrorCode::shape, "target parameter '" + target.entry(i).name + "' is inconsistent");
    }
    target_ = std::move(target);
}

void Model::reset_target_from_online() {
    ParamSet t;
    for (const auto& name : tracked_parameter_names(cfg_.prediction_target)) {
        const auto idx = *online_.find(name);
        t.add(name, online_[idx], online_.entry(idx).decay);
    }
    target_ = std::move(t);
}

// ---------------------------------------------------------------------------

Mat embed(const Mat& x, const Model& m, LayerNormCache* cache) {
    const auto& c = m.config();
    const auto& l = m.layout();
    require(x.rows() == c.window && x.cols() == c.channels, ErrorCode::shape,
            "window shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                " does not match model " + std::to_string(c.window) + "x" + std::to_string(c.channels));
    Mat e = x * m.param(l.embed_w).mat();
    e.rowwise() += m.param(l.embed_b).row();
    e += m.param(l.pos_bias).mat();
    return layer_norm(e, rowvec(m.param(l.ln_embed_g)), rowvec(m.param(l.ln_embed_b)), c.ln_eps, cache);
}

std::vector<Mat> attention_maps(const Mat& q, const Mat& k, int heads, Eigen::Index first_row) {
    const Eigen::Index dh = q.cols() / heads;
    const Eigen::Index n = q.rows() - first_row;
    const double scale = 1.0 / std::sqrt(double(dh));
    std::vector<Mat> maps(heads);
    for (int h = 0; h < heads; ++h) {
        Mat s = Mat::Zero(q.rows(), k.rows());
        if (n > 0) {
            s.bottomRows(n).noalias() =
                scale * q.block(first_row, h * dh, n, dh) * k.middleCols(h * dh, dh).transpose();
            softmax_rows(s.bottomRows(n));
        }
        maps[h] = std::move(s);
    }
    return maps;
}

Reconstruction reconstruct(const Mat& h, const Model& m) {
    const auto& c = m.config();
    const auto& l = m.layout();
    const Eigen::Index dh = c.head_dim();
    Reconstruction out;
    out.q = h * m.param(l.q_w).mat();
    out.q.rowwise() += m.param(l.q_b).row();
    out.k = h * m.param(l.k_w).mat();
    out.k.rowwise() += m.param(l.k_b).row();
    out.v = h * m.param(l.v_w).mat();
    out.v.rowwise() += m.param(l.v_b).row();
    out.attn = attention_maps(out.q, out.k, c.heads);
    Mat z(h.rows(), h.cols());
    for (int hd = 0; hd < c.heads; ++hd)
        z.middleCols(hd * dh, dh).noalias() = out.attn[hd] * out.v.middleCols(hd * dh, dh);
    Mat u = h + z * m.param(l.out_w).mat();
    u.rowwise() += m.param(l.out_b).row();
    Mat n2 = layer_norm(u, rowvec(m.param(l.ln_ffn_g)), rowvec(m.param(l.ln_ffn_b)), c.ln_eps);
    Mat f = n2 * m.param(l.ffn1_w).mat();
    f.rowwise() += m.param(l.ffn1_b).row();
    f = f.cwiseMax(0.0);
    u.noalias() += f * m.param(l.ffn2_w).mat();
    u.rowwise() += m.param(l.ffn2_b).row();
    out.x_hat = u * m.param(l.head_w).mat();
    out.x_hat.rowwise() += m.param(l.head_b).row();
    return out;
}

Mat shift_history(const Mat& h, int s) {
    require(s >= 1 && s < h.rows(), ErrorCode::config, "history shift must satisfy 1 <= s < T");
    Mat out = Mat::Zero(h.rows(), h.cols());
    out.bottomRows(h.rows() - s) = h.topRows(h.rows() - s);
    return out;
}

std::vector<Eigen::Index> predictor_first_rows(const ModelConfig& c, Eigen::Index first_row) {
    const std::size_t n = c.dilations.size();
    std::vector<Eigen::Index> first(n + 1);
    first[n - 1] = first_row;
    for (std::size_t i = n; i-- > 0;) {
        const Eigen::Index reach = Eigen::Index(c.conv_kernel - 1) * c.dilations[i];
        const Eigen::Index below = std::max<Eigen::Index>(0, first[i] - reach);
        if (i > 0) first[i - 1] = below;
        else first[n] = below;
    }
    return first;
}

Mat predict_queries(const Mat& h_shift, const Model& m, Eigen::Index first_row) {
    const auto& c = m.config();
    const auto& l = m.layout();
    const auto first = predictor_first_rows(c, first_row);
    Mat cur = h_shift;
    for (std::size_t i = 0; i < c.dilations.size(); ++i) {
        const RowVec b = m.param(l.conv_b[i]).row();
        cur = causal_dilated_conv1d(cur, m.param(l.conv_w[i]).mat(), &b, c.dilations[i], first[i]);
        cur = cur.cwiseMax(0.0);
    }
    Mat q = Mat::Zero(cur.rows(), c.dim);
    const Eigen::Index n = cur.rows() - first_row;
    if (n > 0) {
        q.bottomRows(n).noalias() = cur.bottomRows(n) * m.param(l.pred_w).mat();
        q.bottomRows(n).rowwise() += m.param(l.pred_b).row();
    }
    return q;
}

Mat target_features(const Mat& x, const Model& m, TargetFeature which, Eigen::Index first_row) {
    const auto& c = m.config();
    const auto& t = m.target();
    require(x.rows() == c.window && x.cols() == c.channels, ErrorCode::shape,
            "window shape does not match model configuration");
    const Eigen::Index n = x.rows() - first_row;
    Mat out = Mat::Zero(x.rows(), c.dim);
    if (n <= 0) return out;
    Mat e = x.bottomRows(n) * t.at("embed.w").mat();
    e.rowwise() += t.at("embed.b").row();
    e += t.at("pos_bias").mat().bottomRows(n);
    Mat h = layer_norm(e, rowvec(t.at("ln_embed.g")), rowvec(t.at("ln_embed.b")), c.ln_eps);
    if (which == TargetFeature::hidden) {
        out.bottomRows(n) = h;
        return out;
    }
    const char* proj = which == TargetFeature::queries ? "attn.q" : which == TargetFeature::keys ? "attn.k" : "attn.v";
    const std::string base(proj);
    out.bottomRows(n).noalias() = h * t.at(base + ".w").mat();
    out.bottomRows(n).rowwise() += t.at(base + ".b").row();
    return out;
}

ForwardOutputs forward_full(const Mat& x, const Model& m) {
    const auto& c = m.config();
    ForwardOutputs out;
    out.h_on = embed(x, m);
    auto rec = reconstruct(out.h_on, m);
    out.x_hat = std::move(rec.x_hat);
    out.q_rec = std::move(rec.q);
    out.k = std::move(rec.k);
    out.v = std::move(rec.v);
    out.attn = std::move(rec.attn);
    out.h_shift = shift_history(out.h_on, c.horizon);
    out.q_pred = predict_queries(out.h_shift, m);
    if (m.target().find("attn.q.w"))
        out.q_tgt = target_queries(x, m);
    return out;
}

DiagnosticAttention diagnostic_attention(const ForwardOutputs& out, const Model& m) {
    require(out.q_tgt.size() > 0, ErrorCode::config, "diagnostic attention needs target queries");
    return {attention_maps(out.q_tgt, out.k, m.config().heads),
            attention_maps(out.q_pred, out.k, m.config().heads)};
}

// ---------------------------------------------------------------------------
// ModelTape
// ---------------------------------------------------------------------------

ModelTape::ModelTape(const Model& m, const Mat& x, double dropout_rate, std::uint64_t dropout_seed,
                     Eigen::Index pred_first_row)
    : m_(m), x_(x) {
    const auto& c = m.config();
    const auto& l = m.layout();
    const Eigen::Index dh = c.head_dim();
    const Eigen::Index T = c.window;

    h_ = embed(x, m, &ln_embed_);

    q_ = h_ * m.param(l.q_w).mat();
    q_.rowwise() += m.param(l.q_b).row();
    k_ = h_ * m.param(l.k_w).mat();
    k_.rowwise() += m.param(l.k_b).row();
    v_ = h_ * m.param(l.v_w).mat();
    v_.rowwise() += m.param(l.v_b).row();
    attn_ = attention_maps(q_, k_, c.heads);
    z_.resize(T, c.dim);
    for (int hd = 0; hd < c.heads; ++hd)
        z_.middleCols(hd * dh, dh).noalias() = attn_[hd] * v_.middleCols(hd * dh, dh);
    u_ = h_ + z_ * m.param(l.out_w).mat();
    u_.rowwise() += m.param(l.out_b).row();
    n2_ = layer_norm(u_, rowvec(m.param(l.ln_ffn_g)), rowvec(m.param(l.ln_ffn_b)), c.ln_eps, &ln_ffn_);
    ffn_pre_ = n2_ * m.param(l.ffn1_w).mat();
    ffn_pre_.rowwise() += m.param(l.ffn1_b).row();
    ffn_act_ = ffn_pre_.cwiseMax(0.0);
    r_ = u_ + ffn_act_ * m.param(l.ffn2_w).mat();
    r_.rowwise() += m.param(l.ffn2_b).row();
    x_hat_ = r_ * m.param(l.head_w).mat();
    x_hat_.rowwise() += m.param(l.head_b).row();

    // Predictor.
    const std::size_t n_layers = c.dilations.size();
    const auto first = predictor_first_rows(c, pred_first_row);
    conv_first_.assign(first.begin(), first.begin() + n_layers);
    shift_first_ = first[n_layers];
    Mat cur = shift_history(h_, c.horizon);
    Rng rng(dropout_seed);
    const double keep_scale = dropout_rate > 0.0 ? 1.0 / (1.0 - dropout_rate) : 1.0;
    for (std::size_t i = 0; i < n_layers; ++i) {
        const RowVec b = m.param(l.conv_b[i]).row();
        Mat pre = causal_dilated_conv1d(cur, m.param(l.conv_w[i]).mat(), &b, c.dilations[i], conv_first_[i]);
        Mat act = pre.cwiseMax(0.0);
        if (dropout_rate > 0.0) {
            Mat keep = Mat::Zero(T, c.dim);
            for (Eigen::Index r = conv_first_[i]; r < T; ++r)
                for (Eigen::Index j = 0; j < c.dim; ++j)
                    keep(r, j) = uniform01(rng) < dropout_rate ? 0.0 : keep_scale;
            act.array() *= keep.array();
            conv_keep_.push_back(std::move(keep));
        }
        conv_in_.push_back(std::move(cur));
        conv_pre_.push_back(std::move(pre));
        cur = std::move(act);
    }
    conv_out_ = std::move(cur);
    q_pred_ = Mat::Zero(T, c.dim);
    const Eigen::Index n = T - pred_first_row;
    if (n > 0) {
        q_pred_.bottomRows(n).noalias() = conv_out_.bottomRows(n) * m.param(l.pred_w).mat();
        q_pred_.bottomRows(n).rowwise() += m.param(l.pred_b).row();
    }
}

void ModelTape::backward(const Mat& d_xhat, const Mat& d_qpred, ParamSet& g) const {
    const auto& c = m_.config();
    const auto& l = m_.layout();
    const Eigen::Index dh = c.head_dim();
    const Eigen::Index T = c.window;
    const double scale = 1.0 / std::sqrt(double(dh));

    // Reconstruction head and FFN.
    g[l.head_w].mat().noalias() += r_.transpose() * d_xhat;
    g[l.head_b].row() += d_xhat.colwise().sum();
    Mat d_r = d_xhat * m_.param(l.head_w).mat().transpose();

    g[l.ffn2_w].mat().noalias() += ffn_act_.transpose() * d_r;
    g[l.ffn2_b].row() += d_r.colwise().sum();
    Mat d_f = d_r * m_.param(l.ffn2_w).mat().transpose();
    d_f.array() *= (ffn_pre_.array() > 0.0).cast<double>();
    g[l.ffn1_w].mat().noalias() += n2_.transpose() * d_f;
    g[l.ffn1_b].row() += d_f.colwise().sum();
    Mat d_n2 = d_f * m_.param(l.ffn1_w).mat().transpose();
    Mat d_u = d_r + layer_norm_backward(d_n2, ln_ffn_, rowvec(m_.param(l.ln_ffn_g)),
                                        g[l.ln_ffn_g].row(), g[l.ln_ffn_b].row());

    // Attention block.
    g[l.out_w].mat().noalias() += z_.transpose() * d_u;
    g[l.out_b].row() += d_u.colwise().sum();
    Mat d_z = d_u * m_.param(l.out_w).mat().transpose();
    Mat d_q(T, c.dim), d_k(T, c.dim), d_v(T, c.dim);
    for (int hd = 0; hd < c.heads; ++hd) {
        const auto cols = [&](const Mat& mm) { return mm.middleCols(hd * dh, dh); };
        Mat d_a = cols(d_z) * cols(v_).transpose();
        d_v.middleCols(hd * dh, dh).noalias() = attn_[hd].transpose() * cols(d_z);
        Mat d_s = softmax_rows_backward(attn_[hd], d_a);
        d_q.middleCols(hd * dh, dh).noalias() = scale * d_s * cols(k_);
        d_k.middleCols(hd * dh, dh).noalias() = scale * d_s.transpose() * cols(q_);
    }
    g[l.q_w].mat().noalias() += h_.transpose() * d_q;
    g[l.q_b].row() += d_q.colwise().sum();
    g[l.k_w].mat().noalias() += h_.transpose() * d_k;
    g[l.k_b].row() += d_k.colwise().sum();
    g[l.v_w].mat().noalias() += h_.transpose() * d_v;
    g[l.v_b].row() += d_v.colwise().sum();
    Mat d_h = d_u;
    d_h.noalias() += d_q * m_.param(l.q_w).mat().transpose();
    d_h.noalias() += d_k * m_.param(l.k_w).mat().transpose();
    d_h.noalias() += d_v * m_.param(l.v_w).mat().transpose();

    // Predictor.
    const Eigen::Index first = pred_first_row();
    const Eigen::Index n = T - first;
    if (n > 0) {
        g[l.pred_w].mat().noalias() += conv_out_.bottomRows(n).transpose() * d_qpred.bottomRows(n);
        g[l.pred_b].row() += d_qpred.bottomRows(n).colwise().sum();
        Mat d_cur = Mat::Zero(T, c.dim);
        d_cur.bottomRows(n).noalias() = d_qpred.bottomRows(n) * m_.param(l.pred_w).mat().transpose();
        for (std::size_t i = c.dilations.size(); i-- > 0;) {
            if (!conv_keep_.empty()) d_cur.array() *= conv_keep_[i].array();
            d_cur.array() *= (conv_pre_[i].array() > 0.0).cast<double>();
            d_cur = causal_dilated_conv1d_backward(d_cur, conv_in_[i], m_.param(l.conv_w[i]).mat(),
                                                   c.dilations[i], g[l.conv_w[i]].mat(),
                                                   g[l.conv_b[i]].row(), conv_first_[i]);
        }
        // Undo the history shift: shifted row r came from h row r - s.
        const int s = c.horizon;
        d_h.topRows(T - s) += d_cur.bottomRows(T - s);
    }

    // Embedding.
    Mat d_e = layer_norm_backward(d_h, ln_embed_, rowvec(m_.param(l.ln_embed_g)),
                                  g[l.ln_embed_g].row(), g[l.ln_embed_b].row());
    g[l.embed_w].mat().noalias() += x_.transpose() * d_e;
    g[l.embed_b].row() += d_e.colwise().sum();
    g[l.pos_bias].mat() += d_e;
}

std::vector<bool> ModelTape::relu_pattern() const {
    std::vector<bool> bits;
    for (Eigen::Index i = 0; i < ffn_pre_.size(); ++i) bits.push_back(ffn_pre_.data()[i] > 0.0);
    for (std::size_t l = 0; l < conv_pre_.size(); ++l)
        for (Eigen::Index r = conv_first_[l]; r < conv_pre_[l].rows(); ++r)
            for (Eigen::Index j = 0; j < conv_pre_[l].cols(); ++j) bits.push_back(conv_pre_[l](r, j) > 0.0);
    return bits;
}

}  // namespace axonad

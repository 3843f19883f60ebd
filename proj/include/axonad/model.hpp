#pragma once

#include "axonad/kernels.hpp"
#include "axonad/tensor.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace axonad {

/// What the predictive branch is trained to match. `queries` is the default
/// detector; the rest are ablation variants.
enum class PredictionTarget { queries, keys, values, attn_map_q, attn_map_qk, hidden };

std::string_view to_string(PredictionTarget t);
PredictionTarget parse_prediction_target(std::string_view s);

struct ModelConfig {
    int window = 100;    // T
    int channels = 8;    // F
    int dim = 128;       // D
    int heads = 8;       // N_h
    int horizon = 1;     // s
    int tail = 10;       // k
    std::vector<int> dilations{1, 2, 4, 8};
    int conv_kernel = 3;
    double predictor_dropout = 0.1;
    double eps_cos = 1e-8;
    double eps_rz = 1e-8;
    double ln_eps = 1e-5;
    double pos_init_std = 0.02;
    PredictionTarget prediction_target = PredictionTarget::queries;

    int head_dim() const { return dim / heads; }
    int ffn_width() const { return 2 * dim; }
    /// Heads used when comparing predicted and target features; the hidden
    /// target is compared as one D-dimensional vector.
    int compare_heads() const { return prediction_target == PredictionTarget::hidden ? 1 : heads; }

    /// Throws `E_CONFIG` on any violated invariant.
    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Indices of each online parameter array inside the online ParamSet.
struct OnlineLayout {
    std::size_t embed_w, embed_b, pos_bias, ln_embed_g, ln_embed_b;
    std::size_t q_w, q_b, k_w, k_b, v_w, v_b, out_w, out_b;
    std::size_t ln_ffn_g, ln_ffn_b, ffn1_w, ffn1_b, ffn2_w, ffn2_b;
    std::size_t head_w, head_b;
    std::vector<std::size_t> conv_w, conv_b;
    std::size_t pred_w, pred_b;
    std::size_t log_var_rec, log_var_q;
};

/// Names of the online parameters mirrored by the EMA target for a given
/// prediction target. Always includes the embedding, positional bias and
/// embedding layer norm.
std::vector<std::string> tracked_parameter_names(PredictionTarget t);

/// Closed-form online parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& cfg);

class Model {
public:
    /// Fresh model: weights ~ U(+-1/sqrt(fan_in)), positional bias ~ N(0, 0.02),
    /// biases zero, layer norms identity, log-variances zero. The target is a
    /// copy of the tracked online subset.
    Model(ModelConfig cfg, std::uint64_t seed);

    /// Reassembles a model from stored parameter sets; shapes are validated.
    Model(ModelConfig cfg, ParamSet online, ParamSet target);

    const ModelConfig& config() const noexcept { return cfg_; }
    const OnlineLayout& layout() const noexcept { return layout_; }
    ParamSet& online() noexcept { return online_; }
    const ParamSet& online() const noexcept { return online_; }
    ParamSet& target() noexcept { return target_; }
    const ParamSet& target() const noexcept { return target_; }

    /// Copies the tracked subset of the online parameters into the target.
    void reset_target_from_online();

    const Tensor& param(std::size_t i) const { return online_[i]; }

private:
    ModelConfig cfg_;
    OnlineLayout layout_;
    ParamSet online_;
    ParamSet target_;
};

// ---------------------------------------------------------------------------
// Forward operations (evaluation mode; predictor dropout off)
// ---------------------------------------------------------------------------

/// LN(X W_e + b_e + P) with the online parameters.
Mat embed(const Mat& x, const Model& m, LayerNormCache* cache = nullptr);

struct Reconstruction {
    Mat x_hat;              // T x F
    Mat q, k, v;            // T x D; head h occupies columns [h*d_h, (h+1)*d_h)
    std::vector<Mat> attn;  // N_h matrices of T x T
};

Reconstruction reconstruct(const Mat& h, const Model& m);

/// Row r (0-based) is zero for r < s, else h[r - s].
Mat shift_history(const Mat& h, int s);

/// First output row each predictor conv layer must produce so the head can
/// emit rows >= `first_row`. Entry l is for layer l; the trailing entry is
/// the first row of the stream read by layer 0.
std::vector<Eigen::Index> predictor_first_rows(const ModelConfig& cfg, Eigen::Index first_row);

/// Causal conv stack + linear head. Only rows >= `first_row` are computed.
Mat predict_queries(const Mat& h_shift, const Model& m, Eigen::Index first_row = 0);

/// Which EMA-side feature to produce.
enum class TargetFeature { queries, keys, values, hidden };

/// EMA target features for rows >= `first_row` (other rows zero). `hidden`
/// returns the target embedding itself.
Mat target_features(const Mat& x, const Model& m, TargetFeature which, Eigen::Index first_row = 0);

/// EMA target queries, Q_tgt = LN(X W_e' + b_e' + P') W_q' + b_q'.
inline Mat target_queries(const Mat& x, const Model& m) {
    return target_features(x, m, TargetFeature::queries);
}

/// softmax(Q K^T / sqrt(d_h)) per head for rows >= `first_row`.
std::vector<Mat> attention_maps(const Mat& q, const Mat& k, int heads, Eigen::Index first_row = 0);

struct ForwardOutputs {
    Mat h_on;                    // T x D
    Mat x_hat;                   // T x F
    Mat q_rec, k, v;             // T x D (N_h x T x d_h as column blocks)
    std::vector<Mat> attn;       // N_h x (T x T)
    Mat h_shift;                 // T x D
    Mat q_pred;                  // T x D
    Mat q_tgt;                   // T x D
};

ForwardOutputs forward_full(const Mat& x, const Model& m);

/// Attention maps built from the EMA target queries and from the predicted
/// queries, both against the online keys. Diagnostic use only.
struct DiagnosticAttention {
    std::vector<Mat> target;
    std::vector<Mat> predicted;
};
DiagnosticAttention diagnostic_attention(const ForwardOutputs& out, const Model& m);

// ---------------------------------------------------------------------------
// Training-mode forward with recorded intermediates (the gradient tape for
// the fixed architecture)
// ---------------------------------------------------------------------------

class ModelTape {
public:
    /// `dropout_rate` of 0 gives evaluation mode. Predictor outputs are only
    /// computed for rows >= `pred_first_row`.
    ModelTape(const Model& m, const Mat& x, double dropout_rate, std::uint64_t dropout_seed,
              Eigen::Index pred_first_row = 0);

    const Mat& x_hat() const noexcept { return x_hat_; }
    const Mat& q_pred() const noexcept { return q_pred_; }
    const Mat& h() const noexcept { return h_; }
    const Mat& q() const noexcept { return q_; }
    const Mat& k() const noexcept { return k_; }
    const Mat& v() const noexcept { return v_; }
    const std::vector<Mat>& attn() const noexcept { return attn_; }
    Eigen::Index pred_first_row() const noexcept { return conv_first_.back(); }

    /// Accumulates into `grads` (online layout) the gradient of a scalar loss
    /// whose partials with respect to X_hat and Q_pred are given. Rows of
    /// `d_qpred` before `pred_first_row()` must be zero.
    void backward(const Mat& d_xhat, const Mat& d_qpred, ParamSet& grads) const;

    /// Sign pattern of every ReLU pre-activation on the tape (FFN, then each
    /// conv layer over its computed rows). Two parameter points with equal
    /// patterns lie on the same smooth piece of the loss.
    std::vector<bool> relu_pattern() const;

private:
    const Model& m_;
    Mat x_;
    LayerNormCache ln_embed_;
    Mat h_;
    Mat q_, k_, v_;
    std::vector<Mat> attn_;
    Mat z_;
    Mat u_;
    LayerNormCache ln_ffn_;
    Mat n2_;
    Mat ffn_pre_;
    Mat ffn_act_;
    Mat r_;
    Mat x_hat_;
    std::vector<Mat> conv_in_;       // input of each conv layer
    std::vector<Mat> conv_pre_;      // pre-activation output of each conv layer
    std::vector<Mat> conv_keep_;     // dropout keep-scale (0 or 1/(1-p)), empty in eval mode
    std::vector<Eigen::Index> conv_first_;  // first output row computed per layer
    Eigen::Index shift_first_ = 0;   // first row of the shifted stream read by layer 0
    Mat conv_out_;                   // final conv activation (head input)
    Mat q_pred_;
};

}  // namespace axonad

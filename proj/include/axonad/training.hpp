#pragma once

#include "axonad/data.hpp"
#include "axonad/model.hpp"
#include "axonad/rng.hpp"
#include "axonad/scoring.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace axonad {

struct TrainConfig {
    double learning_rate = 5e-4;
    int batch_size = 128;
    int max_epochs = 50;
    int patience = 3;
    double weight_decay = 1e-5;
    double grad_clip = 1.0;
    double mask_ratio = 0.5;
    double block_fraction = 0.5;
    double ema_momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 2024;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Sorted 1-based masked timesteps, all in {s+1, ..., T}.
using MaskSet = std::vector<int>;

/// Contiguous non-overlapping blocks inside the later half of V = {s+1..T},
/// falling back to all of V when they do not fit there. Block starts are
/// uniform over all valid non-overlapping placements.
MaskSet sample_mask(int window, int horizon, double mask_ratio, double block_fraction, Rng& rng);

/// (1/T) * sum_t ||x_hat_t - x_t||^2
double loss_recon(const Mat& x_hat, const Mat& x);

/// Mean over masked rows and heads of 1 - cos(pred, target). When `grad` is
/// given, `scale * dL/dpred` is added into it (target is a constant).
double loss_jepa(const Mat& pred, const Mat& target, const MaskSet& mask, int heads, double eps_cos,
                 Mat* grad = nullptr, double scale = 1.0);

/// Mean over masked rows and heads of KL(softmax(q_tgt k^T) || softmax(q_pred k^T))
/// with keys held constant. Gradient handling as in `loss_jepa`.
double loss_attention_kl(const Mat& q_pred, const Mat& q_tgt, const Mat& keys, const MaskSet& mask,
                         int heads, Mat* grad = nullptr, double scale = 1.0);

struct LossBreakdown {
    double l_rec = 0.0;
    double l_jepa = 0.0;
    double total = 0.0;
    double s_rec = 0.0;
    double s_q = 0.0;
};

/// exp(-s_rec) L_rec + exp(-s_q) L_JEPA + s_rec + s_q
LossBreakdown combine_losses(double l_rec, double l_jepa, double s_rec, double s_q);

/// target <- m * target + (1 - m) * online over the tracked subset.
void ema_update(ParamSet& target, const ParamSet& online, double m);

struct AdamState {
    ParamSet m1, m2;
    std::int64_t step = 0;

    static AdamState for_params(const ParamSet& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// Global-norm clipping then AdamW with bias correction. Decoupled decay
/// applies only to entries flagged `decay`. Returns the pre-clip norm.
/// Throws `E_NUMERIC` on non-finite gradients.
double optimizer_step(ParamSet& params, const ParamSet& grads, AdamState& state, const TrainConfig& cfg);

/// One minibatch sample: window plus the randomness it consumes.
struct BatchItem {
    const Mat* x;
    MaskSet mask;
    std::uint64_t dropout_seed = 0;
};

/// Minibatch loss with the uncertainty weights read from the model. When
/// `grads` is given it receives d total / d online (overwritten).
LossBreakdown batch_loss(const Model& m, const std::vector<BatchItem>& batch, double dropout_rate,
                         ParamSet* grads = nullptr);

class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}
    /// Records one validation value; returns true on strict improvement.
    bool update(double value);
    bool should_stop() const noexcept { return bad_epochs_ >= patience_; }
    double best() const noexcept { return best_; }
    int best_epoch() const noexcept { return best_epoch_; }

private:
    int patience_;
    int epoch_ = 0;
    int bad_epochs_ = 0;
    int best_epoch_ = 0;
    double best_ = 0.0;
    bool seen_ = false;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_total = 0.0;
    double train_rec = 0.0;
    double train_jepa = 0.0;
    double val_rec = 0.0;
    double s_rec = 0.0;
    double s_q = 0.0;
    double seconds = 0.0;
};

struct FitResult {
    Model model;
    Calibration calibration;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double fit_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;
/// Called after every optimizer step and EMA update.
using StepCallback = std::function<void(const Model&, int epoch, std::size_t batch)>;

/// Fresh model seeded from the run seed's initialization substream.
Model initial_model(const ModelConfig& cfg, std::uint64_t run_seed);

/// Mean reconstruction loss over windows in evaluation mode.
double mean_recon_loss(const Model& m, const WindowSequence& windows);

/// Trains from `init` (copied), restores the best-validation parameters, and
/// calibrates on the training windows.
FitResult fit(const WindowSequence& train, const WindowSequence& val, const Model& init,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {}, const StepCallback& on_step = {});

/// Score every window in evaluation mode with a `Scorer`, in order.
std::vector<ComponentScores> score_windows(const Model& m, const WindowSequence& windows);

}  // namespace axonad

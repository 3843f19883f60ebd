#include "axonad/training.hpp"

#include "axonad/error.hpp"
#include "axonad/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace axonad {

namespace {

// Substream tags.
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kShuffle = 2;
constexpr std::uint64_t kMask = 3;
constexpr std::uint64_t kDropout = 4;

constexpr std::size_t kChunk = 16;

}  // namespace

void TrainConfig::validate() const {
    auto check = [](bool ok, const std::string& msg) { require(ok, ErrorCode::config, msg); };
    check(learning_rate > 0.0, "train.learning_rate must be > 0");
    check(batch_size >= 1, "train.batch_size must be >= 1");
    check(max_epochs >= 1, "train.max_epochs must be >= 1");
    check(patience >= 1, "train.patience must be >= 1");
    check(weight_decay >= 0.0, "train.weight_decay must be >= 0");
    check(grad_clip > 0.0, "train.grad_clip must be > 0");
    check(mask_ratio > 0.0 && mask_ratio <= 1.0, "train.mask_ratio must be in (0,1]");
    check(block_fraction > 0.0 && block_fraction <= 1.0, "train.block_fraction must be in (0,1]");
    check(ema_momentum >= 0.0 && ema_momentum < 1.0, "train.ema_momentum must be in [0,1)");
    check(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "train betas must be in [0,1)");
    check(adam_eps > 0.0, "train.adam_eps must be > 0");
}

MaskSet sample_mask(int window, int horizon, double mask_ratio, double block_fraction, Rng& rng) {
    const int n_valid = window - horizon;
    require(n_valid >= 1 && horizon >= 0, ErrorCode::config, "mask needs a nonempty range {s+1..T}");
    require(mask_ratio > 0.0 && mask_ratio <= 1.0 && block_fraction > 0.0 && block_fraction <= 1.0,
            ErrorCode::config, "mask_ratio and block_fraction must be in (0,1]");
    const int budget = std::max(1, int(std::lround(mask_ratio * n_valid)));
    const int block = std::max(1, int(std::lround(block_fraction * budget)));
    const int n_blocks = std::max(1, budget / block);
    const int used = n_blocks * block;

    int lo = horizon + 1 + n_valid / 2;  // later half of V
    if (window - lo + 1 < used) lo = horizon + 1;
    const int region = window - lo + 1;
    const int slack = std::max(0, region - used);

    // Non-overlapping placements correspond to choosing n_blocks of
    // slack + n_blocks slots (stars and bars).
    std::vector<int> slots(std::size_t(slack + n_blocks));
    std::iota(slots.begin(), slots.end(), 0);
    for (int i = 0; i < n_blocks; ++i)
        std::swap(slots[std::size_t(i)],
                  slots[std::size_t(uniform_int(rng, i, std::int64_t(slots.size()) - 1))]);
    std::vector<int> chosen(slots.begin(), slots.begin() + n_blocks);
    std::sort(chosen.begin(), chosen.end());

    MaskSet mask;
    mask.reserve(std::size_t(std::min(used, region)));
    for (int i = 0; i < n_blocks; ++i) {
        const int start = lo + chosen[std::size_t(i)] - i + i * block;
        for (int t = start; t < start + block && t <= window; ++t) mask.push_back(t);
    }
    return mask;
}

double loss_recon(const Mat& x_hat, const Mat& x) { return recon_score(x_hat, x); }

namespace {

void check_mask(const MaskSet& mask, Eigen::Index rows) {
    require(!mask.empty(), ErrorCode::config, "empty mask");
    require(mask.front() >= 1 && mask.back() <= rows, ErrorCode::shape, "mask index outside the window");
}

}  // namespace

double loss_jepa(const Mat& pred, const Mat& target, const MaskSet& mask, int heads, double eps_cos,
                 Mat* grad, double scale) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), ErrorCode::shape,
            "predicted and target features must be aligned");
    check_mask(mask, pred.rows());
    const Eigen::Index dh = pred.cols() / heads;
    const double norm = 1.0 / double(mask.size() * std::size_t(heads));
    double acc = 0.0;
    for (int t : mask) {
        const Eigen::Index r = t - 1;
        for (int h = 0; h < heads; ++h) {
            const auto a = pred.row(r).segment(h * dh, dh);
            const auto b = target.row(r).segment(h * dh, dh);
            acc += 1.0 - cosine_similarity(a, b, eps_cos);
            if (grad) cosine_grad_a(a, b, eps_cos, -scale * norm, grad->row(r).segment(h * dh, dh));
        }
    }
    return acc * norm;
}

double loss_attention_kl(const Mat& q_pred, const Mat& q_tgt, const Mat& keys, const MaskSet& mask,
                         int heads, Mat* grad, double scale) {
    check_mask(mask, q_pred.rows());
    const Eigen::Index dh = q_pred.cols() / heads;
    const double inv_sqrt = 1.0 / std::sqrt(double(dh));
    const double norm = 1.0 / double(mask.size() * std::size_t(heads));
    double acc = 0.0;
    for (int h = 0; h < heads; ++h) {
        const auto k = keys.middleCols(h * dh, dh);
        for (int t : mask) {
            const Eigen::Index r = t - 1;
            Mat lt = inv_sqrt * q_tgt.row(r).segment(h * dh, dh) * k.transpose();
            Mat lp = inv_sqrt * q_pred.row(r).segment(h * dh, dh) * k.transpose();
            softmax_rows(lt);
            softmax_rows(lp);
            acc += kl_row(lt.row(0), lp.row(0));
            if (grad) {
                const RowVec d_logits = (scale * norm) * (lp - lt);
                grad->row(r).segment(h * dh, dh) += inv_sqrt * d_logits * k;
            }
        }
    }
    return acc * norm;
}

LossBreakdown combine_losses(double l_rec, double l_jepa, double s_rec, double s_q) {
    LossBreakdown out;
    out.l_rec = l_rec;
    out.l_jepa = l_jepa;
    out.s_rec = s_rec;
    out.s_q = s_q;
    out.total = std::exp(-s_rec) * l_rec + std::exp(-s_q) * l_jepa + s_rec + s_q;
    return out;
}

void ema_update(ParamSet& target, const ParamSet& online, double m) {
    require(m >= 0.0 && m < 1.0, ErrorCode::config, "EMA momentum must be in [0,1)");
    for (auto& p : target) {
        const auto idx = online.find(p.name);
        require(idx.has_value(), ErrorCode::shape, "EMA target parameter '" + p.name + "' has no online twin");
        const Tensor& o = online[*idx];
        require(o.shape() == p.value.shape(), ErrorCode::shape, "EMA shape mismatch for '" + p.name + "'");
        auto t = p.value.data();
        const auto s = o.data();
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = m * t[i] + (1.0 - m) * s[i];
    }
}

double optimizer_step(ParamSet& params, const ParamSet& grads, AdamState& st, const TrainConfig& cfg) {
    require(params.size() == grads.size() && params.size() == st.m1.size(), ErrorCode::shape,
            "optimizer state does not match the parameters");
    double sq = 0.0;
    for (const auto& g : grads) {
        require(g.value.all_finite(), ErrorCode::numeric, "non-finite gradient in '" + g.name + "'");
        sq += g.value.row().squaredNorm();
    }
    const double norm = std::sqrt(sq);
    const double clip = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;
    ++st.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].data();
        const auto g = grads[i].data();
        auto m1 = st.m1[i].data();
        auto m2 = st.m2[i].data();
        const double wd = params.entry(i).decay ? cfg.weight_decay : 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j] * clip;
            m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * gj;
            m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * gj * gj;
            const double mh = m1[j] / bc1;
            const double vh = m2[j] / bc2;
            p[j] -= cfg.learning_rate * (mh / (std::sqrt(vh) + cfg.adam_eps) + wd * p[j]);
        }
    }
    return norm;
}

namespace {

struct WindowLoss {
    double l_rec = 0.0;
    double l_jepa = 0.0;
};

/// Loss of one window; with `grads`, accumulates c_rec * dL_rec + c_q * dL_JEPA.
WindowLoss window_loss(const Model& m, const BatchItem& item, double dropout_rate, double c_rec,
                       double c_q, ParamSet* grads) {
    const auto& c = m.config();
    const Mat& x = *item.x;
    check_mask(item.mask, c.window);
    require(item.mask.front() > c.horizon, ErrorCode::config, "mask touches timesteps <= s");
    const Eigen::Index first = item.mask.front() - 1;
    ModelTape tape(m, x, dropout_rate, item.dropout_seed, first);

    WindowLoss out;
    out.l_rec = loss_recon(tape.x_hat(), x);
    Mat d_pred;
    Mat* gp = nullptr;
    if (grads) {
        d_pred = Mat::Zero(c.window, c.dim);
        gp = &d_pred;
    }
    switch (c.prediction_target) {
        case PredictionTarget::queries:
        case PredictionTarget::keys:
        case PredictionTarget::values:
        case PredictionTarget::hidden: {
            TargetFeature f = TargetFeature::queries;
            if (c.prediction_target == PredictionTarget::keys) f = TargetFeature::keys;
            if (c.prediction_target == PredictionTarget::values) f = TargetFeature::values;
            if (c.prediction_target == PredictionTarget::hidden) f = TargetFeature::hidden;
            const Mat tgt = target_features(x, m, f, first);
            out.l_jepa = loss_jepa(tape.q_pred(), tgt, item.mask, c.compare_heads(), c.eps_cos, gp, c_q);
            break;
        }
        case PredictionTarget::attn_map_q: {
            const Mat tgt = target_features(x, m, TargetFeature::queries, first);
            out.l_jepa = loss_attention_kl(tape.q_pred(), tgt, tape.k(), item.mask, c.heads, gp, c_q);
            break;
        }
        case PredictionTarget::attn_map_qk: {
            const Mat tgt = target_features(x, m, TargetFeature::queries, first);
            const Mat keys = target_features(x, m, TargetFeature::keys);
            out.l_jepa = loss_attention_kl(tape.q_pred(), tgt, keys, item.mask, c.heads, gp, c_q);
            break;
        }
    }
    if (grads) {
        const Mat d_xhat = (2.0 * c_rec / double(c.window)) * (tape.x_hat() - x);
        tape.backward(d_xhat, d_pred, *grads);
    }
    return out;
}

}  // namespace

LossBreakdown batch_loss(const Model& m, const std::vector<BatchItem>& batch, double dropout_rate,
                         ParamSet* grads) {
    require(!batch.empty(), ErrorCode::config, "empty minibatch");
    const auto& l = m.layout();
    const double s_rec = m.param(l.log_var_rec)[0];
    const double s_q = m.param(l.log_var_q)[0];
    const double inv_b = 1.0 / double(batch.size());
    const double c_rec = std::exp(-s_rec) * inv_b;
    const double c_q = std::exp(-s_q) * inv_b;

    // Fixed-size chunks reduced in order keep the sums independent of the
    // worker count.
    const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
    std::vector<ParamSet> partial(grads ? n_chunks : 0);
    std::vector<WindowLoss> sums(n_chunks);
    parallel_for(n_chunks, [&](std::size_t ci) {
        ParamSet* g = nullptr;
        if (grads) {
            partial[ci] = m.online().zeros_like();
            g = &partial[ci];
        }
        const std::size_t end = std::min(batch.size(), (ci + 1) * kChunk);
        for (std::size_t i = ci * kChunk; i < end; ++i) {
            const auto w = window_loss(m, batch[i], dropout_rate, c_rec, c_q, g);
            sums[ci].l_rec += w.l_rec;
            sums[ci].l_jepa += w.l_jepa;
        }
    });

    double l_rec = 0.0, l_jepa = 0.0;
    for (const auto& s : sums) {
        l_rec += s.l_rec;
        l_jepa += s.l_jepa;
    }
    l_rec *= inv_b;
    l_jepa *= inv_b;
    if (grads) {
        *grads = std::move(partial[0]);
        for (std::size_t ci = 1; ci < n_chunks; ++ci)
            for (std::size_t p = 0; p < grads->size(); ++p) (*grads)[p].row() += partial[ci][p].row();
        (*grads)[l.log_var_rec][0] += 1.0 - std::exp(-s_rec) * l_rec;
        (*grads)[l.log_var_q][0] += 1.0 - std::exp(-s_q) * l_jepa;
    }
    return combine_losses(l_rec, l_jepa, s_rec, s_q);
}

bool EarlyStopping::update(double value) {
    ++epoch_;
    if (!seen_ || value < best_) {
        seen_ = true;
        best_ = value;
        best_epoch_ = epoch_;
        bad_epochs_ = 0;
        return true;
    }
    ++bad_epochs_;
    return false;
}

Model initial_model(const ModelConfig& cfg, std::uint64_t run_seed) {
    return Model(cfg, substream_seed(run_seed, {kInit}));
}

double mean_recon_loss(const Model& m, const WindowSequence& windows) {
    require(windows.size() > 0, ErrorCode::config, "no windows to evaluate");
    const std::size_t n_chunks = (windows.size() + kChunk - 1) / kChunk;
    std::vector<double> sums(n_chunks, 0.0);
    parallel_for(n_chunks, [&](std::size_t ci) {
        const std::size_t end = std::min(windows.size(), (ci + 1) * kChunk);
        for (std::size_t i = ci * kChunk; i < end; ++i) {
            const Mat x = windows[i];
            sums[ci] += loss_recon(reconstruct(embed(x, m), m).x_hat, x);
        }
    });
    return std::accumulate(sums.begin(), sums.end(), 0.0) / double(windows.size());
}

std::vector<ComponentScores> score_windows(const Model& m, const WindowSequence& windows) {
    const Scorer scorer(m);
    std::vector<ComponentScores> out(windows.size());
    parallel_for(windows.size(), [&](std::size_t i) { out[i] = scorer.score(windows[i]); });
    return out;
}

FitResult fit(const WindowSequence& train, const WindowSequence& val, const Model& init,
              const TrainConfig& cfg, const EpochCallback& on_epoch, const StepCallback& on_step) {
    cfg.validate();
    require(train.size() >= 4, ErrorCode::config, "training split has fewer than 4 windows");
    require(val.size() >= 1, ErrorCode::config, "validation split is empty");
    const auto& mc = init.config();
    require(train.window() == mc.window && val.window() == mc.window, ErrorCode::shape,
            "window length does not match the model");
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    Model model = init;
    Model best = init;
    AdamState state = AdamState::for_params(model.online());
    EarlyStopping stopper(cfg.patience);
    std::vector<EpochRecord> history;

    const std::size_t n = train.size();
    const auto bs = std::size_t(cfg.batch_size);
    std::vector<Mat> batch_x;
    ParamSet grads = model.online().zeros_like();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t_epoch = clock::now();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = substream(cfg.seed, {kShuffle, std::uint64_t(epoch)});
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[std::size_t(uniform_int(shuffle_rng, 0, std::int64_t(i) - 1))]);

        double tot = 0.0, rec = 0.0, jep = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += bs, ++n_batches) {
            const std::size_t end = std::min(n, start + bs);
            batch_x.clear();
            for (std::size_t i = start; i < end; ++i) batch_x.push_back(train[order[i]]);
            std::vector<BatchItem> items(end - start);
            for (std::size_t slot = 0; slot < items.size(); ++slot) {
                const std::uint64_t key[] = {std::uint64_t(epoch), std::uint64_t(n_batches), std::uint64_t(slot)};
                Rng mask_rng = substream(cfg.seed, {kMask, key[0], key[1], key[2]});
                items[slot].x = &batch_x[slot];
                items[slot].mask = sample_mask(mc.window, mc.horizon, cfg.mask_ratio, cfg.block_fraction, mask_rng);
                items[slot].dropout_seed = substream_seed(cfg.seed, {kDropout, key[0], key[1], key[2]});
            }
            const auto lb = batch_loss(model, items, mc.predictor_dropout, &grads);
            require(std::isfinite(lb.total), ErrorCode::numeric,
                    "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(n_batches));
            optimizer_step(model.online(), grads, state, cfg);
            ema_update(model.target(), model.online(), cfg.ema_momentum);
            if (on_step) on_step(model, epoch, n_batches);
            tot += lb.total;
            rec += lb.l_rec;
            jep += lb.l_jepa;
        }

        EpochRecord r;
        r.epoch = epoch;
        r.train_total = tot / double(n_batches);
        r.train_rec = rec / double(n_batches);
        r.train_jepa = jep / double(n_batches);
        r.val_rec = mean_recon_loss(model, val);
        r.s_rec = model.param(model.layout().log_var_rec)[0];
        r.s_q = model.param(model.layout().log_var_q)[0];
        require(std::isfinite(r.val_rec), ErrorCode::numeric,
                "non-finite validation loss at epoch " + std::to_string(epoch));
        if (stopper.update(r.val_rec)) best = model;
        r.seconds = std::chrono::duration<double>(clock::now() - t_epoch).count();
        history.push_back(r);
        if (on_epoch) on_epoch(r);
        if (stopper.should_stop()) break;
    }

    FitResult out{std::move(best), {}, std::move(history), stopper.best_epoch(), 0.0};
    const auto scores = score_windows(out.model, train);
    out.calibration = calibrate(scores, mc.eps_rz);
    out.fit_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
    return out;
}

}  // namespace axonad

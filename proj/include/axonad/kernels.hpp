#pragma once

#include "axonad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace axonad {

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

/// Row-wise softmax with max subtraction, in place.
void softmax_rows(Eigen::Ref<Mat> x);

/// Softmax over the last dimension. Throws `E_NUMERIC` on non-finite input.
Tensor softmax_lastdim(const Tensor& t);

/// Given softmax output `y` and upstream `dy`, returns the logit gradient
/// `y * (dy - sum(dy * y))` row-wise.
Mat softmax_rows_backward(const Mat& y, const Mat& dy);

// ---------------------------------------------------------------------------
// Layer normalization (population variance, eps inside the square root)
// ---------------------------------------------------------------------------

struct LayerNormCache {
    Mat xhat;              // normalized rows before the affine map
    Eigen::VectorXd rstd;  // 1 / sqrt(var + eps) per row
};

Mat layer_norm(const Mat& x, const RowVec& gamma, const RowVec& beta, double eps,
               LayerNormCache* cache = nullptr);

Tensor layer_norm(const Tensor& t, const Tensor& gamma, const Tensor& beta, double eps);

/// Returns dx and accumulates into dgamma / dbeta.
Mat layer_norm_backward(const Mat& dy, const LayerNormCache& cache, const RowVec& gamma,
                        Eigen::Ref<RowVec> dgamma, Eigen::Ref<RowVec> dbeta);

// ---------------------------------------------------------------------------
// Causal dilated 1-D convolution
// ---------------------------------------------------------------------------
//
// `weight` is viewed as K stacked (C_in x C_out) taps; tap j reads the input
// at lag (K - 1 - j) * dilation, so the last tap is the current timestep.
// Positions before the start of the sequence read zeros.
//
// `first_row` restricts the computation to output rows [first_row, T); rows
// before it are left at zero. Callers that only consume a suffix of the
// output use this to skip work.

Mat causal_dilated_conv1d(const Mat& seq, const Mat& weight, const RowVec* bias, int dilation,
                          Eigen::Index first_row = 0);

Tensor causal_dilated_conv1d(const Tensor& seq, const Tensor& kernel, int dilation);

/// Accumulates dweight / dbias and returns dseq. Only rows [first_row, T) of
/// `dout` are read.
Mat causal_dilated_conv1d_backward(const Mat& dout, const Mat& seq, const Mat& weight,
                                   int dilation, Eigen::Ref<Mat> dweight,
                                   Eigen::Ref<RowVec> dbias, Eigen::Index first_row = 0);

// ---------------------------------------------------------------------------
// Cosine similarity with eps-guarded norms
// ---------------------------------------------------------------------------

/// <a / (|a| + eps), b / (|b| + eps)>
double cosine_similarity(std::span<const double> a, std::span<const double> b, double eps);

template <class A, class B>
double cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                         double eps) {
    return a.dot(b) / ((a.norm() + eps) * (b.norm() + eps));
}

/// Adds `scale * d cos(a, b) / d a` into `grad`.
template <class A, class B, class G>
void cosine_grad_a(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double eps,
                   double scale, G&& grad) {
    const double na = a.norm();
    const double nb = b.norm();
    const double da = na + eps;
    const double db = nb + eps;
    const double dot = a.dot(b);
    grad += (scale / (da * db)) * b;
    if (na > 0.0) grad -= (scale * dot / (da * da * db * na)) * a;
}

// ---------------------------------------------------------------------------
// KL divergence between rows of two row-stochastic matrices, floored at 1e-12
// ---------------------------------------------------------------------------

inline constexpr double kKlFloor = 1e-12;

template <class P, class Q>
double kl_row(const Eigen::MatrixBase<P>& p, const Eigen::MatrixBase<Q>& q) {
    const auto pa = p.derived().array();
    return (pa * (pa.max(kKlFloor).log() - q.derived().array().max(kKlFloor).log())).sum();
}

}  // namespace axonad

#include "axonad/kernels.hpp"

#include "axonad/error.hpp"

#include <cmath>

namespace axonad {

void softmax_rows(Eigen::Ref<Mat> x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        const double mx = r.maxCoeff();
        r = (r.array() - mx).exp();
        r /= r.sum();
    }
}

Tensor softmax_lastdim(const Tensor& t) {
    require(t.size() > 0 && t.cols() >= 1, ErrorCode::shape, "softmax needs a non-empty last dimension");
    require(t.all_finite(), ErrorCode::numeric, "softmax input contains non-finite values");
    Tensor out = t;
    softmax_rows(out.mat());
    return out;
}

Mat softmax_rows_backward(const Mat& y, const Mat& dy) {
    Eigen::VectorXd dots = (dy.array() * y.array()).rowwise().sum();
    return (y.array() * (dy.colwise() - dots).array()).matrix();
}

Mat layer_norm(const Mat& x, const RowVec& gamma, const RowVec& beta, double eps,
               LayerNormCache* cache) {
    const Eigen::Index n = x.rows();
    const double inv_d = 1.0 / double(x.cols());
    Mat xhat(n, x.cols());
    Eigen::VectorXd rstd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).sum() * inv_d;
        auto centered = x.row(i).array() - mean;
        const double var = centered.square().sum() * inv_d;
        rstd(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = centered * rstd(i);
    }
    Mat y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

Tensor layer_norm(const Tensor& t, const Tensor& gamma, const Tensor& beta, double eps) {
    require(gamma.size() == t.cols() && beta.size() == t.cols(), ErrorCode::shape,
            "layer_norm affine size must match the last dimension");
    Tensor out(t.shape());
    out.mat() = layer_norm(Mat(t.mat()), RowVec(gamma.row()), RowVec(beta.row()), eps);
    return out;
}

Mat layer_norm_backward(const Mat& dy, const LayerNormCache& cache, const RowVec& gamma,
                        Eigen::Ref<RowVec> dgamma, Eigen::Ref<RowVec> dbeta) {
    dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbeta += dy.colwise().sum();
    Mat dxhat = dy.array().rowwise() * gamma.array();
    const double inv_d = 1.0 / double(dy.cols());
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const double m1 = dxhat.row(i).sum() * inv_d;
        const double m2 = dxhat.row(i).dot(cache.xhat.row(i)) * inv_d;
        dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2);
    }
    return dx;
}

Mat causal_dilated_conv1d(const Mat& seq, const Mat& weight, const RowVec* bias, int dilation,
                          Eigen::Index first_row) {
    require(dilation >= 1, ErrorCode::config, "dilation must be >= 1");
    const Eigen::Index t_len = seq.rows();
    const Eigen::Index c_in = seq.cols();
    require(c_in > 0 && weight.rows() % c_in == 0, ErrorCode::shape,
            "conv kernel rows must be a multiple of the input channel count");
    const Eigen::Index taps = weight.rows() / c_in;
    const Eigen::Index c_out = weight.cols();
    Mat out = Mat::Zero(t_len, c_out);
    if (first_row >= t_len) return out;
    const Eigen::Index n_out = t_len - first_row;
    if (bias) out.bottomRows(n_out).rowwise() = *bias;
    for (Eigen::Index j = 0; j < taps; ++j) {
        const Eigen::Index lag = (taps - 1 - j) * dilation;
        // output rows r in [max(first_row, lag), T) read input rows r - lag
        const Eigen::Index start = std::max(first_row, lag);
        if (start >= t_len) continue;
        const Eigen::Index n = t_len - start;
        out.middleRows(start, n).noalias() +=
            seq.middleRows(start - lag, n) * weight.middleRows(j * c_in, c_in);
    }
    return out;
}

Tensor causal_dilated_conv1d(const Tensor& seq, const Tensor& kernel, int dilation) {
    require(seq.rank() == 2, ErrorCode::shape, "conv input must be T x C_in");
    const Mat out = causal_dilated_conv1d(Mat(seq.mat()), Mat(kernel.mat()), nullptr, dilation);
    return Tensor::from_matrix(out);
}

Mat causal_dilated_conv1d_backward(const Mat& dout, const Mat& seq, const Mat& weight,
                                   int dilation, Eigen::Ref<Mat> dweight,
                                   Eigen::Ref<RowVec> dbias, Eigen::Index first_row) {
    const Eigen::Index t_len = seq.rows();
    const Eigen::Index c_in = seq.cols();
    const Eigen::Index taps = weight.rows() / c_in;
    Mat dseq = Mat::Zero(t_len, c_in);
    if (first_row >= t_len) return dseq;
    dbias += dout.bottomRows(t_len - first_row).colwise().sum();
    for (Eigen::Index j = 0; j < taps; ++j) {
        const Eigen::Index lag = (taps - 1 - j) * dilation;
        const Eigen::Index start = std::max(first_row, lag);
        if (start >= t_len) continue;
        const Eigen::Index n = t_len - start;
        dweight.middleRows(j * c_in, c_in).noalias() +=
            seq.middleRows(start - lag, n).transpose() * dout.middleRows(start, n);
        dseq.middleRows(start - lag, n).noalias() +=
            dout.middleRows(start, n) * weight.middleRows(j * c_in, c_in).transpose();
    }
    return dseq;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b, double eps) {
    require(a.size() == b.size(), ErrorCode::shape, "cosine_similarity needs equal-length vectors");
    ConstRowMap va(a.data(), Eigen::Index(a.size()));
    ConstRowMap vb(b.data(), Eigen::Index(b.size()));
    return cosine_similarity(va, vb, eps);
}

}  // namespace axonad

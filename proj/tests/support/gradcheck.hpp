#pragma once

// Central finite-difference check of the minibatch total loss against the
// hand-written backward pass.

#include "axonad/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace axonad::testing {

struct GradCheckResult {
    // max |a - n| / max(1, |a|): the harness's reported error.
    double max_error = 0.0;
    std::string max_error_param;
    // Pure coordinate-wise relative error (floored at 1e-7), informational.
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0, worst_numeric = 0.0;
    std::size_t coordinates = 0;
    std::size_t min_per_array = 0;
    std::size_t kink_crossings = 0;  // perturbations that flipped some ReLU
    // Normwise: per array, max |a - n| over checked coordinates divided by
    // the largest |a| or |n| among them; the maximum over arrays.
    double max_array_rel_error = 0.0;
    std::string worst_array;
};

inline std::vector<std::vector<bool>> relu_patterns(const Model& m, const std::vector<BatchItem>& batch,
                                                    double dropout) {
    std::vector<std::vector<bool>> out;
    for (const auto& item : batch)
        out.push_back(ModelTape(m, *item.x, dropout, item.dropout_seed, item.mask.front() - 1).relu_pattern());
    return out;
}

/// Relative error with a small absolute floor so that coordinates whose true
/// gradient is zero are compared in absolute terms.
inline double relative_error(double a, double n, double floor = 1e-7) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Checks up to `per_array` coordinates of every online array (all of them
/// when the array is smaller), sampled without replacement. Every perturbed
/// point is also probed for ReLU sign changes: central differences only
/// estimate the derivative when both evaluations stay on the same smooth
/// piece as the base point.
inline GradCheckResult check_gradients(Model& m, const std::vector<BatchItem>& batch, double dropout,
                                       double step, std::size_t per_array, std::uint64_t seed) {
    ParamSet grads = m.online().zeros_like();
    batch_loss(m, batch, dropout, &grads);
    const auto base = relu_patterns(m, batch, dropout);
    GradCheckResult out;
    out.min_per_array = static_cast<std::size_t>(-1);
    Rng rng(seed);
    for (std::size_t p = 0; p < m.online().size(); ++p) {
        Tensor& w = m.online()[p];
        std::vector<std::size_t> idx(w.size());
        std::iota(idx.begin(), idx.end(), 0);
        const std::size_t n = std::min(per_array, idx.size());
        for (std::size_t i = 0; i < n; ++i)
            std::swap(idx[i], idx[std::size_t(uniform_int(rng, std::int64_t(i), std::int64_t(idx.size()) - 1))]);
        double max_diff = 0.0, max_mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = idx[i];
            const double orig = w[j];
            w[j] = orig + step;
            const double up = batch_loss(m, batch, dropout).total;
            bool crossed = relu_patterns(m, batch, dropout) != base;
            w[j] = orig - step;
            const double down = batch_loss(m, batch, dropout).total;
            crossed = crossed || relu_patterns(m, batch, dropout) != base;
            w[j] = orig;
            if (crossed) ++out.kink_crossings;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grads[p][j];
            const double scaled = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
            if (scaled > out.max_error) {
                out.max_error = scaled;
                out.max_error_param = m.online().entry(p).name;
            }
            const double err = relative_error(analytic, numeric);
            max_diff = std::max(max_diff, std::abs(analytic - numeric));
            max_mag = std::max({max_mag, std::abs(analytic), std::abs(numeric)});
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst_param = m.online().entry(p).name;
                out.worst_index = j;
                out.worst_analytic = analytic;
                out.worst_numeric = numeric;
            }
        }
        const double array_err = max_diff / std::max(max_mag, 1e-7);
        if (array_err > out.max_array_rel_error) {
            out.max_array_rel_error = array_err;
            out.worst_array = m.online().entry(p).name;
        }
        out.coordinates += n;
        out.min_per_array = std::min(out.min_per_array, n);
    }
    return out;
}

}  // namespace axonad::testing

#pragma once

#include <optional>
#include <span>
#include <vector>

namespace axonad::stats {

/// Quantile with linear interpolation between order statistics
/// (position q * (n - 1)). `q` in [0, 1]; input need not be sorted.
double quantile(std::span<const double> values, double q);
double median(std::span<const double> values);

/// Average ranks (1-based); tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average-rank ties; nullopt when either side
/// has fewer than 2 distinct values.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
double stddev(std::span<const double> values);  // population

}  // namespace axonad::stats

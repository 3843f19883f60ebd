#pragma once

#include "axonad/data.hpp"

#include <array>
#include <cstdint>

namespace axonad {

/// Seeded multichannel telemetry stand-in: x_t = C z_t + noise, with z_t a
/// sum of incommensurate sinusoids plus an AR(1) component per latent
/// dimension. Labeled anomalies are injected into the test segment only.
struct GeneratorConfig {
    std::int64_t length = 20000;
    int channels = 8;
    int latent_dim = 4;
    int sinusoids_per_latent = 3;
    double period_min = 20.0;
    double period_max = 500.0;
    double ar_coef = 0.9;
    double ar_std = 0.5;            // stationary std of the AR component
    double noise_fraction = 0.05;   // noise std relative to each channel's signal std
    // flatline, drift, level_shift, spike, variance_jump, correlation_break
    std::array<int, 6> counts{3, 3, 4, 3, 3, 4};
    double magnitude_min = 3.0;     // delta, in units of the channel std
    double magnitude_max = 3.0;
    std::int64_t length_min = 1;
    std::int64_t length_max = 292;
    std::int64_t length_median = 108;
    int channels_min = 1;
    int channels_max = 4;
    double test_start_fraction = 0.5;
    std::uint64_t seed = 2024;

    int count(AnomalyKind k) const { return counts[std::size_t(k)]; }
    int& count(AnomalyKind k) { return counts[std::size_t(k)]; }
    void validate() const;
    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

SeriesFrame generate_synthetic(const GeneratorConfig& cfg);

/// Interval length draw: log-uniform on [min, median] with probability 1/2,
/// otherwise log-uniform on [median, max]; the median is `median` exactly.
std::int64_t sample_interval_length(const GeneratorConfig& cfg, double u_half, double u_pos);

}  // namespace axonad

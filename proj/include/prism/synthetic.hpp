#pragma once

#include <cstddef>
#include <cstdint>

#include "prism/core_series.hpp"

namespace prism {

/// Seeded generator for a strongly seasonal weekly target plus search-like regressors.
///   y_t = level + slope * t + s(t mod period) + a_t + e_t,  a_t = phi * a_{t-1} + eta_t
///   x_{i,t} = loading_i * (y_t - level) / amplitude + offset_i + noise
struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t weeks = 1200;
    WeekStamp start = WeekStamp::parse("1990-01-06");
    int period = 52;
    double level = 100.0;
    double slope = 0.0;
    double seasonal_amplitude = 20.0;
    double ar_phi = 0.8;
    double ar_sd = 2.0;
    double noise_sd = 1.0;
    int n_terms = 5;
    double term_noise_sd = 0.2;
};

struct SyntheticData {
    WeeklySeries y;
    /// Seasonal pattern that generated y, one value per week of y.
    WeeklySeries seasonal;
    ExogenousPanel x;
};

/// Deterministic for a given spec on a given standard library.
SyntheticData make_synthetic(const SyntheticSpec& spec);

} // namespace prism

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "prism/core_series.hpp"

namespace prism {

enum class DecompositionMethod { STL, ClassicalAdditive };

std::string_view to_string(DecompositionMethod m) noexcept;
/// Accepts "stl", "additive" and "classical". Throws Error{InvalidConfig}.
DecompositionMethod parse_decomposition_method(std::string_view name);

struct DecompositionResult {
    WeeklySeries input;
    WeeklySeries seasonal;
    WeeklySeries trend;
    WeeklySeries remainder;
    /// input - seasonal
    WeeklySeries seasonally_adjusted;
    DecompositionMethod method = DecompositionMethod::STL;
    int period = 52;
    /// Weeks at each end of the classical trend that were filled flat from the nearest
    /// moving-average value. Always zero for STL.
    int trend_extended_weeks = 0;

    WeekStamp start() const noexcept { return input.start(); }
    WeekStamp end() const noexcept { return input.end(); }
    std::size_t size() const noexcept { return input.size(); }
};

/// Tag for the periodic seasonal window (cycle-subseries collapse to their means).
struct PeriodicWindow {};

struct StlConfig {
    int period = 52;
    /// Odd span of the cycle-subseries smoother; nullopt means periodic.
    std::optional<int> seasonal_window;
    /// Odd span of the trend smoother; nullopt derives it from period and seasonal window.
    std::optional<int> trend_window;
    int inner_loops = 2;
    int outer_loops = 0;
    /// Odd span of the low-pass smoother; nullopt means the smallest odd integer >= period.
    std::optional<int> low_pass_window;
    int seasonal_degree = 0;
    int trend_degree = 1;
    int low_pass_degree = 1;

    /// Robust fitting: one inner pass per outer iteration, ten bisquare reweightings.
    static StlConfig robust(int period = 52);

    int effective_seasonal_window(std::size_t n) const;
    int effective_trend_window() const;
    int effective_low_pass_window() const;
    /// Throws Error{InvalidConfig}.
    void validate() const;
};

struct LoessStats {
    /// Evaluation points whose local design was singular and were refit at a lower degree.
    std::size_t degree_fallbacks = 0;
    /// Evaluation points with no positive weight; the observed value is returned there.
    std::size_t empty_neighborhoods = 0;
};

/// Local polynomial regression with a tricube kernel over the `window` nearest neighbours
/// of each point, evaluated at the data positions. `x_positions` must be non-decreasing.
/// Ties in the neighbour search go to the earlier index. A singular local design is refit
/// at a lower degree rather than raised as an error.
std::vector<double> loess_smooth(std::span<const double> y, std::span<const double> x_positions,
                                 int window, int degree,
                                 std::optional<std::span<const double>> robustness_weights = {},
                                 LoessStats* stats = nullptr);

/// Seasonal-trend decomposition by loess. Throws Error{SeriesTooShort} when
/// y.size() < 2 * period.
DecompositionResult stl_decompose(const WeeklySeries& y, const StlConfig& cfg = {});

/// Moving-average trend plus phase-mean seasonal indices. Throws Error{SeriesTooShort}.
DecompositionResult classical_decompose(const WeeklySeries& y, int period = 52);

DecompositionResult decompose(const WeeklySeries& y, DecompositionMethod method,
                              const StlConfig& cfg = {});

/// Decomposes exactly the `window` weeks before `t`, i.e. what was knowable at `t`.
/// Throws Error{InsufficientHistory}.
DecompositionResult vintage_decompose(const WeeklySeries& y_full, WeekStamp t, int window,
                                      const StlConfig& cfg = {},
                                      DecompositionMethod method = DecompositionMethod::STL);

/// date,value,seasonal,trend,remainder,method
void write_decomposition_csv(std::ostream& out, const DecompositionResult& d);

} // namespace prism

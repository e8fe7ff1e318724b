#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prism/core_series.hpp"
#include "prism/pipeline.hpp"

namespace prism {

/// One method's realized forecasts, sorted by origin then horizon, no duplicates.
class MethodTrack {
public:
    /// Drops records without a realized value. Throws Error{GridMismatch} on duplicate
    /// (origin, horizon) pairs.
    MethodTrack(std::string method_name, std::vector<ForecastRecord> records);

    const std::string& method_name() const noexcept { return name_; }
    const std::vector<ForecastRecord>& records() const noexcept { return records_; }
    /// Records at horizon `l`, in origin order.
    std::vector<ForecastRecord> at_horizon(int l) const;
    std::vector<int> horizons() const;

private:
    std::string name_;
    std::vector<ForecastRecord> records_;
};

/// Evaluation window. A record counts when origin >= first_origin and its target week is
/// <= last_target, so the origin range narrows by l at horizon l.
struct EvalRange {
    std::optional<WeekStamp> first_origin;
    std::optional<WeekStamp> last_target;
};

MethodTrack restrict_range(const MethodTrack& track, const EvalRange& range);

/// Last observed value y[t-1] for every horizon. Throws Error{InsufficientHistory}.
std::vector<ForecastRecord> naive_forecast(const WeeklySeries& y, WeekStamp t,
                                           std::span<const int> horizons);

/// Naive forecasts over origins [from, to] with realized values filled from y.
std::vector<ForecastRecord> naive_backtest(const WeeklySeries& y, WeekStamp from, WeekStamp to,
                                           std::span<const int> horizons);

/// Throw Error{EmptyTrack} when the horizon has no records.
double rmse(const MethodTrack& track, int horizon);
double mae(const MethodTrack& track, int horizon);

struct RelativeErrorRow {
    std::string method;
    int horizon = 0;
    double rmse_abs = 0.0;
    double mae_abs = 0.0;
    double rmse_rel = 0.0;
    double mae_rel = 0.0;
};

/// Each track's RMSE and MAE per horizon, and their ratios to the reference.
/// Throws Error{GridMismatch} or Error{ZeroReferenceError}.
std::vector<RelativeErrorRow> relative_errors(std::span<const MethodTrack> tracks,
                                              const MethodTrack& reference);

/// Running sum of e_m^2 - e_ref^2 indexed by origin week.
/// Throws Error{GridMismatch} (including non-consecutive origins) or Error{EmptyTrack}.
WeeklySeries cssed(const MethodTrack& method, const MethodTrack& reference, int horizon);

struct DmResult {
    std::size_t n = 0;
    int horizon = 0;
    double mean_differential = 0.0;
    double long_run_variance = 0.0;
    /// Small-sample corrected statistic, referred to Student-t with n - 1 dof.
    double statistic = 0.0;
    double p_value = 1.0;
    /// Uncorrected statistic, referred to the standard normal.
    double statistic_normal = 0.0;
    double p_value_normal = 1.0;
};

/// Diebold-Mariano test under squared-error loss, d_t = e_a^2 - e_b^2. Negative statistics
/// favour `a`. Throws Error{TrackTooShort}, Error{GridMismatch} or
/// Error{DegenerateDifferential}.
DmResult diebold_mariano(const MethodTrack& a, const MethodTrack& b, int horizon);

/// Same test on raw error sequences, with h = horizon + 1 steps.
DmResult diebold_mariano(std::span<const double> errors_a, std::span<const double> errors_b,
                         int horizon);

/// (standard normal quantile at (i - 0.5) / n, i-th smallest residual).
/// Throws Error{TooFew} below three residuals.
std::vector<std::pair<double, double>> qq_normal_data(std::span<const double> residuals);

/// point - realized for every record at `horizon`.
std::vector<double> forecast_errors(const MethodTrack& track, int horizon);

void write_relative_errors_csv(std::ostream& out, std::span<const RelativeErrorRow> rows);
/// One block per horizon: rows and columns are methods, cells the corrected p-value of
/// the row method against the column method. The diagonal is left empty.
void write_dm_matrix_csv(std::ostream& out, std::span<const MethodTrack> tracks,
                         std::span<const int> horizons);
void write_dm_details_csv(std::ostream& out, std::span<const MethodTrack> tracks,
                          std::span<const int> horizons);
void write_cssed_csv(std::ostream& out, const WeeklySeries& curve);
void write_qq_csv(std::ostream& out, std::span<const std::pair<double, double>> pairs);

} // namespace prism

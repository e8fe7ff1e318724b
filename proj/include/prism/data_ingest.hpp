#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "prism/core_series.hpp"
#include "prism/pipeline.hpp"

namespace prism {

struct ClaimsCsvOptions {
    /// Accepted date headers, matched case-insensitively.
    std::vector<std::string> date_columns{"DATE", "observation_date"};
    /// Value header; empty takes the only non-date column.
    std::string value_column;
};

/// Weekly claims CSV. Dates are mapped to their week-ending Saturday.
/// Throws Error{ParseError} (with line number), Error{GapError} or Error{NonSaturdayGrid}.
WeeklySeries parse_claims_csv(std::istream& in, const ClaimsCsvOptions& opt = {},
                              const std::string& source = "claims csv");
WeeklySeries parse_claims_csv(const std::filesystem::path& path, const ClaimsCsvOptions& opt = {});

/// Writes `date,value` rows for a series.
void write_series_csv(std::ostream& out, const WeeklySeries& s, const std::string& value_header);

struct TrendsBatch {
    std::string batch_id;
    WeekStamp first_week;
    WeekStamp last_week;
    ExogenousPanel panel;

    std::ptrdiff_t span_weeks() const noexcept { return (last_week - first_week) + 1; }
};

/// Longest coverage accepted for one batch (five years of weeks, rounded up).
inline constexpr std::ptrdiff_t kMaxBatchWeeks = 262;

/// One Trends export: preamble lines are skipped up to the header `Week,...` or `date,...`.
/// "<1" reads as 0; a trailing ": (Region)" is stripped from term names.
/// Throws Error{ParseError}, Error{GapError} or Error{OutOfRangeValue}.
ExogenousPanel parse_trends_csv(std::istream& in, const std::string& batch_id,
                                const std::string& source = "trends csv");

/// Joins the term columns of several exports covering the same weeks.
/// Throws Error{GridMismatch} when the files disagree on the week grid, and
/// Error{CoverageTooLong} beyond kMaxBatchWeeks.
TrendsBatch parse_trends_batch(const std::vector<std::filesystem::path>& paths,
                               const std::string& batch_id);
TrendsBatch make_trends_batch(const std::vector<ExogenousPanel>& parts, const std::string& batch_id);

struct ManifestEntry {
    std::string batch_id;
    std::optional<WeekStamp> start;
    std::optional<WeekStamp> end;
    std::vector<std::filesystem::path> files;
};

/// Manifest grammar, one `key=value` per line, `#` comments:
///   batch=<id>      opens a new batch
///   start=<date>    optional first week (mapped to its week-ending Saturday)
///   end=<date>      optional last week
///   file=<path>     one or more exports, relative to the manifest's directory
std::vector<ManifestEntry> parse_manifest(std::istream& in,
                                          const std::filesystem::path& base_dir = {});
std::vector<TrendsBatch> load_manifest(const std::filesystem::path& path);

/// Batch index per horizon and origin.
class BatchSchedule {
public:
    void assign(int horizon, WeekStamp origin, std::size_t batch) { map_[horizon][origin] = batch; }
    /// Throws Error{UncoveredOrigin}.
    std::size_t batch_for(WeekStamp origin, int horizon) const;
    const std::map<int, std::map<WeekStamp, std::size_t>>& entries() const noexcept { return map_; }

private:
    std::map<int, std::map<WeekStamp, std::size_t>> map_;
};

/// A batch fits origin t at horizon l when it covers t - l - N through t. Among fitting
/// batches the one with the latest first week wins. Throws Error{UncoveredOrigin} naming
/// the first origin no batch fits.
BatchSchedule build_schedule(const std::vector<TrendsBatch>& batches, WeekStamp from,
                             WeekStamp to, const PrismConfig& cfg);

/// Selector for backtest that hands out the scheduled batch's panel.
ExogenousSelector make_selector(const std::vector<TrendsBatch>& batches,
                                const BatchSchedule& schedule);

} // namespace prism

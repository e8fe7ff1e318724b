#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prism {

using Date = std::chrono::sys_days;

/// Parses a strict `YYYY-MM-DD` date. Returns nullopt on any malformed or impossible date.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

/// A week identified by its week-ending Saturday.
class WeekStamp {
public:
    /// 1970-01-03, the first Saturday of the Unix epoch.
    WeekStamp() noexcept : date_(std::chrono::year{1970} / 1 / 3) {}
    /// Throws Error{InvalidSeries} unless `saturday` falls on a Saturday.
    explicit WeekStamp(Date saturday);

    /// The Saturday on or after `d`; Sunday-keyed weeks land on start + 6 days.
    static WeekStamp week_ending(Date d);
    /// Parses an ISO date that must already be a Saturday.
    static WeekStamp parse(std::string_view iso);

    Date date() const noexcept { return date_; }
    std::string iso() const { return format_iso_date(date_); }

    WeekStamp successor() const noexcept { return *this + 1; }
    WeekStamp operator+(std::ptrdiff_t weeks) const noexcept;
    WeekStamp operator-(std::ptrdiff_t weeks) const noexcept { return *this + (-weeks); }
    /// Signed number of weeks from `b` to `a`.
    friend std::ptrdiff_t operator-(WeekStamp a, WeekStamp b) noexcept;

    friend auto operator<=>(const WeekStamp&, const WeekStamp&) = default;

private:
    struct Unchecked {};
    WeekStamp(Date d, Unchecked) noexcept : date_(d) {}
    Date date_;
};

enum class MissingValues {
    Reject,
    /// NaN marks a week whose value is not (yet) observed; infinities are still rejected.
    AllowNaN,
};

/// Gap-free weekly series; index i is week start + i.
class WeeklySeries {
public:
    WeeklySeries(WeekStamp start, std::vector<double> values,
                 MissingValues missing = MissingValues::Reject);

    WeekStamp start() const noexcept { return start_; }
    WeekStamp end() const noexcept { return start_ + static_cast<std::ptrdiff_t>(values_.size()) - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    bool contains(WeekStamp w) const noexcept { return w >= start_ && w <= end(); }
    WeekStamp week(std::size_t i) const noexcept { return start_ + static_cast<std::ptrdiff_t>(i); }
    /// Position of `w`, which may lie outside the series (negative or >= size()).
    std::ptrdiff_t offset_of(WeekStamp w) const noexcept { return w - start_; }
    /// Throws Error{OutOfRange} if `w` is not covered.
    double at(WeekStamp w) const;

private:
    WeekStamp start_;
    std::vector<double> values_;
};

/// Contiguous sub-series over [from, to]. Throws Error{OutOfRange}.
WeeklySeries slice(const WeeklySeries& s, WeekStamp from, WeekStamp to);

/// Joins `tail` onto `head`; `tail` must start the week after `head` ends.
WeeklySeries concatenate(const WeeklySeries& head, const WeeklySeries& tail);

/// p search-volume series on one weekly grid, normalised within a single batch.
class ExogenousPanel {
public:
    /// `row_major` holds rows() * terms().size() values, one row per week.
    ExogenousPanel(WeekStamp start, std::vector<std::string> terms, std::vector<double> row_major,
                   std::string batch_id);

    WeekStamp start() const noexcept { return start_; }
    WeekStamp end() const noexcept { return start_ + static_cast<std::ptrdiff_t>(rows()) - 1; }
    std::size_t rows() const noexcept { return values_.size() / terms_.size(); }
    std::size_t width() const noexcept { return terms_.size(); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::string& batch_id() const noexcept { return batch_id_; }
    std::span<const double> data() const noexcept { return values_; }

    bool contains(WeekStamp w) const noexcept { return w >= start_ && w <= end(); }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return std::span<const double>(values_).subspan(i * width(), width());
    }
    /// Throws Error{OutOfRange} if `w` is not covered.
    std::span<const double> row_at(WeekStamp w) const;
    /// Column `j` as a series.
    WeeklySeries column(std::size_t j) const;

    ExogenousPanel slice(WeekStamp from, WeekStamp to) const;
    /// Same values re-keyed `weeks` later (negative shifts earlier).
    ExogenousPanel shifted(std::ptrdiff_t weeks) const;

private:
    WeekStamp start_;
    std::vector<std::string> terms_;
    std::vector<double> values_;
    std::string batch_id_;
};

struct AlignedData {
    WeeklySeries target;
    ExogenousPanel exogenous;
};

/// Shifts `x` by `offset_weeks` and cuts both inputs to their common weeks.
/// Throws Error{NoOverlap} when the shifted ranges are disjoint.
AlignedData align(const WeeklySeries& y, const ExogenousPanel& x, std::ptrdiff_t offset_weeks = 0);

} // namespace prism

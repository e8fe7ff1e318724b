#include "prism/core_series.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "prism/error.hpp"

namespace prism {

namespace {

using std::chrono::Saturday;
using std::chrono::weekday;

template <typename T>
bool parse_fixed(std::string_view text, T& out)
{
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

std::optional<Date> parse_iso_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (!parse_fixed(text.substr(0, 4), y) || !parse_fixed(text.substr(5, 2), m) ||
        !parse_fixed(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

std::string format_iso_date(Date d)
{
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

WeekStamp::WeekStamp(Date saturday) : date_(saturday)
{
    if (weekday{saturday} != Saturday) {
        throw Error(ErrorCode::InvalidSeries, format_iso_date(saturday) + " is not a Saturday");
    }
}

WeekStamp WeekStamp::week_ending(Date d)
{
    const auto ahead = Saturday - weekday{d};
    return WeekStamp(d + ahead, Unchecked{});
}

WeekStamp WeekStamp::parse(std::string_view iso)
{
    auto d = parse_iso_date(iso);
    if (!d) {
        throw Error(ErrorCode::ParseError, "invalid date '" + std::string(iso) + "'");
    }
    return WeekStamp(*d);
}

WeekStamp WeekStamp::operator+(std::ptrdiff_t weeks) const noexcept
{
    return WeekStamp(date_ + std::chrono::days{7 * weeks}, Unchecked{});
}

std::ptrdiff_t operator-(WeekStamp a, WeekStamp b) noexcept
{
    return (a.date_ - b.date_).count() / 7;
}

WeeklySeries::WeeklySeries(WeekStamp start, std::vector<double> values, MissingValues missing)
    : start_(start), values_(std::move(values))
{
    if (values_.empty()) {
        throw Error(ErrorCode::InvalidSeries, "weekly series must hold at least one value");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        const bool ok = std::isfinite(v) || (missing == MissingValues::AllowNaN && std::isnan(v));
        if (!ok) {
            throw Error(ErrorCode::InvalidSeries,
                        "non-finite value at " + week(i).iso());
        }
    }
}

double WeeklySeries::at(WeekStamp w) const
{
    if (!contains(w)) {
        throw Error(ErrorCode::OutOfRange, w.iso() + " outside [" + start_.iso() + ", " +
                                               end().iso() + "]");
    }
    return values_[static_cast<std::size_t>(offset_of(w))];
}

WeeklySeries slice(const WeeklySeries& s, WeekStamp from, WeekStamp to)
{
    if (from > to || !s.contains(from) || !s.contains(to)) {
        throw Error(ErrorCode::OutOfRange, "slice [" + from.iso() + ", " + to.iso() +
                                               "] not inside [" + s.start().iso() + ", " +
                                               s.end().iso() + "]");
    }
    auto vals = s.values();
    const auto first = static_cast<std::size_t>(s.offset_of(from));
    const auto count = static_cast<std::size_t>(to - from + 1);
    return WeeklySeries(from, std::vector<double>(vals.begin() + first, vals.begin() + first + count),
                        MissingValues::AllowNaN);
}

WeeklySeries concatenate(const WeeklySeries& head, const WeeklySeries& tail)
{
    if (tail.start() != head.end().successor()) {
        throw Error(ErrorCode::InvalidSeries, "concatenation would leave a gap at " +
                                                  head.end().successor().iso());
    }
    std::vector<double> v(head.values().begin(), head.values().end());
    v.insert(v.end(), tail.values().begin(), tail.values().end());
    return WeeklySeries(head.start(), std::move(v), MissingValues::AllowNaN);
}

ExogenousPanel::ExogenousPanel(WeekStamp start, std::vector<std::string> terms,
                               std::vector<double> row_major, std::string batch_id)
    : start_(start), terms_(std::move(terms)), values_(std::move(row_major)),
      batch_id_(std::move(batch_id))
{
    if (terms_.empty()) {
        throw Error(ErrorCode::InvalidSeries, "exogenous panel needs at least one term");
    }
    if (values_.empty() || values_.size() % terms_.size() != 0) {
        throw Error(ErrorCode::InvalidSeries, "exogenous panel rows must each hold " +
                                                  std::to_string(terms_.size()) + " values");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InvalidSeries, "non-finite exogenous value");
        }
    }
}

std::span<const double> ExogenousPanel::row_at(WeekStamp w) const
{
    if (!contains(w)) {
        throw Error(ErrorCode::OutOfRange, "exogenous panel " + batch_id_ + " has no row for " +
                                               w.iso());
    }
    return row(static_cast<std::size_t>(w - start_));
}

WeeklySeries ExogenousPanel::column(std::size_t j) const
{
    std::vector<double> v(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
        v[i] = values_[i * width() + j];
    }
    return WeeklySeries(start_, std::move(v));
}

ExogenousPanel ExogenousPanel::slice(WeekStamp from, WeekStamp to) const
{
    if (from > to || !contains(from) || !contains(to)) {
        throw Error(ErrorCode::OutOfRange, "panel slice [" + from.iso() + ", " + to.iso() +
                                               "] not inside [" + start_.iso() + ", " +
                                               end().iso() + "]");
    }
    const auto first = static_cast<std::size_t>(from - start_) * width();
    const auto count = static_cast<std::size_t>(to - from + 1) * width();
    return ExogenousPanel(from, terms_,
                          std::vector<double>(values_.begin() + first,
                                              values_.begin() + first + count),
                          batch_id_);
}

ExogenousPanel ExogenousPanel::shifted(std::ptrdiff_t weeks) const
{
    return ExogenousPanel(start_ + weeks, terms_, values_, batch_id_);
}

AlignedData align(const WeeklySeries& y, const ExogenousPanel& x, std::ptrdiff_t offset_weeks)
{
    const ExogenousPanel xs = x.shifted(offset_weeks);
    const WeekStamp from = std::max(y.start(), xs.start());
    const WeekStamp to = std::min(y.end(), xs.end());
    if (from > to) {
        throw Error(ErrorCode::NoOverlap, "target [" + y.start().iso() + ", " + y.end().iso() +
                                              "] and exogenous [" + xs.start().iso() + ", " +
                                              xs.end().iso() + "] do not overlap");
    }
    return AlignedData{slice(y, from, to), xs.slice(from, to)};
}

} // namespace prism

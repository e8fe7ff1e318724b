#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "prism/core_series.hpp"
#include "prism/error.hpp"

using namespace prism;
using namespace std::chrono;

namespace {

WeeklySeries ramp(WeekStamp start, std::size_t n)
{
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 1.0);
    return WeeklySeries(start, std::move(v));
}

ExogenousPanel flat_panel(WeekStamp start, std::size_t rows, double value = 1.0)
{
    return ExogenousPanel(start, {"a", "b"}, std::vector<double>(rows * 2, value), "batch");
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Io;
}

} // namespace

TEST_CASE("iso dates are strict")
{
    CHECK(parse_iso_date("2016-02-29").has_value());
    CHECK_FALSE(parse_iso_date("2015-02-29").has_value());
    CHECK_FALSE(parse_iso_date("2016-2-29").has_value());
    CHECK_FALSE(parse_iso_date("2016-02-29x").has_value());
    CHECK_FALSE(parse_iso_date("").has_value());
    CHECK(format_iso_date(*parse_iso_date("2007-01-06")) == "2007-01-06");
}

TEST_CASE("week stamps sit on Saturdays")
{
    const auto w = WeekStamp::parse("2007-01-06");
    CHECK(weekday{w.date()} == Saturday);
    CHECK((w.successor().date() - w.date()).count() == 7);
    CHECK(w.successor() - w == 1);
    CHECK((w + 52) - w == 52);
    CHECK((w - 3).iso() == "2006-12-16");
    CHECK(code_of([] { (void)WeekStamp::parse("2007-01-07"); }) == ErrorCode::InvalidSeries);
    CHECK(WeekStamp().iso() == "1970-01-03");
}

TEST_CASE("week_ending maps every day of a week to the same Saturday")
{
    const auto sunday = *parse_iso_date("2004-01-04");
    for (int k = 0; k < 7; ++k) {
        CHECK(WeekStamp::week_ending(sunday + days{k}).iso() == "2004-01-10");
    }
    CHECK(WeekStamp::week_ending(sunday + days{7}).iso() == "2004-01-17");
}

TEST_CASE("weekly series validation")
{
    const auto s = WeekStamp::parse("2000-01-01");
    CHECK(code_of([&] { WeeklySeries(s, {}); }) == ErrorCode::InvalidSeries);
    CHECK(code_of([&] { WeeklySeries(s, {1.0, std::nan("")}); }) == ErrorCode::InvalidSeries);
    CHECK(code_of([&] {
              WeeklySeries(s, {1.0, std::numeric_limits<double>::infinity()}, MissingValues::AllowNaN);
          }) == ErrorCode::InvalidSeries);
    const WeeklySeries ok(s, {1.0, std::nan("")}, MissingValues::AllowNaN);
    CHECK(ok.size() == 2);
    CHECK(ok.end() == s + 1);
    CHECK(ok.at(s) == 1.0);
    CHECK(code_of([&] { (void)ok.at(s + 2); }) == ErrorCode::OutOfRange);
}

TEST_CASE("slice")
{
    const auto s = WeekStamp::parse("2000-01-01");
    const auto y = ramp(s, 10);
    const auto full = slice(y, y.start(), y.end());
    CHECK(std::equal(full.values().begin(), full.values().end(), y.values().begin()));
    CHECK(full.start() == y.start());

    const auto mid = slice(y, s + 2, s + 4);
    REQUIRE(mid.size() == 3);
    CHECK(mid[0] == 3.0);
    CHECK(mid[2] == 5.0);
    CHECK(code_of([&] { (void)slice(y, s + 4, s + 2); }) == ErrorCode::OutOfRange);
    CHECK(code_of([&] { (void)slice(y, s - 1, s + 2); }) == ErrorCode::OutOfRange);
}

TEST_CASE("slice round trip through concatenate")
{
    const auto s = WeekStamp::parse("2000-01-01");
    const auto y = ramp(s, 30);
    for (int from = 1; from < 29; from += 3) {
        for (int to = from; to < 29; to += 4) {
            auto joined = concatenate(concatenate(slice(y, y.start(), s + from - 1), slice(y, s + from, s + to)),
                                      slice(y, s + to + 1, y.end()));
            CHECK(joined.start() == y.start());
            CHECK(std::equal(joined.values().begin(), joined.values().end(), y.values().begin(),
                             y.values().end()));
        }
    }
    CHECK(code_of([&] { (void)concatenate(slice(y, s, s + 3), slice(y, s + 5, s + 9)); }) ==
          ErrorCode::InvalidSeries);
}

TEST_CASE("align")
{
    const auto w1 = WeekStamp::parse("2000-01-01");
    const auto y = ramp(w1, 100);

    SUBCASE("identity")
    {
        const auto a = align(y, flat_panel(w1, 100));
        CHECK(a.target.start() == w1);
        CHECK(a.target.size() == 100);
        CHECK(a.exogenous.start() == w1);
        CHECK(a.exogenous.rows() == 100);
    }
    SUBCASE("intersection")
    {
        const auto a = align(y, flat_panel(w1 + 50, 100));
        CHECK(a.target.start() == w1 + 50);
        CHECK(a.target.end() == w1 + 99);
        CHECK(a.exogenous.start() == w1 + 50);
        CHECK(a.exogenous.rows() == 50);
        CHECK(a.target[0] == 51.0);
    }
    SUBCASE("disjoint")
    {
        const auto short_y = ramp(w1, 10);
        CHECK(code_of([&] { (void)align(short_y, flat_panel(w1 + 29, 11)); }) == ErrorCode::NoOverlap);
    }
    SUBCASE("offset shifts the panel")
    {
        const auto a = align(y, flat_panel(w1, 100), 3);
        CHECK(a.exogenous.start() == w1 + 3);
        CHECK(a.target.size() == 97);
    }
    SUBCASE("overlap length is symmetric")
    {
        const auto p = flat_panel(w1 + 20, 150);
        const auto col = p.column(0);
        const auto ya = align(y, p);
        const auto yb = align(col, ExogenousPanel(y.start(), {"y"}, {y.values().begin(), y.values().end()}, "b"));
        CHECK(ya.target.size() == yb.target.size());
    }
}

TEST_CASE("exogenous panel")
{
    const auto s = WeekStamp::parse("2000-01-01");
    CHECK(code_of([&] { ExogenousPanel(s, {}, {}, "b"); }) == ErrorCode::InvalidSeries);
    CHECK(code_of([&] { ExogenousPanel(s, {"a", "b"}, {1.0, 2.0, 3.0}, "b"); }) == ErrorCode::InvalidSeries);
    const ExogenousPanel p(s, {"a", "b"}, {1, 2, 3, 4, 5, 6}, "b1");
    CHECK(p.rows() == 3);
    CHECK(p.row_at(s + 1)[1] == 4.0);
    CHECK(p.column(0).values()[2] == 5.0);
    const auto sl = p.slice(s + 1, s + 2);
    CHECK(sl.rows() == 2);
    CHECK(sl.batch_id() == "b1");
    CHECK(p.shifted(-2).start() == s - 2);
    CHECK(code_of([&] { (void)p.row_at(s + 3); }) == ErrorCode::OutOfRange);
}

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "prism/error.hpp"
#include "prism/evaluation.hpp"

using namespace prism;

namespace {

const WeekStamp kT0 = WeekStamp::parse("2007-01-06");

/// Records at one horizon with the given points and realized values on consecutive origins.
std::vector<ForecastRecord> track(std::span<const double> point, std::span<const double> realized,
                                  int horizon = 0)
{
    std::vector<ForecastRecord> out;
    for (std::size_t i = 0; i < point.size(); ++i) {
        ForecastRecord r;
        r.origin = kT0 + static_cast<std::ptrdiff_t>(i);
        r.horizon = horizon;
        r.point = point[i];
        r.realized = realized[i];
        out.push_back(r);
    }
    return out;
}

MethodTrack from_errors(const std::string& name, std::span<const double> errors, int horizon = 0)
{
    std::vector<double> realized(errors.size(), 100.0);
    std::vector<double> point(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        point[i] = 100.0 + errors[i];
    }
    return MethodTrack(name, track(point, realized, horizon));
}

/// Bartlett long-run variance with lag h - 1 and the small-sample correction, written out
/// in full, with Student-t tails from boost.
std::pair<double, double> dm_oracle(std::span<const double> ea, std::span<const double> eb, int h)
{
    const std::size_t n = ea.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = ea[i] * ea[i] - eb[i] * eb[i];
    }
    const double nd = static_cast<double>(n);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / nd;
    double lrv = 0.0;
    for (int k = -(h - 1); k <= h - 1; ++k) {
        const std::size_t ak = static_cast<std::size_t>(std::abs(k));
        double g = 0.0;
        for (std::size_t i = ak; i < n; ++i) {
            g += (d[i] - mean) * (d[i - ak] - mean);
        }
        lrv += (1.0 - static_cast<double>(ak) / h) * g / nd;
    }
    const double dm = mean / std::sqrt(lrv / nd);
    const double stat = dm * std::sqrt((nd + 1 - 2.0 * h + h * (h - 1.0) / nd) / nd);
    const boost::math::students_t_distribution<double> t(nd - 1);
    return {stat, 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(stat)))};
}

} // namespace

TEST_CASE("hand-computed error metrics")
{
    const std::vector<double> p{1, 2, 3};
    const std::vector<double> y{1, 2, 5};
    const MethodTrack m("m", track(p, y));
    CHECK(rmse(m, 0) == std::sqrt(4.0 / 3.0));
    CHECK(mae(m, 0) == 2.0 / 3.0);

    const MethodTrack perfect("p", track(y, y));
    CHECK(rmse(perfect, 0) == 0.0);
    CHECK(mae(perfect, 0) == 0.0);

    const std::vector<double> one_p{7.5};
    const std::vector<double> one_y{10.0};
    const MethodTrack single("s", track(one_p, one_y));
    CHECK(rmse(single, 0) == 2.5);
    CHECK(mae(single, 0) == 2.5);
    CHECK_THROWS_AS(rmse(single, 1), Error);
}

TEST_CASE("metric homogeneity and ordering")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z(0.0, 10.0);
    std::vector<double> e(80);
    for (double& v : e) {
        v = z(rng);
    }
    std::vector<double> half = e;
    std::vector<double> scaled = e;
    for (std::size_t i = 0; i < e.size(); ++i) {
        half[i] = 0.5 * e[i];
        scaled[i] = 3.0 * e[i];
    }
    const auto ref = from_errors("ref", e);
    const std::vector<MethodTrack> tracks{from_errors("half", half), ref};
    const auto rows = relative_errors(tracks, ref);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].rmse_rel == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rows[0].mae_rel == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rows[1].rmse_rel == 1.0);
    CHECK(rows[1].mae_rel == 1.0);
    CHECK(rmse(from_errors("x", scaled), 0) == doctest::Approx(3.0 * rmse(ref, 0)));
    CHECK(rmse(ref, 0) >= mae(ref, 0));

    const std::vector<double> shorter(e.begin(), e.end() - 1);
    const std::vector<MethodTrack> mismatched{from_errors("short", shorter)};
    CHECK_THROWS_AS(relative_errors(mismatched, ref), Error);
    const std::vector<double> zeros(e.size(), 0.0);
    CHECK_THROWS_AS(relative_errors(tracks, from_errors("zero", zeros)), Error);
}

TEST_CASE("method tracks")
{
    auto recs = track(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
    recs[1].realized.reset();
    const MethodTrack t("t", recs);
    CHECK(t.records().size() == 2);
    recs.push_back(recs[0]);
    try {
        MethodTrack dup("dup", recs);
        FAIL("expected GridMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GridMismatch);
    }
}

TEST_CASE("evaluation range narrows by the horizon")
{
    std::vector<ForecastRecord> recs;
    for (int i = 0; i < 10; ++i) {
        for (int l : {0, 3}) {
            recs.push_back({kT0 + i, l, 1.0, std::nullopt, std::nullopt, 2.0});
        }
    }
    const MethodTrack t("t", recs);
    const auto r = restrict_range(t, EvalRange{kT0 + 2, kT0 + 8});
    CHECK(r.at_horizon(0).size() == 7);
    CHECK(r.at_horizon(3).size() == 4);
    CHECK(r.at_horizon(3).back().origin == kT0 + 5);
}

TEST_CASE("naive forecasts")
{
    const WeeklySeries y(kT0, {100, 350000, 7, 9, 11});
    const std::vector<int> hs{0, 1, 2, 3};
    const auto f = naive_forecast(y, kT0 + 2, hs);
    REQUIRE(f.size() == 4);
    for (const auto& r : f) {
        CHECK(r.point == 350000.0);
    }
    CHECK_THROWS_AS(naive_forecast(y, kT0, hs), Error);

    const std::vector<int> h0{0};
    const auto bt = naive_backtest(y, kT0 + 1, kT0 + 4, h0);
    REQUIRE(bt.size() == 4);
    for (const auto& r : bt) {
        CHECK(*r.realized - r.point == y.at(r.origin) - y.at(r.origin - 1));
    }
}

TEST_CASE("cumulative squared error differences")
{
    const std::vector<double> two{2, 2};
    const std::vector<double> one{1, 1};
    const auto c = cssed(from_errors("m", two), from_errors("r", one), 0);
    REQUIRE(c.size() == 2);
    CHECK(c[0] == 3.0);
    CHECK(c[1] == 6.0);
    CHECK(c.start() == kT0);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> ea(50);
    std::vector<double> eb(50);
    for (std::size_t i = 0; i < 50; ++i) {
        ea[i] = std::round(100 * z(rng)) / 8.0;
        eb[i] = std::round(100 * z(rng)) / 8.0;
    }
    const auto a = from_errors("a", ea);
    const auto b = from_errors("b", eb);
    const auto curve = cssed(a, b, 0);
    CHECK(curve[0] == ea[0] * ea[0] - eb[0] * eb[0]);
    for (std::size_t i = 1; i < 50; ++i) {
        CHECK(curve[i] - curve[i - 1] == ea[i] * ea[i] - eb[i] * eb[i]);
    }
    const double mse_a = std::pow(rmse(a, 0), 2);
    const double mse_b = std::pow(rmse(b, 0), 2);
    CHECK(curve[49] == doctest::Approx(50.0 * (mse_a - mse_b)).epsilon(1e-12));

    const auto same = cssed(a, a, 0);
    for (double v : same.values()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("Diebold-Mariano matches a direct computation")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int horizon : {0, 1, 3}) {
        std::vector<double> ea(60);
        std::vector<double> eb(60);
        for (std::size_t i = 0; i < 60; ++i) {
            ea[i] = z(rng);
            eb[i] = 1.3 * z(rng);
        }
        const auto r = diebold_mariano(from_errors("a", ea, horizon), from_errors("b", eb, horizon), horizon);
        const auto [stat, p] = dm_oracle(ea, eb, horizon + 1);
        CHECK(r.statistic == doctest::Approx(stat).epsilon(1e-12));
        CHECK(r.p_value == doctest::Approx(p).epsilon(1e-10));
        CHECK(r.n == 60);
        const boost::math::normal_distribution<double> n01;
        CHECK(r.p_value_normal ==
              doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(n01, std::abs(r.statistic_normal))))
                  .epsilon(1e-10));

        const auto forward = diebold_mariano(ea, eb, horizon);
        const auto swapped = diebold_mariano(eb, ea, horizon);
        CHECK(swapped.statistic == -forward.statistic);
        CHECK(swapped.p_value == forward.p_value);
    }
}

TEST_CASE("Diebold-Mariano calibration")
{
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z(0.0, 1.0);
    int rejections = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<double> ea(200);
        std::vector<double> eb(200);
        for (std::size_t i = 0; i < 200; ++i) {
            ea[i] = z(rng);
            eb[i] = z(rng);
        }
        rejections += diebold_mariano(ea, eb, 0).p_value < 0.05 ? 1 : 0;
    }
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.10);

    std::vector<double> zero(100, 0.0);
    std::vector<double> noisy(100);
    for (double& v : noisy) {
        v = z(rng);
    }
    const auto dom = diebold_mariano(zero, noisy, 0);
    CHECK(dom.p_value < 0.01);
    CHECK(dom.statistic < 0.0);
}

TEST_CASE("Diebold-Mariano preconditions")
{
    std::vector<double> e(30, 1.0);
    e[3] = 2.0;
    try {
        (void)diebold_mariano(e, e, 0);
        FAIL("expected DegenerateDifferential");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::DegenerateDifferential);
    }
    std::vector<double> few(9, 1.0);
    std::vector<double> other(9, 2.0);
    try {
        (void)diebold_mariano(few, other, 0);
        FAIL("expected TrackTooShort");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::TrackTooShort);
    }
}

TEST_CASE("normal QQ data")
{
    const std::vector<double> sym{1.0, -1.0, 0.0};
    const auto q = qq_normal_data(sym);
    REQUIRE(q.size() == 3);
    CHECK(q[0].first == -q[2].first);
    CHECK(q[1].first == 0.0);
    CHECK(q[0].second == -1.0);
    CHECK(q[2].second == 1.0);
    const boost::math::normal_distribution<double> n01;
    CHECK(q[0].first == doctest::Approx(boost::math::quantile(n01, 0.5 / 3.0)).epsilon(1e-12));

    std::mt19937_64 rng(77);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> r(1000);
    for (double& v : r) {
        v = z(rng);
    }
    const auto big = qq_normal_data(r);
    double sxy = 0.0;
    double sxx = 0.0;
    double my = 0.0;
    for (const auto& [a, b] : big) {
        my += b;
    }
    my /= 1000.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
        sxy += big[i].first * (big[i].second - my);
        sxx += big[i].first * big[i].first;
        if (i > 0) {
            CHECK(big[i].first > big[i - 1].first);
            CHECK(big[i].second >= big[i - 1].second);
        }
    }
    const double slope = sxy / sxx;
    CHECK(slope >= 0.9);
    CHECK(slope <= 1.1);

    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(qq_normal_data(two), Error);
}

TEST_CASE("report writers")
{
    const std::vector<double> ea{1, -2, 3, -1, 2, 0.5, -0.5, 1, 2, -3, 1, 1};
    const std::vector<double> eb{2, -2, 1, -3, 2, 1.5, -2.5, 1, 0, -1, 2, 2};
    const std::vector<MethodTrack> tracks{from_errors("prism", ea), from_errors("naive", eb)};
    const std::vector<int> hs{0};

    std::ostringstream rel;
    const auto rows = relative_errors(tracks, tracks[1]);
    write_relative_errors_csv(rel, rows);
    CHECK(rel.str().rfind("method,horizon,rmse_rel,mae_rel,rmse_abs,mae_abs\n", 0) == 0);
    CHECK(rel.str().find("\nnaive,0,1,1,") != std::string::npos);

    std::ostringstream dm;
    write_dm_matrix_csv(dm, tracks, hs);
    std::istringstream lines(dm.str());
    std::string header;
    std::string first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header == "horizon,method,prism,naive");
    CHECK(first.rfind("0,prism,,", 0) == 0);

    std::ostringstream c;
    write_cssed_csv(c, cssed(tracks[0], tracks[1], 0));
    CHECK(c.str().rfind("origin_date,cssed\n2007-01-06,-3\n", 0) == 0);

    std::ostringstream qq;
    write_qq_csv(qq, qq_normal_data(ea));
    CHECK(qq.str().rfind("theoretical,sample\n", 0) == 0);
}

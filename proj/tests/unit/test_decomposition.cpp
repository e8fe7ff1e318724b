#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "prism/decomposition.hpp"
#include "prism/error.hpp"

using namespace prism;

namespace {

const WeekStamp kStart = WeekStamp::parse("1995-01-07");

WeeklySeries make(std::vector<double> v) { return WeeklySeries(kStart, std::move(v)); }

void check_reconstruction(const DecompositionResult& d, double tol)
{
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double y = d.input[i];
        const double sum = d.seasonal[i] + d.trend[i] + d.remainder[i];
        CHECK(std::abs(sum - y) <= tol * std::max(1.0, std::abs(y)));
        CHECK(d.seasonally_adjusted[i] == y - d.seasonal[i]);
    }
    CHECK(d.seasonal.start() == d.input.start());
    CHECK(d.trend.size() == d.input.size());
    CHECK(d.remainder.size() == d.input.size());
}

} // namespace

TEST_CASE("loess reproduces constants and lines")
{
    std::vector<double> x(40);
    std::iota(x.begin(), x.end(), 1.0);
    std::vector<double> c(40, 7.25);
    std::vector<double> line(40);
    for (std::size_t i = 0; i < 40; ++i) {
        line[i] = -3.0 + 0.75 * x[i];
    }
    for (int window : {3, 5, 11, 39, 40, 61}) {
        for (int degree : {0, 1, 2}) {
            for (double v : loess_smooth(c, x, window, degree)) {
                CHECK(v == doctest::Approx(7.25).epsilon(1e-12));
            }
        }
        const auto fit = loess_smooth(line, x, window, 1);
        for (std::size_t i = 0; i < 40; ++i) {
            CHECK(std::abs(fit[i] - line[i]) < 1e-9);
        }
    }
}

TEST_CASE("loess matches the per-point weighted least-squares oracle")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SUBCASE("quadratic input, degree 1, window 5")
    {
        std::vector<double> x(30);
        std::vector<double> y(30);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<double>(i + 1);
            y[i] = x[i] * x[i];
        }
        const auto fit = loess_smooth(y, x, 5, 1);
        for (std::size_t i = 2; i + 2 < x.size(); ++i) {
            CHECK(fit[i] == doctest::Approx(oracle::loess_at(x, y, i, 5, 1)).epsilon(1e-10));
        }
    }
    SUBCASE("irregular positions, random data")
    {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> x(25);
            double pos = 0.0;
            for (double& v : x) {
                pos += 0.2 + u(rng);
                v = pos;
            }
            std::vector<double> y(25);
            for (double& v : y) {
                v = 10.0 * u(rng);
            }
            const int window = 5 + 2 * (rep % 6);
            const int degree = 1 + rep % 2;
            const auto fit = loess_smooth(y, x, window, degree);
            for (std::size_t i = 0; i < x.size(); ++i) {
                CHECK(fit[i] == doctest::Approx(oracle::loess_at(x, y, i, window, degree)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("loess robustness weights and degenerate neighbourhoods")
{
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> y{1, 2, 3, 100, 5, 6, 7};
    std::vector<double> rw{1, 1, 1, 0, 1, 1, 1};
    const auto fit = loess_smooth(y, x, 5, 1, std::span<const double>(rw));
    CHECK(fit[3] == doctest::Approx(4.0).epsilon(1e-12));

    // All neighbours at one position: the slope is unidentified, so the fit falls back.
    std::vector<double> tied{2, 2, 2, 2, 2};
    std::vector<double> vals{1, 2, 3, 4, 5};
    LoessStats stats;
    const auto flat = loess_smooth(vals, tied, 5, 1, {}, &stats);
    CHECK(stats.degree_fallbacks == 5);
    for (double v : flat) {
        CHECK(v == doctest::Approx(3.0));
    }

    CHECK_THROWS_AS(loess_smooth(vals, tied, 1, 1), Error);
    CHECK_THROWS_AS(loess_smooth(vals, std::vector<double>{1, 2}, 3, 1), Error);
}

TEST_CASE("STL on a constant series")
{
    const auto d = stl_decompose(make(std::vector<double>(300, 42.0)));
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(std::abs(d.seasonal[i]) < 1e-8);
        CHECK(std::abs(d.trend[i] - 42.0) < 1e-8);
        CHECK(std::abs(d.remainder[i]) < 1e-8);
    }
    CHECK(d.method == DecompositionMethod::STL);
}

TEST_CASE("STL recovers a sinusoid plus a line")
{
    std::vector<double> v(700);
    std::vector<double> truth(700);
    for (std::size_t t = 0; t < v.size(); ++t) {
        truth[t] = 100.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t + 1) / 52.0);
        v[t] = truth[t] + 0.5 * static_cast<double>(t + 1);
    }
    for (const auto& cfg : {StlConfig{}, StlConfig::robust()}) {
        const auto d = stl_decompose(make(v), cfg);
        CHECK(oracle::correlation(d.seasonal.values(), truth) > 0.99);
        double worst = 0.0;
        for (std::size_t t = 52; t + 52 < v.size(); ++t) {
            worst = std::max(worst, std::abs(d.trend[t] - 0.5 * static_cast<double>(t + 1)));
        }
        CHECK(worst < 5.0);
        // Each full year of a periodic seasonal sums to almost nothing.
        for (std::size_t b = 0; b + 52 <= v.size(); b += 52) {
            double s = 0.0;
            for (std::size_t t = b; t < b + 52; ++t) {
                s += d.seasonal[t];
            }
            CHECK(std::abs(s / 52.0) < 1.0);
        }
        check_reconstruction(d, 1e-10);
    }
}

TEST_CASE("STL reconstruction on random series")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> v(104 + 30 * rep);
        for (double& x : v) {
            x = 1e5 + 3e4 * z(rng);
        }
        StlConfig cfg;
        if (rep % 3 == 1) {
            cfg.seasonal_window = 7;
        }
        if (rep % 3 == 2) {
            cfg = StlConfig::robust();
        }
        check_reconstruction(stl_decompose(make(v), cfg), 1e-10);
    }
}

TEST_CASE("STL config")
{
    StlConfig cfg;
    CHECK(cfg.effective_trend_window() == 79);
    CHECK(cfg.effective_low_pass_window() == 53);
    cfg.seasonal_window = 7;
    CHECK(cfg.effective_trend_window() % 2 == 1);
    CHECK(cfg.effective_trend_window() >= 1.5 * 52 / (1 - 1.5 / 7));
    cfg.seasonal_window = 6;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.seasonal_window = 7;
    cfg.inner_loops = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);

    const auto r = StlConfig::robust();
    CHECK(r.inner_loops == 1);
    CHECK(r.outer_loops == 10);

    try {
        (void)stl_decompose(make(std::vector<double>(103, 1.0)));
        FAIL("expected SeriesTooShort");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SeriesTooShort);
    }
}

TEST_CASE("classical decomposition")
{
    SUBCASE("constant")
    {
        const auto d = classical_decompose(make(std::vector<double>(200, -3.5)));
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(std::abs(d.seasonal[i]) < 1e-12);
            CHECK(std::abs(d.trend[i] + 3.5) < 1e-12);
            CHECK(std::abs(d.remainder[i]) < 1e-12);
        }
        CHECK(d.trend_extended_weeks == 26);
    }
    SUBCASE("pure seasonal indices are recovered")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> s(52);
        for (double& v : s) {
            v = z(rng);
        }
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / 52.0;
        for (double& v : s) {
            v -= mean;
        }
        std::vector<double> v(52 * 13);
        for (std::size_t t = 0; t < v.size(); ++t) {
            v[t] = s[t % 52];
        }
        const auto d = classical_decompose(make(v));
        for (std::size_t t = 26; t + 26 < v.size(); ++t) {
            CHECK(std::abs(d.seasonal[t] - s[t % 52]) < 1e-8);
        }
        check_reconstruction(d, 1e-10);
    }
    SUBCASE("trend is the centred 2x52 moving average")
    {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> v(200);
        for (double& x : v) {
            x = z(rng);
        }
        const auto d = classical_decompose(make(v));
        for (std::size_t t = 26; t + 26 < v.size(); ++t) {
            double acc = 0.5 * (v[t - 26] + v[t + 26]);
            for (std::size_t k = t - 25; k <= t + 25; ++k) {
                acc += v[k];
            }
            CHECK(d.trend[t] == doctest::Approx(acc / 52.0).epsilon(1e-12));
        }
        CHECK(d.trend[0] == d.trend[26]);
        CHECK(d.trend[199] == d.trend[173]);
    }
    SUBCASE("too short")
    {
        CHECK_THROWS_AS(classical_decompose(make(std::vector<double>(60, 1.0))), Error);
    }
}

TEST_CASE("vintages")
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> v(900);
    for (std::size_t t = 0; t < v.size(); ++t) {
        v[t] = 20.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 52.0) + z(rng);
    }
    const auto y = make(v);
    const WeekStamp t = kStart + 750;

    const auto d = vintage_decompose(y, t, 700);
    CHECK(d.size() == 700);
    CHECK(d.end() == t - 1);
    CHECK(d.start() == t - 700);

    SUBCASE("future values are never read")
    {
        std::vector<double> poisoned(v.begin(), v.end());
        for (std::size_t i = 750; i < poisoned.size(); ++i) {
            poisoned[i] = std::numeric_limits<double>::quiet_NaN();
        }
        const WeeklySeries yp(kStart, poisoned, MissingValues::AllowNaN);
        for (auto method : {DecompositionMethod::STL, DecompositionMethod::ClassicalAdditive}) {
            const auto a = vintage_decompose(y, t, 700, {}, method);
            const auto b = vintage_decompose(yp, t, 700, {}, method);
            for (std::size_t i = 0; i < a.size(); ++i) {
                CHECK(a.seasonal[i] == b.seasonal[i]);
                CHECK(a.trend[i] == b.trend[i]);
            }
        }
    }
    SUBCASE("constant series vintages agree on their overlap")
    {
        const WeeklySeries c(kStart, std::vector<double>(900, 5.0));
        const auto a = vintage_decompose(c, t, 700);
        const auto b = vintage_decompose(c, t + 1, 700);
        for (std::size_t i = 1; i < a.size(); ++i) {
            CHECK(std::abs(a.seasonal[i] - b.seasonal[i - 1]) < 1e-10);
        }
    }
    SUBCASE("insufficient history")
    {
        try {
            (void)vintage_decompose(y, kStart + 500, 700);
            FAIL("expected InsufficientHistory");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientHistory);
        }
    }
}

TEST_CASE("decomposition csv")
{
    std::vector<double> v(110);
    for (std::size_t t = 0; t < v.size(); ++t) {
        v[t] = static_cast<double>(t % 52);
    }
    std::ostringstream out;
    write_decomposition_csv(out, decompose(make(v), DecompositionMethod::ClassicalAdditive));
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "date,value,seasonal,trend,remainder,method");
    std::getline(in, line);
    CHECK(line.rfind("1995-01-07,0,", 0) == 0);
    CHECK(line.substr(line.size() - 8) == "additive");
    std::size_t rows = 1;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 110);
    CHECK(parse_decomposition_method("classical") == DecompositionMethod::ClassicalAdditive);
    CHECK_THROWS_AS(parse_decomposition_method("x11"), Error);
}

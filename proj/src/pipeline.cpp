#include "prism/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <ostream>
#include <string>
#include <thread>

#include "prism/error.hpp"
#include "prism/stats.hpp"
#include "prism/text_format.hpp"

namespace prism {

void PrismConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (K < 1) {
        fail("K must be >= 1");
    }
    if (N < 10) {
        fail("N must be >= 10");
    }
    if (M < 2 * 52) {
        fail("M must be >= 104");
    }
    if (M < K) {
        fail("M must be >= K");
    }
    if (!(w > 0.0) || !(w <= 1.0)) {
        fail("w must lie in (0, 1]");
    }
    if (horizons.empty()) {
        fail("at least one horizon is required");
    }
    for (int l : horizons) {
        if (l < 0) {
            fail("horizons must be >= 0");
        }
    }
    if (threads < 1) {
        fail("threads must be >= 1");
    }
    if (interval_L < 2) {
        fail("interval_L must be >= 2");
    }
    if (!(interval_alpha > 0.0) || !(interval_alpha < 1.0)) {
        fail("interval_alpha must lie in (0, 1)");
    }
    if (!(penalty.l1_ratio >= 0.0) || !(penalty.l1_ratio <= 1.0)) {
        fail("l1_ratio must lie in [0, 1]");
    }
    if (penalty.path_points < 2 || !(penalty.path_ratio > 0.0) || !(penalty.path_ratio < 1.0)) {
        fail("penalty path needs >= 2 points and 0 < ratio < 1");
    }
    if (penalty.fixed_lambda && !(*penalty.fixed_lambda >= 0.0)) {
        fail("fixed lambda must be >= 0");
    }
    if (penalty.n_folds < 2 || penalty.n_folds > N) {
        fail("n_folds must lie in [2, N]");
    }
    stl.validate();
}

int PrismConfig::max_horizon() const
{
    return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
}

std::vector<double> build_features(const DecompositionResult& vintage,
                                   std::optional<std::span<const double>> x_row, int K)
{
    if (K < 1) {
        throw Error(ErrorCode::InvalidConfig, "K must be >= 1");
    }
    const std::size_t n = vintage.size();
    const auto k = static_cast<std::size_t>(K);
    if (n < k) {
        throw Error(ErrorCode::InsufficientVintage, "vintage of length " + std::to_string(n) +
                                                        " cannot supply " + std::to_string(K) +
                                                        " lags");
    }
    std::vector<double> f;
    f.reserve(2 * k + (x_row ? x_row->size() : 0));
    for (std::size_t j = 1; j <= k; ++j) {
        f.push_back(vintage.seasonally_adjusted[n - j]);
    }
    for (std::size_t j = 1; j <= k; ++j) {
        f.push_back(vintage.seasonal[n - j]);
    }
    if (x_row) {
        f.insert(f.end(), x_row->begin(), x_row->end());
    }
    return f;
}

VintageCache::VintageCache(const PrismConfig& cfg)
    : window_(cfg.M), stl_(cfg.stl), method_(cfg.decomposition_method)
{
}

const DecompositionResult& VintageCache::get(const WeeklySeries& y, WeekStamp at)
{
    auto it = vintages_.find(at);
    if (it == vintages_.end()) {
        it = vintages_.emplace(at, vintage_decompose(y, at, window_, stl_, method_)).first;
    }
    return it->second;
}

void VintageCache::fill(const WeeklySeries& y, WeekStamp from, WeekStamp to)
{
    for (WeekStamp w = from; w <= to; w = w + 1) {
        get(y, w);
    }
}

void VintageCache::evict_before(WeekStamp w)
{
    vintages_.erase(vintages_.begin(), vintages_.lower_bound(w));
}

DesignMatrix assemble_training(const WeeklySeries& y, const ExogenousPanel* x, WeekStamp t, int l,
                               const PrismConfig& cfg, const VintageMap& vintages)
{
    if (l < 0) {
        throw Error(ErrorCode::InvalidConfig, "horizon must be >= 0");
    }
    const WeekStamp first = t - (l + cfg.N);
    const WeekStamp last = t - (l + 1);
    if (!y.contains(first + l) || !y.contains(last + l)) {
        throw Error(ErrorCode::InsufficientHistory,
                    "training at " + t.iso() + " horizon " + std::to_string(l) +
                        " needs responses " + (first + l).iso() + " .. " + (last + l).iso());
    }
    if (x != nullptr && (!x->contains(first) || !x->contains(last))) {
        throw Error(ErrorCode::UncoveredOrigin, "exogenous batch " + x->batch_id() +
                                                    " does not cover training rows " +
                                                    first.iso() + " .. " + last.iso());
    }
    const std::size_t rows = static_cast<std::size_t>(cfg.N);
    const std::size_t p = x != nullptr ? x->width() : 0;
    const std::size_t cols = 2 * static_cast<std::size_t>(cfg.K) + p;

    std::vector<double> data;
    std::vector<double> resp;
    std::vector<double> wts;
    data.reserve(rows * cols);
    resp.reserve(rows);
    wts.reserve(rows);
    for (WeekStamp tau = first; tau <= last; tau = tau + 1) {
        const auto v = vintages.find(tau);
        if (v == vintages.end()) {
            throw Error(ErrorCode::MissingVintage, "no vintage for " + tau.iso());
        }
        std::optional<std::span<const double>> xr;
        if (x != nullptr) {
            xr = x->row_at(tau);
        }
        const auto f = build_features(v->second, xr, cfg.K);
        data.insert(data.end(), f.begin(), f.end());
        resp.push_back(y.at(tau + l));
        wts.push_back(std::pow(cfg.w, static_cast<double>(t - tau)));
    }

    std::vector<PenaltyGroup> groups(cols, PenaltyGroup::TimeSeriesBlock);
    std::fill(groups.begin() + static_cast<std::ptrdiff_t>(2 * cfg.K), groups.end(),
              PenaltyGroup::ExogenousBlock);
    return DesignMatrix(rows, cols, std::move(data), std::move(resp), std::move(wts),
                        std::move(groups));
}

PredictiveInterval predictive_interval(std::span<const TrackPoint> history, double point,
                                       double alpha, int L)
{
    if (L < 1) {
        throw Error(ErrorCode::InvalidConfig, "L must be >= 1");
    }
    if (history.size() < static_cast<std::size_t>(L)) {
        throw Error(ErrorCode::InsufficientTrack,
                    std::to_string(history.size()) + " forecast pairs, need " + std::to_string(L));
    }
    double ss = 0.0;
    for (const auto& tp : history.last(static_cast<std::size_t>(L))) {
        const double e = tp.forecast - tp.realized;
        ss += e * e;
    }
    const double se = std::sqrt(ss / static_cast<double>(L));
    const double half = stats::two_sided_z(alpha) * se;
    return {se, point - half, point + half};
}

PrismForecaster::PrismForecaster(PrismConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_)
{
    cfg_.validate();
}

HorizonModel PrismForecaster::fit_horizon(const WeeklySeries& y, const ExogenousPanel* x,
                                          WeekStamp t, int l)
{
    const DesignMatrix design = assemble_training(y, x, t, l, cfg_, cache_.vintages());
    const auto& pol = cfg_.penalty;

    PenaltySpec chosen;
    if (pol.fixed_lambda) {
        chosen = PenaltySpec::uniform(*pol.fixed_lambda, pol.l1_ratio);
    } else {
        CvOptions cv;
        cv.n_folds = pol.n_folds;
        cv.rule = pol.rule;
        cv.scheme = pol.fold_scheme;
        cv.solver = pol.solver;
        const auto path = lambda_path(design, pol.path_points, pol.path_ratio, pol.l1_ratio);
        if (pol.separate_lambdas && x != nullptr) {
            std::vector<double> values;
            values.reserve(path.size());
            for (const auto& p : path) {
                values.push_back(p.lambda_ts);
            }
            chosen = cross_validate_grid(design, values, values, pol.l1_ratio, cv).selected;
        } else {
            chosen = cross_validate(design, path, cv).selected;
        }
    }

    HorizonModel m{t, l, fit_penalized(design, chosen, pol.solver), chosen, design.rows()};
    return m;
}

OriginForecast PrismForecaster::forecast(const WeeklySeries& y, const ExogenousSelector& x,
                                         WeekStamp t)
{
    const std::size_t nh = cfg_.horizons.size();
    std::vector<const ExogenousPanel*> panels(nh, nullptr);
    for (std::size_t i = 0; i < nh; ++i) {
        const int l = cfg_.horizons[i];
        if (cfg_.use_exogenous) {
            panels[i] = x ? x(t, l) : nullptr;
            if (panels[i] == nullptr) {
                throw Error(ErrorCode::UncoveredOrigin,
                            "no exogenous batch for origin " + t.iso() + " horizon " + std::to_string(l));
            }
            if (!panels[i]->contains(t)) {
                throw Error(ErrorCode::UncoveredOrigin,
                            "exogenous batch " + panels[i]->batch_id() + " ends before " + t.iso());
            }
        }
    }
    // Vintages are computed up front so the fits below only read the cache.
    cache_.fill(y, t - (cfg_.max_horizon() + cfg_.N), t);
    const auto& now = cache_.vintages().at(t);

    std::vector<std::optional<HorizonModel>> models(nh);
    std::vector<std::exception_ptr> failures(nh);
    auto work = [&](std::size_t i) {
        try {
            models[i] = fit_horizon(y, panels[i], t, cfg_.horizons[i]);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.threads), nh);
    if (workers <= 1) {
        for (std::size_t i = 0; i < nh; ++i) {
            work(i);
        }
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w0 = 0; w0 < workers; ++w0) {
            pool.emplace_back([&, w0] {
                for (std::size_t i = w0; i < nh; i += workers) {
                    work(i);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    OriginForecast out;
    for (std::size_t i = 0; i < nh; ++i) {
        if (failures[i]) {
            std::rethrow_exception(failures[i]);
        }
        std::optional<std::span<const double>> xr;
        if (panels[i] != nullptr) {
            xr = panels[i]->row_at(t);
        }
        ForecastRecord rec;
        rec.origin = t;
        rec.horizon = cfg_.horizons[i];
        rec.point = models[i]->fit.predict(build_features(now, xr, cfg_.K));
        out.records.push_back(rec);
        out.models.push_back(std::move(*models[i]));
    }
    return out;
}

OriginForecast PrismForecaster::forecast(const WeeklySeries& y, const ExogenousPanel* x,
                                         WeekStamp t)
{
    ExogenousSelector sel;
    if (x != nullptr) {
        sel = [x](WeekStamp, int) { return x; };
    }
    return forecast(y, sel, t);
}

std::vector<ForecastRecord> forecast_one(const WeeklySeries& y, const ExogenousPanel* x,
                                         WeekStamp t, const PrismConfig& cfg,
                                         const std::map<int, std::vector<TrackPoint>>* track)
{
    if (!y.contains(t - cfg.required_history()) || !y.contains(t - 1)) {
        throw Error(ErrorCode::InsufficientHistory,
                    "origin " + t.iso() + " needs target history from " +
                        (t - cfg.required_history()).iso());
    }
    PrismForecaster f(cfg);
    auto recs = f.forecast(y, x, t).records;
    if (track != nullptr) {
        for (auto& r : recs) {
            const auto it = track->find(r.horizon);
            if (it != track->end() && it->second.size() >= static_cast<std::size_t>(cfg.interval_L)) {
                const auto pi = predictive_interval(it->second, r.point, cfg.interval_alpha,
                                                    cfg.interval_L);
                r.se = pi.se;
                r.interval = std::pair{pi.lo, pi.hi};
            }
        }
    }
    return recs;
}

void fill_realized(std::vector<ForecastRecord>& records, const WeeklySeries& y)
{
    for (auto& r : records) {
        const WeekStamp target = r.target();
        if (y.contains(target)) {
            const double v = y.at(target);
            if (std::isfinite(v)) {
                r.realized = v;
            }
        }
    }
}

void attach_intervals(std::vector<ForecastRecord>& records, const PrismConfig& cfg)
{
    // Per horizon: records in origin order. A pair enters the track once its target week
    // is observable at the current origin, i.e. target <= origin - 1.
    std::map<int, std::vector<std::size_t>> by_h;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_h[records[i].horizon].push_back(i);
    }
    for (auto& [h, idx] : by_h) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return records[a].origin < records[b].origin;
        });
        std::vector<TrackPoint> track;
        std::size_t next = 0;
        for (std::size_t i : idx) {
            auto& r = records[i];
            while (next < idx.size() && records[idx[next]].target() < r.origin) {
                const auto& done = records[idx[next]];
                if (done.realized) {
                    track.push_back({done.point, *done.realized});
                }
                ++next;
            }
            if (track.size() >= static_cast<std::size_t>(cfg.interval_L)) {
                const auto pi = predictive_interval(track, r.point, cfg.interval_alpha,
                                                    cfg.interval_L);
                r.se = pi.se;
                r.interval = std::pair{pi.lo, pi.hi};
            } else {
                r.se.reset();
                r.interval.reset();
            }
        }
    }
}

std::vector<ForecastRecord> backtest(const WeeklySeries& y, const ExogenousSelector& x,
                                     WeekStamp from, WeekStamp to, const PrismConfig& cfg)
{
    if (from > to) {
        throw Error(ErrorCode::InvalidConfig, "backtest range is empty");
    }
    if (!y.contains(from - cfg.required_history())) {
        throw Error(ErrorCode::InsufficientHistory,
                    "first origin " + from.iso() + " needs target history from " +
                        (from - cfg.required_history()).iso() + ", series starts " +
                        y.start().iso());
    }
    if (!y.contains(to - 1)) {
        throw Error(ErrorCode::InsufficientHistory,
                    "last origin " + to.iso() + " needs the target through " + (to - 1).iso());
    }
    PrismForecaster f(cfg);
    std::vector<ForecastRecord> out;
    out.reserve(static_cast<std::size_t>((to - from) + 1) * cfg.horizons.size());
    for (WeekStamp t = from; t <= to; t = t + 1) {
        f.cache().evict_before(t - (cfg.max_horizon() + cfg.N));
        auto recs = f.forecast(y, x, t).records;
        out.insert(out.end(), recs.begin(), recs.end());
    }
    fill_realized(out, y);
    attach_intervals(out, cfg);
    return out;
}

std::vector<ForecastRecord> backtest(const WeeklySeries& y, const ExogenousPanel* x,
                                     WeekStamp from, WeekStamp to, const PrismConfig& cfg)
{
    ExogenousSelector sel;
    if (x != nullptr) {
        sel = [x](WeekStamp, int) { return x; };
    }
    return backtest(y, sel, from, to, cfg);
}

namespace {

std::string opt_field(const std::optional<double>& v)
{
    return v ? format_number(*v) : std::string{};
}

} // namespace

void write_forecast_csv(std::ostream& out, std::span<const ForecastRecord> records)
{
    out << "origin_date,horizon,point,se,lo,hi,realized\n";
    for (const auto& r : records) {
        out << r.origin.iso() << ',' << r.horizon << ',' << format_number(r.point) << ','
            << opt_field(r.se) << ','
            << (r.interval ? format_number(r.interval->first) : std::string{}) << ','
            << (r.interval ? format_number(r.interval->second) : std::string{}) << ','
            << opt_field(r.realized) << '\n';
    }
}

std::vector<ForecastRecord> read_forecast_csv(std::istream& in)
{
    std::vector<ForecastRecord> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::ParseError, "forecast csv line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto cells = split_csv_line(body);
        if (header) {
            header = false;
            if (cells.size() < 3 || trim(cells[0]) != "origin_date") {
                fail("expected header origin_date,horizon,point,...");
            }
            continue;
        }
        if (cells.size() != 7 && cells.size() != 3) {
            fail("expected 7 fields, got " + std::to_string(cells.size()));
        }
        ForecastRecord r;
        const auto d = parse_iso_date(trim(cells[0]));
        if (!d) {
            fail("bad origin date '" + cells[0] + "'");
        }
        const auto wd = std::chrono::weekday(*d);
        if (wd != std::chrono::Saturday) {
            fail("origin " + cells[0] + " is not a Saturday");
        }
        r.origin = WeekStamp(*d);
        const auto h = parse_number(trim(cells[1]));
        if (!h || *h < 0 || *h != std::floor(*h)) {
            fail("bad horizon '" + cells[1] + "'");
        }
        r.horizon = static_cast<int>(*h);
        const auto p = parse_number(trim(cells[2]));
        if (!p) {
            fail("bad point forecast '" + cells[2] + "'");
        }
        r.point = *p;
        auto optional_cell = [&](std::size_t i) -> std::optional<double> {
            if (i >= cells.size() || trim(cells[i]).empty()) {
                return std::nullopt;
            }
            const auto v = parse_number(trim(cells[i]));
            if (!v) {
                fail("bad number '" + cells[i] + "'");
            }
            return v;
        };
        r.se = optional_cell(3);
        const auto lo = optional_cell(4);
        const auto hi = optional_cell(5);
        if (lo.has_value() != hi.has_value()) {
            fail("interval needs both lo and hi");
        }
        if (lo) {
            r.interval = std::pair{*lo, *hi};
        }
        r.realized = optional_cell(6);
        out.push_back(r);
    }
    if (header) {
        throw Error(ErrorCode::ParseError, "forecast csv is empty");
    }
    return out;
}

} // namespace prism

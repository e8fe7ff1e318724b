#include "prism/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "prism/error.hpp"
#include "prism/stats.hpp"
#include "prism/text_format.hpp"

namespace prism {

MethodTrack::MethodTrack(std::string method_name, std::vector<ForecastRecord> records)
    : name_(std::move(method_name))
{
    for (auto& r : records) {
        if (r.realized) {
            records_.push_back(std::move(r));
        }
    }
    std::stable_sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
        return a.origin != b.origin ? a.origin < b.origin : a.horizon < b.horizon;
    });
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].origin == records_[i - 1].origin &&
            records_[i].horizon == records_[i - 1].horizon) {
            throw Error(ErrorCode::GridMismatch, "track '" + name_ + "' repeats origin " +
                                                     records_[i].origin.iso() + " horizon " +
                                                     std::to_string(records_[i].horizon));
        }
    }
}

std::vector<ForecastRecord> MethodTrack::at_horizon(int l) const
{
    std::vector<ForecastRecord> out;
    for (const auto& r : records_) {
        if (r.horizon == l) {
            out.push_back(r);
        }
    }
    return out;
}

std::vector<int> MethodTrack::horizons() const
{
    std::set<int> hs;
    for (const auto& r : records_) {
        hs.insert(r.horizon);
    }
    return {hs.begin(), hs.end()};
}

MethodTrack restrict_range(const MethodTrack& track, const EvalRange& range)
{
    std::vector<ForecastRecord> kept;
    for (const auto& r : track.records()) {
        if (range.first_origin && r.origin < *range.first_origin) {
            continue;
        }
        if (range.last_target && r.target() > *range.last_target) {
            continue;
        }
        kept.push_back(r);
    }
    return MethodTrack(track.method_name(), std::move(kept));
}

std::vector<ForecastRecord> naive_forecast(const WeeklySeries& y, WeekStamp t,
                                           std::span<const int> horizons)
{
    const WeekStamp last = t - 1;
    if (!y.contains(last) || !std::isfinite(y.at(last))) {
        throw Error(ErrorCode::InsufficientHistory, "naive forecast at " + t.iso() +
                                                        " needs the value for " + last.iso());
    }
    const double v = y.at(last);
    std::vector<ForecastRecord> out;
    for (int l : horizons) {
        ForecastRecord r;
        r.origin = t;
        r.horizon = l;
        r.point = v;
        out.push_back(r);
    }
    return out;
}

std::vector<ForecastRecord> naive_backtest(const WeeklySeries& y, WeekStamp from, WeekStamp to,
                                           std::span<const int> horizons)
{
    std::vector<ForecastRecord> out;
    for (WeekStamp t = from; t <= to; t = t + 1) {
        auto recs = naive_forecast(y, t, horizons);
        out.insert(out.end(), recs.begin(), recs.end());
    }
    fill_realized(out, y);
    return out;
}

std::vector<double> forecast_errors(const MethodTrack& track, int horizon)
{
    std::vector<double> e;
    for (const auto& r : track.records()) {
        if (r.horizon == horizon) {
            e.push_back(r.point - *r.realized);
        }
    }
    return e;
}

namespace {

std::vector<double> nonempty_errors(const MethodTrack& track, int horizon)
{
    auto e = forecast_errors(track, horizon);
    if (e.empty()) {
        throw Error(ErrorCode::EmptyTrack, "track '" + track.method_name() +
                                               "' has no realized records at horizon " +
                                               std::to_string(horizon));
    }
    return e;
}

std::vector<WeekStamp> origins_at(const MethodTrack& track, int horizon)
{
    std::vector<WeekStamp> o;
    for (const auto& r : track.records()) {
        if (r.horizon == horizon) {
            o.push_back(r.origin);
        }
    }
    return o;
}

void require_same_grid(const MethodTrack& a, const MethodTrack& b, int horizon)
{
    if (origins_at(a, horizon) != origins_at(b, horizon)) {
        throw Error(ErrorCode::GridMismatch, "tracks '" + a.method_name() + "' and '" +
                                                 b.method_name() +
                                                 "' cover different origins at horizon " +
                                                 std::to_string(horizon));
    }
}

} // namespace

double rmse(const MethodTrack& track, int horizon)
{
    const auto e = nonempty_errors(track, horizon);
    double ss = 0.0;
    for (double v : e) {
        ss += v * v;
    }
    return std::sqrt(ss / static_cast<double>(e.size()));
}

double mae(const MethodTrack& track, int horizon)
{
    const auto e = nonempty_errors(track, horizon);
    double s = 0.0;
    for (double v : e) {
        s += std::abs(v);
    }
    return s / static_cast<double>(e.size());
}

std::vector<RelativeErrorRow> relative_errors(std::span<const MethodTrack> tracks,
                                              const MethodTrack& reference)
{
    std::vector<RelativeErrorRow> rows;
    const auto hs = reference.horizons();
    if (hs.empty()) {
        throw Error(ErrorCode::EmptyTrack, "reference track is empty");
    }
    for (const auto& t : tracks) {
        if (t.horizons() != hs) {
            throw Error(ErrorCode::GridMismatch,
                        "track '" + t.method_name() + "' covers different horizons");
        }
        for (int l : hs) {
            require_same_grid(t, reference, l);
        }
    }
    for (const auto& t : tracks) {
        for (int l : hs) {
            const double ref_r = rmse(reference, l);
            const double ref_m = mae(reference, l);
            if (!(ref_r > 0.0) || !(ref_m > 0.0)) {
                throw Error(ErrorCode::ZeroReferenceError,
                            "reference '" + reference.method_name() + "' has zero error at horizon " +
                                std::to_string(l));
            }
            RelativeErrorRow row;
            row.method = t.method_name();
            row.horizon = l;
            row.rmse_abs = rmse(t, l);
            row.mae_abs = mae(t, l);
            row.rmse_rel = row.rmse_abs / ref_r;
            row.mae_rel = row.mae_abs / ref_m;
            rows.push_back(row);
        }
    }
    return rows;
}

WeeklySeries cssed(const MethodTrack& method, const MethodTrack& reference, int horizon)
{
    require_same_grid(method, reference, horizon);
    const auto origins = origins_at(method, horizon);
    if (origins.empty()) {
        throw Error(ErrorCode::EmptyTrack, "no records at horizon " + std::to_string(horizon));
    }
    for (std::size_t i = 1; i < origins.size(); ++i) {
        if (origins[i] - origins[i - 1] != 1) {
            throw Error(ErrorCode::GridMismatch, "origins are not consecutive weeks at " +
                                                     origins[i].iso());
        }
    }
    const auto em = forecast_errors(method, horizon);
    const auto er = forecast_errors(reference, horizon);
    std::vector<double> curve(em.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < em.size(); ++i) {
        acc += em[i] * em[i] - er[i] * er[i];
        curve[i] = acc;
    }
    return WeeklySeries(origins.front(), std::move(curve));
}

DmResult diebold_mariano(std::span<const double> errors_a, std::span<const double> errors_b,
                         int horizon)
{
    if (errors_a.size() != errors_b.size()) {
        throw Error(ErrorCode::GridMismatch, "error sequences differ in length");
    }
    const std::size_t n = errors_a.size();
    if (n < 10) {
        throw Error(ErrorCode::TrackTooShort, std::to_string(n) + " paired errors, need >= 10");
    }
    if (horizon < 0) {
        throw Error(ErrorCode::InvalidConfig, "horizon must be >= 0");
    }
    const double nd = static_cast<double>(n);
    std::vector<double> d(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
        mean += d[i];
    }
    mean /= nd;

    const int h = horizon + 1;
    auto autocov = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            s += (d[i] - mean) * (d[i - k] - mean);
        }
        return s / nd;
    };
    const double gamma0 = autocov(0);
    double scale = 0.0;
    for (double v : d) {
        scale = std::max(scale, std::abs(v));
    }
    if (!(gamma0 > 1e-24 * scale * scale) || !(gamma0 > 0.0)) {
        throw Error(ErrorCode::DegenerateDifferential, "loss differential has zero variance");
    }
    double lrv = gamma0;
    for (int k = 1; k < h && static_cast<std::size_t>(k) < n; ++k) {
        lrv += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(h)) *
               autocov(static_cast<std::size_t>(k));
    }

    DmResult r;
    r.n = n;
    r.horizon = horizon;
    r.mean_differential = mean;
    r.long_run_variance = lrv;
    r.statistic_normal = mean / std::sqrt(lrv / nd);
    const double hd = static_cast<double>(h);
    const double hln = std::sqrt((nd + 1.0 - 2.0 * hd + hd * (hd - 1.0) / nd) / nd);
    r.statistic = r.statistic_normal * hln;
    r.p_value = stats::student_t_two_sided_p(r.statistic, nd - 1.0);
    r.p_value_normal = stats::normal_two_sided_p(r.statistic_normal);
    return r;
}

DmResult diebold_mariano(const MethodTrack& a, const MethodTrack& b, int horizon)
{
    require_same_grid(a, b, horizon);
    return diebold_mariano(forecast_errors(a, horizon), forecast_errors(b, horizon), horizon);
}

std::vector<std::pair<double, double>> qq_normal_data(std::span<const double> residuals)
{
    const std::size_t n = residuals.size();
    if (n < 3) {
        throw Error(ErrorCode::TooFew, std::to_string(n) + " residuals, need >= 3");
    }
    std::vector<double> s(residuals.begin(), residuals.end());
    std::sort(s.begin(), s.end());
    std::vector<std::pair<double, double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        out[i] = {stats::normal_quantile(p), s[i]};
    }
    // Exact antisymmetry of the plotting positions.
    for (std::size_t i = 0; i < n / 2; ++i) {
        out[n - 1 - i].first = -out[i].first;
    }
    if (n % 2 == 1) {
        out[n / 2].first = 0.0;
    }
    return out;
}

void write_relative_errors_csv(std::ostream& out, std::span<const RelativeErrorRow> rows)
{
    out << "method,horizon,rmse_rel,mae_rel,rmse_abs,mae_abs\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.horizon << ',' << format_number(r.rmse_rel) << ','
            << format_number(r.mae_rel) << ',' << format_number(r.rmse_abs) << ','
            << format_number(r.mae_abs) << '\n';
    }
}

void write_dm_matrix_csv(std::ostream& out, std::span<const MethodTrack> tracks,
                         std::span<const int> horizons)
{
    out << "horizon,method";
    for (const auto& t : tracks) {
        out << ',' << t.method_name();
    }
    out << '\n';
    for (int l : horizons) {
        for (const auto& a : tracks) {
            out << l << ',' << a.method_name();
            for (const auto& b : tracks) {
                out << ',';
                if (&a == &b) {
                    continue;
                }
                try {
                    out << format_number(diebold_mariano(a, b, l).p_value);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::DegenerateDifferential &&
                        e.code() != ErrorCode::TrackTooShort) {
                        throw;
                    }
                    out << "NA";
                }
            }
            out << '\n';
        }
    }
}

void write_dm_details_csv(std::ostream& out, std::span<const MethodTrack> tracks,
                          std::span<const int> horizons)
{
    out << "method_a,method_b,horizon,n,mean_differential,statistic,p_value,statistic_normal,"
           "p_value_normal\n";
    for (int l : horizons) {
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            for (std::size_t j = i + 1; j < tracks.size(); ++j) {
                out << tracks[i].method_name() << ',' << tracks[j].method_name() << ',' << l << ',';
                try {
                    const auto r = diebold_mariano(tracks[i], tracks[j], l);
                    out << r.n << ',' << format_number(r.mean_differential) << ','
                        << format_number(r.statistic) << ',' << format_number(r.p_value) << ','
                        << format_number(r.statistic_normal) << ','
                        << format_number(r.p_value_normal) << '\n';
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::DegenerateDifferential &&
                        e.code() != ErrorCode::TrackTooShort) {
                        throw;
                    }
                    out << ",,NA,NA,NA,NA\n";
                }
            }
        }
    }
}

void write_cssed_csv(std::ostream& out, const WeeklySeries& curve)
{
    out << "origin_date,cssed\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << curve.week(i).iso() << ',' << format_number(curve[i]) << '\n';
    }
}

void write_qq_csv(std::ostream& out, std::span<const std::pair<double, double>> pairs)
{
    out << "theoretical,sample\n";
    for (const auto& [q, s] : pairs) {
        out << format_number(q) << ',' << format_number(s) << '\n';
    }
}

} // namespace prism

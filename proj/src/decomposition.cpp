#include "prism/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "prism/error.hpp"
#include "prism/text_format.hpp"

namespace prism {

namespace {

int next_odd(int v) { return v % 2 == 0 ? v + 1 : v; }

struct Neighborhood {
    std::size_t lo;
    std::size_t hi; // inclusive
};

/// Weighted local polynomial fit at x0 from points [nb.lo, nb.hi]. Returns nullopt when no
/// point carries positive weight.
std::optional<double> local_fit(std::span<const double> xs, std::span<const double> ys,
                                const double* rw, Neighborhood nb, double x0, int window,
                                int degree, double spacing, double range, LoessStats* stats)
{
    const std::size_t n = xs.size();
    double h = std::max(x0 - xs[nb.lo], xs[nb.hi] - x0);
    if (static_cast<std::size_t>(window) > n) {
        h += static_cast<double>((static_cast<std::size_t>(window) - n) / 2) * spacing;
    }
    const double h9 = 0.999 * h;
    const double h1 = 0.001 * h;

    // Weighted moments in scaled coordinates u = (x - x0) / h; u = 0 at the target.
    double mom[5] = {0, 0, 0, 0, 0};
    double rhs[3] = {0, 0, 0};
    double total = 0.0;
    const int moments = 2 * degree + 1;
    for (std::size_t j = nb.lo; j <= nb.hi; ++j) {
        const double r = std::abs(xs[j] - x0);
        if (r > h9) {
            continue;
        }
        double w = 1.0;
        if (r > h1) {
            const double q = r / h;
            const double c = 1.0 - q * q * q;
            w = c * c * c;
        }
        if (rw != nullptr) {
            w *= rw[j];
        }
        if (w <= 0.0) {
            continue;
        }
        total += w;
        const double u = h > 0.0 ? (xs[j] - x0) / h : 0.0;
        double p = w;
        for (int k = 0; k < moments; ++k) {
            mom[k] += p;
            if (k <= degree) {
                rhs[k] += p * ys[j];
            }
            p *= u;
        }
    }
    if (!(total > 0.0)) {
        if (stats != nullptr) {
            ++stats->empty_neighborhoods;
        }
        return std::nullopt;
    }
    for (double& m : mom) {
        m /= total;
    }
    for (double& r : rhs) {
        r /= total;
    }

    // Minimum Schur-complement pivot for a non-degenerate local slope, matching the
    // classic STL criterion sqrt(weighted var of x) > 0.001 * range.
    const double min_pivot = h > 0.0 ? std::pow(1e-3 * range / h, 2) : 0.0;
    for (int deg = degree; deg >= 0; --deg) {
        if (deg == 0 || h <= 0.0) {
            if (degree > 0 && stats != nullptr) {
                ++stats->degree_fallbacks;
            }
            return rhs[0];
        }
        const int m = deg + 1;
        double a[3][4];
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                a[r][c] = mom[r + c];
            }
            a[r][m] = rhs[r];
        }
        bool singular = false;
        // Moment matrices are symmetric positive semi-definite: eliminate without pivoting and
        // treat a small pivot as rank deficiency.
        for (int p = 0; p < m && !singular; ++p) {
            if (p > 0 && !(a[p][p] > min_pivot)) {
                singular = true;
                break;
            }
            for (int r = p + 1; r < m; ++r) {
                const double f = a[r][p] / a[p][p];
                for (int c = p; c <= m; ++c) {
                    a[r][c] -= f * a[p][c];
                }
            }
        }
        if (singular) {
            continue;
        }
        double coef[3];
        for (int r = m - 1; r >= 0; --r) {
            double s = a[r][m];
            for (int c = r + 1; c < m; ++c) {
                s -= a[r][c] * coef[c];
            }
            coef[r] = s / a[r][r];
        }
        if (deg != degree && stats != nullptr) {
            ++stats->degree_fallbacks;
        }
        return coef[0];
    }
    return rhs[0];
}

struct LoessFitter {
    std::span<const double> xs;
    std::span<const double> ys;
    const double* rw;
    int window;
    int degree;
    double spacing;
    double range;
    LoessStats* stats;

    LoessFitter(std::span<const double> x, std::span<const double> y, const double* weights,
                int q, int deg, LoessStats* st)
        : xs(x), ys(y), rw(weights), window(q), degree(deg), stats(st)
    {
        range = xs.back() - xs.front();
        spacing = xs.size() > 1 ? range / static_cast<double>(xs.size() - 1) : 1.0;
        if (!(spacing > 0.0)) {
            spacing = 1.0;
        }
    }

    std::size_t span() const
    {
        return std::min(xs.size(), static_cast<std::size_t>(window));
    }

    std::vector<double> at_data() const
    {
        const std::size_t n = xs.size();
        const std::size_t q = span();
        std::vector<double> out(n);
        std::size_t lo = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = xs[i];
            while (lo + q < n && xs[lo + q] - x0 < x0 - xs[lo]) {
                ++lo;
            }
            auto fit = local_fit(xs, ys, rw, {lo, lo + q - 1}, x0, window, degree, spacing, range,
                                 stats);
            out[i] = fit ? *fit : ys[i];
        }
        return out;
    }

    /// Extrapolated fit at x0 outside the data using the `span()` nearest end points.
    std::optional<double> beyond(double x0) const
    {
        const std::size_t n = xs.size();
        const std::size_t q = span();
        const Neighborhood nb = x0 < xs.front() ? Neighborhood{0, q - 1} : Neighborhood{n - q, n - 1};
        return local_fit(xs, ys, rw, nb, x0, window, degree, spacing, range, stats);
    }
};

std::vector<double> unit_positions(std::size_t n)
{
    std::vector<double> p(n);
    std::iota(p.begin(), p.end(), 1.0);
    return p;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t len)
{
    std::vector<double> out(x.size() - len + 1);
    double s = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
    out[0] = s / static_cast<double>(len);
    for (std::size_t i = 1; i < out.size(); ++i) {
        s += x[i + len - 1] - x[i - 1];
        out[i] = s / static_cast<double>(len);
    }
    return out;
}

/// Smooths each cycle-subseries and extends it one period at both ends. The result has
/// n + 2 * period entries; entry period + i lines up with input index i.
std::vector<double> smooth_cycle_subseries(std::span<const double> w, const double* rw,
                                           std::size_t period, int window, int degree)
{
    const std::size_t n = w.size();
    std::vector<double> out(n + 2 * period, 0.0);
    std::vector<double> sub;
    std::vector<double> sub_rw;
    for (std::size_t phase = 0; phase < period; ++phase) {
        sub.clear();
        sub_rw.clear();
        for (std::size_t i = phase; i < n; i += period) {
            sub.push_back(w[i]);
            if (rw != nullptr) {
                sub_rw.push_back(rw[i]);
            }
        }
        const std::size_t k = sub.size();
        const auto pos = unit_positions(k);
        LoessFitter fitter(pos, sub, rw != nullptr ? sub_rw.data() : nullptr, window, degree,
                           nullptr);
        const auto smooth = fitter.at_data();
        const double before = fitter.beyond(0.0).value_or(smooth.front());
        const double after = fitter.beyond(static_cast<double>(k + 1)).value_or(smooth.back());
        out[phase] = before;
        for (std::size_t m = 0; m < k; ++m) {
            out[(m + 1) * period + phase] = smooth[m];
        }
        out[(k + 1) * period + phase] = after;
    }
    return out;
}

std::vector<double> bisquare_weights(std::span<const double> y, std::span<const double> fit)
{
    const std::size_t n = y.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = std::abs(y[i] - fit[i]);
    }
    std::vector<double> sorted = r;
    const std::size_t m1 = n / 2;
    const std::size_t m2 = n - m1 - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m1), sorted.end());
    const double a = sorted[m1];
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m2), sorted.end());
    const double b = sorted[m2];
    const double cmad = 3.0 * (a + b); // six times the median absolute residual
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    std::vector<double> rw(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (r[i] <= c1) {
            rw[i] = 1.0;
        } else if (r[i] <= c9) {
            const double u = r[i] / cmad;
            rw[i] = (1.0 - u * u) * (1.0 - u * u);
        } else {
            rw[i] = 0.0;
        }
    }
    return rw;
}

DecompositionResult assemble(const WeeklySeries& y, std::vector<double> seasonal,
                             std::vector<double> trend, DecompositionMethod method, int period,
                             int extended)
{
    const auto v = y.values();
    const std::size_t n = v.size();
    std::vector<double> remainder(n);
    std::vector<double> adjusted(n);
    for (std::size_t i = 0; i < n; ++i) {
        remainder[i] = v[i] - seasonal[i] - trend[i];
        adjusted[i] = v[i] - seasonal[i];
    }
    return DecompositionResult{y,
                               WeeklySeries(y.start(), std::move(seasonal)),
                               WeeklySeries(y.start(), std::move(trend)),
                               WeeklySeries(y.start(), std::move(remainder)),
                               WeeklySeries(y.start(), std::move(adjusted)),
                               method,
                               period,
                               extended};
}

void require_finite(const WeeklySeries& y, std::string_view what)
{
    for (double v : y.values()) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InvalidSeries,
                        std::string(what) + " input contains unobserved (NaN) weeks");
        }
    }
}

} // namespace

std::string_view to_string(DecompositionMethod m) noexcept
{
    return m == DecompositionMethod::STL ? "stl" : "additive";
}

DecompositionMethod parse_decomposition_method(std::string_view name)
{
    if (name == "stl" || name == "STL") {
        return DecompositionMethod::STL;
    }
    if (name == "additive" || name == "classical") {
        return DecompositionMethod::ClassicalAdditive;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown decomposition method '" + std::string(name) + "'");
}

StlConfig StlConfig::robust(int period)
{
    StlConfig c;
    c.period = period;
    c.inner_loops = 1;
    c.outer_loops = 10;
    return c;
}

int StlConfig::effective_seasonal_window(std::size_t n) const
{
    return seasonal_window ? *seasonal_window : static_cast<int>(10 * n + 1);
}

int StlConfig::effective_trend_window() const
{
    if (trend_window) {
        return *trend_window;
    }
    if (!seasonal_window) {
        return next_odd(static_cast<int>(std::ceil(1.5 * period)));
    }
    const double ns = *seasonal_window;
    return next_odd(static_cast<int>(std::ceil(1.5 * period / (1.0 - 1.5 / ns))));
}

int StlConfig::effective_low_pass_window() const
{
    return low_pass_window ? *low_pass_window : next_odd(period);
}

void StlConfig::validate() const
{
    auto check_window = [](std::optional<int> w, const char* name) {
        if (w && (*w < 3 || *w % 2 == 0)) {
            throw Error(ErrorCode::InvalidConfig,
                        std::string(name) + " must be odd and >= 3, got " + std::to_string(*w));
        }
    };
    if (period < 2) {
        throw Error(ErrorCode::InvalidConfig, "period must be >= 2");
    }
    check_window(seasonal_window, "seasonal_window");
    check_window(trend_window, "trend_window");
    check_window(low_pass_window, "low_pass_window");
    if (inner_loops < 0 || outer_loops < 0) {
        throw Error(ErrorCode::InvalidConfig, "loop counts must be >= 0");
    }
    if (inner_loops == 0) {
        throw Error(ErrorCode::InvalidConfig, "inner_loops must be >= 1 to produce a fit");
    }
    for (int d : {seasonal_degree, trend_degree, low_pass_degree}) {
        if (d < 0 || d > 2) {
            throw Error(ErrorCode::InvalidConfig, "loess degree must be 0, 1 or 2");
        }
    }
}

std::vector<double> loess_smooth(std::span<const double> y, std::span<const double> x_positions,
                                 int window, int degree,
                                 std::optional<std::span<const double>> robustness_weights,
                                 LoessStats* stats)
{
    if (y.size() != x_positions.size() || y.empty()) {
        throw Error(ErrorCode::InvalidConfig, "loess needs equally sized, non-empty y and x");
    }
    if (degree < 0 || degree > 2 || window < degree + 1) {
        throw Error(ErrorCode::InvalidConfig, "loess needs degree in {0,1,2} and window >= degree + 1");
    }
    if (robustness_weights && robustness_weights->size() != y.size()) {
        throw Error(ErrorCode::InvalidConfig, "robustness weights must match y in length");
    }
    if (!std::is_sorted(x_positions.begin(), x_positions.end())) {
        throw Error(ErrorCode::InvalidConfig, "loess positions must be non-decreasing");
    }
    LoessFitter fitter(x_positions, y, robustness_weights ? robustness_weights->data() : nullptr,
                       window, degree, stats);
    return fitter.at_data();
}

DecompositionResult stl_decompose(const WeeklySeries& y, const StlConfig& cfg)
{
    cfg.validate();
    require_finite(y, "STL");
    const std::size_t n = y.size();
    const auto np = static_cast<std::size_t>(cfg.period);
    if (n < 2 * np) {
        throw Error(ErrorCode::SeriesTooShort, "STL needs at least " + std::to_string(2 * np) +
                                                   " weeks, got " + std::to_string(n));
    }
    const bool periodic = !cfg.seasonal_window.has_value();
    const int ns = cfg.effective_seasonal_window(n);
    const int nt = cfg.effective_trend_window();
    const int nl = cfg.effective_low_pass_window();
    const int sdeg = periodic ? 0 : cfg.seasonal_degree;

    const auto v = y.values();
    const auto positions = unit_positions(n);
    std::vector<double> trend(n, 0.0);
    std::vector<double> season(n, 0.0);
    std::vector<double> rw;
    std::vector<double> work(n);

    for (int pass = 0;; ++pass) {
        const double* weights = rw.empty() ? nullptr : rw.data();
        for (int inner = 0; inner < cfg.inner_loops; ++inner) {
            for (std::size_t i = 0; i < n; ++i) {
                work[i] = v[i] - trend[i];
            }
            const auto cycle = smooth_cycle_subseries(work, weights, np, ns, sdeg);
            auto low = moving_average(cycle, np);
            low = moving_average(low, np);
            low = moving_average(low, 3);
            LoessFitter low_fit(positions, low, nullptr, nl, cfg.low_pass_degree, nullptr);
            const auto low_pass = low_fit.at_data();
            for (std::size_t i = 0; i < n; ++i) {
                season[i] = cycle[np + i] - low_pass[i];
                work[i] = v[i] - season[i];
            }
            LoessFitter trend_fit(positions, work, weights, nt, cfg.trend_degree, nullptr);
            trend = trend_fit.at_data();
        }
        if (pass >= cfg.outer_loops) {
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            work[i] = trend[i] + season[i];
        }
        rw = bisquare_weights(v, work);
    }

    if (periodic) {
        std::vector<double> sums(np, 0.0);
        std::vector<double> counts(np, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            sums[i % np] += season[i];
            counts[i % np] += 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            season[i] = sums[i % np] / counts[i % np];
        }
    }
    return assemble(y, std::move(season), std::move(trend), DecompositionMethod::STL, cfg.period,
                    0);
}

DecompositionResult classical_decompose(const WeeklySeries& y, int period)
{
    if (period < 2) {
        throw Error(ErrorCode::InvalidConfig, "period must be >= 2");
    }
    require_finite(y, "classical decomposition");
    const std::size_t n = y.size();
    const auto f = static_cast<std::size_t>(period);
    if (n < 2 * f) {
        throw Error(ErrorCode::SeriesTooShort, "classical decomposition needs at least " +
                                                   std::to_string(2 * f) + " weeks, got " +
                                                   std::to_string(n));
    }
    const auto v = y.values();
    const std::size_t half = f / 2;
    const bool even = f % 2 == 0;
    std::vector<double> trend(n, 0.0);
    const std::size_t first = half;
    const std::size_t last = n - 1 - half;
    for (std::size_t i = first; i <= last; ++i) {
        double s = 0.0;
        if (even) {
            s = 0.5 * (v[i - half] + v[i + half]);
            for (std::size_t j = i - half + 1; j < i + half; ++j) {
                s += v[j];
            }
        } else {
            for (std::size_t j = i - half; j <= i + half; ++j) {
                s += v[j];
            }
        }
        trend[i] = s / static_cast<double>(f);
    }

    std::vector<double> figure(f, 0.0);
    std::vector<double> counts(f, 0.0);
    for (std::size_t i = first; i <= last; ++i) {
        figure[i % f] += v[i] - trend[i];
        counts[i % f] += 1.0;
    }
    for (std::size_t k = 0; k < f; ++k) {
        figure[k] /= counts[k];
    }
    const double centre = std::accumulate(figure.begin(), figure.end(), 0.0) / static_cast<double>(f);
    for (double& s : figure) {
        s -= centre;
    }

    for (std::size_t i = 0; i < first; ++i) {
        trend[i] = trend[first];
    }
    for (std::size_t i = last + 1; i < n; ++i) {
        trend[i] = trend[last];
    }
    std::vector<double> seasonal(n);
    for (std::size_t i = 0; i < n; ++i) {
        seasonal[i] = figure[i % f];
    }
    return assemble(y, std::move(seasonal), std::move(trend),
                    DecompositionMethod::ClassicalAdditive, period, static_cast<int>(half));
}

DecompositionResult decompose(const WeeklySeries& y, DecompositionMethod method,
                              const StlConfig& cfg)
{
    return method == DecompositionMethod::STL ? stl_decompose(y, cfg)
                                              : classical_decompose(y, cfg.period);
}

DecompositionResult vintage_decompose(const WeeklySeries& y_full, WeekStamp t, int window,
                                      const StlConfig& cfg, DecompositionMethod method)
{
    if (window < 1) {
        throw Error(ErrorCode::InvalidConfig, "decomposition window must be positive");
    }
    const WeekStamp from = t - window;
    const WeekStamp to = t - 1;
    if (!y_full.contains(from) || !y_full.contains(to)) {
        throw Error(ErrorCode::InsufficientHistory,
                    "vintage " + t.iso() + " needs weeks " + from.iso() + " .. " + to.iso() +
                        ", series covers " + y_full.start().iso() + " .. " + y_full.end().iso());
    }
    return decompose(slice(y_full, from, to), method, cfg);
}

void write_decomposition_csv(std::ostream& out, const DecompositionResult& d)
{
    out << "date,value,seasonal,trend,remainder,method\n";
    const auto method = to_string(d.method);
    for (std::size_t i = 0; i < d.size(); ++i) {
        out << d.input.week(i).iso() << ',' << format_number(d.input[i]) << ','
            << format_number(d.seasonal[i]) << ',' << format_number(d.trend[i]) << ','
            << format_number(d.remainder[i]) << ',' << method << '\n';
    }
}

} // namespace prism

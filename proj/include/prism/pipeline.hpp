#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "prism/core_series.hpp"
#include "prism/decomposition.hpp"
#include "prism/penalized_regression.hpp"

namespace prism {

/// How the penalty is chosen at each origin and horizon.
struct PenaltyPolicy {
    int path_points = 100;
    double path_ratio = 1e-3;
    double l1_ratio = 1.0;
    int n_folds = 10;
    SelectionRule rule = SelectionRule::Min;
    FoldScheme fold_scheme = FoldScheme::Interleaved;
    /// Search (lambda_ts, lambda_exo) on a 2-D grid instead of tying them.
    bool separate_lambdas = false;
    /// Skip cross-validation and fit every model at this uniform penalty.
    std::optional<double> fixed_lambda;
    SolverOptions solver;
};

struct PrismConfig {
    /// Lags of each decomposed component used as features.
    int K = 52;
    /// Training rows per fit.
    int N = 156;
    /// Decomposition window length.
    int M = 700;
    /// Per-week discount applied to older training rows.
    double w = 0.985;
    std::vector<int> horizons{0, 1, 2, 3};
    bool use_exogenous = true;
    DecompositionMethod decomposition_method = DecompositionMethod::STL;
    StlConfig stl;
    PenaltyPolicy penalty;
    int interval_L = 52;
    double interval_alpha = 0.05;
    /// Worker threads for the per-horizon fits at one origin; results do not depend on it.
    int threads = 1;

    /// Throws Error{InvalidConfig}.
    void validate() const;
    int max_horizon() const;
    /// Weeks of target history needed before the first origin.
    int required_history() const { return M + N + max_horizon(); }
};

struct HorizonModel {
    WeekStamp origin;
    int horizon = 0;
    FitResult fit;
    PenaltySpec lambda;
    std::size_t n_training_rows = 0;
};

struct ForecastRecord {
    WeekStamp origin;
    int horizon = 0;
    double point = 0.0;
    std::optional<double> se;
    std::optional<std::pair<double, double>> interval;
    std::optional<double> realized;

    WeekStamp target() const noexcept { return origin + horizon; }
};

/// Vintages keyed by the week they were produced for, i.e. one past the window's last week.
using VintageMap = std::map<WeekStamp, DecompositionResult>;

/// Lag features at the vintage's own time: z lags 1..K, seasonal lags 1..K, then the
/// exogenous row when given. Throws Error{InsufficientVintage}.
std::vector<double> build_features(const DecompositionResult& vintage,
                                   std::optional<std::span<const double>> x_row, int K);

/// Memoised decompositions of the target. A vintage depends only on the M weeks before its
/// key, so entries stay valid however much later data the caller holds.
class VintageCache {
public:
    explicit VintageCache(const PrismConfig& cfg);

    const DecompositionResult& get(const WeeklySeries& y, WeekStamp at);
    /// Computes every vintage in [from, to].
    void fill(const WeeklySeries& y, WeekStamp from, WeekStamp to);
    void evict_before(WeekStamp w);
    const VintageMap& vintages() const noexcept { return vintages_; }

private:
    int window_;
    StlConfig stl_;
    DecompositionMethod method_;
    VintageMap vintages_;
};

/// Discounted training design for origin `t` and horizon `l`: rows tau = t-l-N .. t-l-1,
/// response y[tau + l], weight w^(t - tau), features from the vintage at tau.
/// `x` may be null. Throws Error{MissingVintage} or Error{InsufficientHistory}.
DesignMatrix assemble_training(const WeeklySeries& y, const ExogenousPanel* x, WeekStamp t, int l,
                               const PrismConfig& cfg, const VintageMap& vintages);

struct TrackPoint {
    double forecast;
    double realized;
};

struct PredictiveInterval {
    double se;
    double lo;
    double hi;
};

/// Root-mean-square error of the most recent `L` pairs, and point +- z * se.
/// Throws Error{InsufficientTrack}.
PredictiveInterval predictive_interval(std::span<const TrackPoint> history, double point,
                                       double alpha, int L);

struct OriginForecast {
    std::vector<ForecastRecord> records;
    std::vector<HorizonModel> models;
};

/// Per-horizon exogenous panel to use at an origin; nullptr means no exogenous block.
using ExogenousSelector = std::function<const ExogenousPanel*(WeekStamp origin, int horizon)>;

class PrismForecaster {
public:
    explicit PrismForecaster(PrismConfig cfg);

    const PrismConfig& config() const noexcept { return cfg_; }

    /// Point forecasts at origin `t`, reading y only before t and x only up to t.
    OriginForecast forecast(const WeeklySeries& y, const ExogenousSelector& x, WeekStamp t);
    OriginForecast forecast(const WeeklySeries& y, const ExogenousPanel* x, WeekStamp t);

    VintageCache& cache() noexcept { return cache_; }

private:
    HorizonModel fit_horizon(const WeeklySeries& y, const ExogenousPanel* x, WeekStamp t, int l);

    PrismConfig cfg_;
    VintageCache cache_;
};

/// Forecasts for every configured horizon at origin `t`. With `track` (forecast/realized
/// pairs per horizon, oldest first), records gain se and interval when at least
/// interval_L pairs exist.
std::vector<ForecastRecord> forecast_one(const WeeklySeries& y, const ExogenousPanel* x,
                                         WeekStamp t, const PrismConfig& cfg,
                                         const std::map<int, std::vector<TrackPoint>>* track = nullptr);

/// Weekly rolling-origin run over [from, to]. Origin t sees y through t-1 and x through t.
/// Realized values are filled wherever y covers the target week.
std::vector<ForecastRecord> backtest(const WeeklySeries& y, const ExogenousSelector& x,
                                     WeekStamp from, WeekStamp to, const PrismConfig& cfg);
std::vector<ForecastRecord> backtest(const WeeklySeries& y, const ExogenousPanel* x,
                                     WeekStamp from, WeekStamp to, const PrismConfig& cfg);

/// Adds se and interval to records (sorted by origin) from the realized track record
/// available at each origin.
void attach_intervals(std::vector<ForecastRecord>& records, const PrismConfig& cfg);

/// Fills `realized` from y for every record whose target week y covers with a finite value.
void fill_realized(std::vector<ForecastRecord>& records, const WeeklySeries& y);

/// origin_date,horizon,point,se,lo,hi,realized
void write_forecast_csv(std::ostream& out, std::span<const ForecastRecord> records);
/// Throws Error{ParseError} with the offending line number.
std::vector<ForecastRecord> read_forecast_csv(std::istream& in);

} // namespace prism

// prism: decompose, backtest, evaluate and sweep weekly claims forecasts.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prism/data_ingest.hpp"
#include "prism/decomposition.hpp"
#include "prism/error.hpp"
#include "prism/evaluation.hpp"
#include "prism/pipeline.hpp"
#include "prism/run_config.hpp"
#include "prism/svg_plot.hpp"
#include "prism/synthetic.hpp"
#include "prism/text_format.hpp"

namespace fs = std::filesystem;
using namespace prism;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

WeekStamp parse_week_arg(const std::string& text, const char* flag)
{
    const auto d = parse_iso_date(text);
    if (!d) {
        throw UsageError(std::string(flag) + ": '" + text + "' is not a YYYY-MM-DD date");
    }
    if (std::chrono::weekday(*d) != std::chrono::Saturday) {
        throw UsageError(std::string(flag) + ": " + text + " is not a Saturday (weeks end on Saturday)");
    }
    return WeekStamp(*d);
}

std::vector<int> parse_horizons(const std::string& text)
{
    std::vector<int> hs;
    for (const auto& item : split_list(text)) {
        const auto v = parse_number(item);
        if (!v || *v < 0 || *v != std::floor(*v)) {
            throw UsageError("--horizons: '" + item + "' is not a non-negative integer");
        }
        hs.push_back(static_cast<int>(*v));
    }
    if (hs.empty()) {
        throw UsageError("--horizons: empty list");
    }
    return hs;
}

/// Flags shared by commands that build a RunConfig; unset flags leave the config alone.
struct ConfigFlags {
    std::optional<std::string> config;
    std::optional<std::string> claims;
    std::optional<std::string> column;
    std::optional<std::string> trends;
    std::optional<std::string> from;
    std::optional<std::string> to;
    std::optional<std::string> horizons;
    std::optional<int> K;
    std::optional<int> N;
    std::optional<int> M;
    std::optional<double> w;
    std::optional<double> l1_ratio;
    std::optional<double> lambda;
    std::optional<int> folds;
    std::optional<std::string> rule;
    std::optional<std::string> method;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool robust = false;
    bool no_exogenous = false;

    void attach(CLI::App* app, bool with_trends)
    {
        app->add_option("--config", config, "JSON run config; flags override its fields");
        app->add_option("--claims", claims, "claims CSV (DATE,<value>)");
        app->add_option("--column", column, "claims value column name");
        if (with_trends) {
            app->add_option("--trends", trends, "Trends batch manifest; omit for the target-only model");
            app->add_flag("--no-exogenous", no_exogenous, "ignore any configured manifest");
        }
        app->add_option("--from", from, "first forecast origin (Saturday)");
        app->add_option("--to", to, "last forecast origin (Saturday)");
        app->add_option("--horizons", horizons, "comma-separated horizons, e.g. 0,1,2,3");
        app->add_option("--K", K, "lags per decomposed component");
        app->add_option("--N", N, "training rows");
        app->add_option("--M", M, "decomposition window");
        app->add_option("--w", w, "discount factor in (0, 1]");
        app->add_option("--l1-ratio", l1_ratio, "elastic-net mixing, 1 = lasso");
        app->add_option("--lambda", lambda, "fixed penalty; skips cross-validation");
        app->add_option("--folds", folds, "cross-validation folds");
        app->add_option("--rule", rule, "penalty selection rule: min or 1se");
        app->add_option("--method", method, "decomposition: stl or additive");
        app->add_flag("--robust", robust, "robust STL (bisquare reweighting)");
        app->add_option("--out-dir", out_dir, "output directory (else $PRISM_OUTPUT_DIR, else config)");
        app->add_option("--seed", seed, "recorded in the run config");
        app->add_option("--threads", threads, "worker threads for per-horizon fits");
    }

    RunConfig resolve() const
    {
        RunConfig rc = config ? load_run_config(*config) : RunConfig{};
        auto& p = rc.prism;
        if (claims) {
            rc.claims_path = *claims;
        }
        if (column) {
            rc.claims_column = *column;
        }
        if (trends) {
            rc.trends_manifest = *trends;
        }
        if (no_exogenous) {
            rc.trends_manifest.clear();
        }
        if (from) {
            rc.from = parse_week_arg(*from, "--from");
        }
        if (to) {
            rc.to = parse_week_arg(*to, "--to");
        }
        if (horizons) {
            p.horizons = parse_horizons(*horizons);
        }
        if (K) {
            p.K = *K;
        }
        if (N) {
            p.N = *N;
        }
        if (M) {
            p.M = *M;
        }
        if (w) {
            p.w = *w;
        }
        if (l1_ratio) {
            p.penalty.l1_ratio = *l1_ratio;
        }
        if (lambda) {
            p.penalty.fixed_lambda = *lambda;
        }
        if (folds) {
            p.penalty.n_folds = *folds;
        }
        if (rule) {
            p.penalty.rule = parse_selection_rule(*rule);
        }
        if (method) {
            p.decomposition_method = parse_decomposition_method(*method);
        }
        if (robust) {
            p.stl = StlConfig::robust(p.stl.period);
        }
        if (seed) {
            rc.seed = *seed;
        }
        if (threads) {
            p.threads = *threads;
        }
        if (out_dir) {
            rc.output_dir = *out_dir;
        } else if (const char* env = std::getenv("PRISM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
            rc.output_dir = env;
        }
        p.use_exogenous = !rc.trends_manifest.empty();
        p.validate();
        return rc;
    }
};

fs::path prepare_dir(const std::string& dir)
{
    const fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) {
        throw Error(ErrorCode::Io, "cannot create " + p.string() + ": " + ec.message());
    }
    return p;
}

std::ofstream open_output(const fs::path& p)
{
    std::ofstream out(p);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + p.string());
    }
    return out;
}

WeeklySeries load_claims(const RunConfig& rc)
{
    if (rc.claims_path.empty()) {
        throw UsageError("--claims is required");
    }
    ClaimsCsvOptions opt;
    opt.value_column = rc.claims_column;
    return parse_claims_csv(fs::path(rc.claims_path), opt);
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(const ConfigFlags& flags, const std::string& at, const std::optional<std::string>& out)
{
    const RunConfig rc = flags.resolve();
    const WeekStamp t = parse_week_arg(at, "--at");
    const WeeklySeries y = load_claims(rc);
    const auto d = vintage_decompose(y, t, rc.prism.M, rc.prism.stl, rc.prism.decomposition_method);
    const fs::path path = out ? fs::path(*out)
                              : prepare_dir(rc.output_dir) /
                                    ("decomposition_" + std::string(to_string(d.method)) + ".csv");
    auto f = open_output(path);
    write_decomposition_csv(f, d);
    std::cerr << "wrote " << path.string() << " (" << d.size() << " rows)\n";
    return 0;
}

// ---------------------------------------------------------------- backtest

struct BacktestOutput {
    std::vector<ForecastRecord> prism;
    std::vector<ForecastRecord> naive;
};

BacktestOutput run_backtest(const RunConfig& rc, const WeeklySeries& y)
{
    if (!rc.from || !rc.to) {
        throw UsageError("--from and --to are required");
    }
    BacktestOutput out;
    if (rc.trends_manifest.empty()) {
        out.prism = backtest(y, static_cast<const ExogenousPanel*>(nullptr), *rc.from, *rc.to, rc.prism);
    } else {
        const auto batches = load_manifest(fs::path(rc.trends_manifest));
        const auto schedule = build_schedule(batches, *rc.from, *rc.to, rc.prism);
        out.prism = backtest(y, make_selector(batches, schedule), *rc.from, *rc.to, rc.prism);
    }
    out.naive = naive_backtest(y, *rc.from, *rc.to, rc.prism.horizons);
    return out;
}

int cmd_backtest(const ConfigFlags& flags, const std::string& name)
{
    const RunConfig rc = flags.resolve();
    const WeeklySeries y = load_claims(rc);
    const auto res = run_backtest(rc, y);
    const fs::path dir = prepare_dir(rc.output_dir);
    {
        auto f = open_output(dir / (name + ".csv"));
        write_forecast_csv(f, res.prism);
    }
    {
        auto f = open_output(dir / "naive.csv");
        write_forecast_csv(f, res.naive);
    }
    save_run_config(rc, dir / "run_config.json");
    std::cerr << "wrote " << (dir / (name + ".csv")).string() << ", " << (dir / "naive.csv").string()
              << " (" << res.prism.size() << " records)\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

MethodTrack load_track(const std::string& spec, const std::optional<WeeklySeries>& y)
{
    std::string name;
    std::string path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
        name = spec.substr(0, eq);
        path = spec.substr(eq + 1);
    } else {
        name = fs::path(spec).stem().string();
    }
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path);
    }
    auto recs = read_forecast_csv(in);
    if (y) {
        fill_realized(recs, *y);
    }
    return MethodTrack(name, std::move(recs));
}

WeeklySeries forecast_series(const MethodTrack& t, int horizon)
{
    const auto recs = t.at_horizon(horizon);
    const WeekStamp start = recs.front().target();
    std::vector<double> v(static_cast<std::size_t>(recs.back().target() - start) + 1, std::nan(""));
    for (const auto& r : recs) {
        v[static_cast<std::size_t>(r.target() - start)] = r.point;
    }
    return WeeklySeries(start, std::move(v), MissingValues::AllowNaN);
}

WeeklySeries realized_series(const MethodTrack& t, int horizon)
{
    const auto recs = t.at_horizon(horizon);
    const WeekStamp start = recs.front().target();
    std::vector<double> v(static_cast<std::size_t>(recs.back().target() - start) + 1, std::nan(""));
    for (const auto& r : recs) {
        v[static_cast<std::size_t>(r.target() - start)] = *r.realized;
    }
    return WeeklySeries(start, std::move(v), MissingValues::AllowNaN);
}

int cmd_evaluate(const std::vector<std::string>& specs, const std::optional<std::string>& reference,
                 const std::optional<std::string>& claims, const std::optional<std::string>& eval_from,
                 const std::optional<std::string>& eval_to, const std::optional<std::string>& out_dir,
                 bool svg)
{
    std::optional<WeeklySeries> y;
    if (claims) {
        y = parse_claims_csv(fs::path(*claims));
    }
    EvalRange range;
    if (eval_from) {
        range.first_origin = parse_week_arg(*eval_from, "--eval-from");
    }
    if (eval_to) {
        range.last_target = parse_week_arg(*eval_to, "--eval-to");
    }
    std::vector<MethodTrack> tracks;
    for (const auto& s : specs) {
        tracks.push_back(restrict_range(load_track(s, y), range));
    }
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (tracks[i].method_name() == tracks[j].method_name()) {
                throw UsageError("two tracks are named '" + tracks[i].method_name() +
                                 "'; use name=path");
            }
        }
    }
    std::size_t ref = 0;
    const std::string ref_name = reference.value_or("naive");
    bool found = false;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (tracks[i].method_name() == ref_name) {
            ref = i;
            found = true;
        }
    }
    if (!found && reference) {
        throw UsageError("--reference '" + *reference + "' names no loaded track");
    }

    std::string dir_text = ".";
    if (out_dir) {
        dir_text = *out_dir;
    } else if (const char* env = std::getenv("PRISM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        dir_text = env;
    }
    const fs::path dir = prepare_dir(dir_text);
    const auto horizons = tracks[ref].horizons();

    const auto rows = relative_errors(tracks, tracks[ref]);
    {
        auto f = open_output(dir / "relative_errors.csv");
        write_relative_errors_csv(f, rows);
    }
    {
        auto f = open_output(dir / "dm_pvalues.csv");
        write_dm_matrix_csv(f, tracks, horizons);
    }
    {
        auto f = open_output(dir / "dm_details.csv");
        write_dm_details_csv(f, tracks, horizons);
    }
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& t = tracks[i];
        for (int l : horizons) {
            const std::string tag = t.method_name() + "_h" + std::to_string(l);
            if (i != ref) {
                const auto curve = cssed(tracks[ref], t, l);
                auto f = open_output(dir / ("cssed_" + t.method_name() + "_h" + std::to_string(l) + ".csv"));
                write_cssed_csv(f, curve);
                if (svg) {
                    auto g = open_output(dir / ("cssed_" + tag + ".svg"));
                    write_line_plot_svg(g, "CSSED " + tracks[ref].method_name() + " vs " + t.method_name() +
                                               ", horizon " + std::to_string(l),
                                        {PlotLine{t.method_name(), curve}});
                }
            }
            const auto e = forecast_errors(t, l);
            if (e.size() >= 3) {
                auto f = open_output(dir / ("qq_" + tag + ".csv"));
                write_qq_csv(f, qq_normal_data(e));
            }
            if (svg) {
                auto g = open_output(dir / ("forecast_" + tag + ".svg"));
                write_line_plot_svg(g, t.method_name() + " forecasts, horizon " + std::to_string(l),
                                    {PlotLine{"realized", realized_series(t, l)},
                                     PlotLine{t.method_name(), forecast_series(t, l)}});
            }
        }
    }
    std::cout << "method,horizon,rmse_rel,mae_rel,rmse_abs,mae_abs\n";
    for (const auto& r : rows) {
        std::cout << r.method << ',' << r.horizon << ',' << format_number(r.rmse_rel) << ','
                  << format_number(r.mae_rel) << ',' << format_number(r.rmse_abs) << ','
                  << format_number(r.mae_abs) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const ConfigFlags& flags, const std::string& param, const std::string& values_text)
{
    RunConfig base = flags.resolve();
    const WeeklySeries y = load_claims(base);
    const auto values = split_list(values_text);
    if (values.empty()) {
        throw UsageError("--values: empty list");
    }
    const fs::path dir = prepare_dir(base.output_dir);
    auto f = open_output(dir / ("sweep_" + param + ".csv"));
    f << param;
    for (int l : base.prism.horizons) {
        f << ",rmse_rel_h" << l;
    }
    for (int l : base.prism.horizons) {
        f << ",mae_rel_h" << l;
    }
    f << '\n';
    std::optional<MethodTrack> naive;
    for (const auto& text : values) {
        const auto v = parse_number(text);
        if (!v) {
            throw UsageError("--values: '" + text + "' is not a number");
        }
        RunConfig rc = base;
        if (param == "w") {
            rc.prism.w = *v;
        } else if (param == "N") {
            rc.prism.N = static_cast<int>(*v);
        } else if (param == "M") {
            rc.prism.M = static_cast<int>(*v);
        } else if (param == "l1_ratio") {
            rc.prism.penalty.l1_ratio = *v;
        } else {
            throw UsageError("--param must be one of w, N, M, l1_ratio");
        }
        rc.prism.validate();
        const auto res = run_backtest(rc, y);
        if (!naive) {
            naive = MethodTrack("naive", res.naive);
        }
        const MethodTrack track("prism", res.prism);
        const std::vector<MethodTrack> one{track};
        const auto rows = relative_errors(one, *naive);
        f << text;
        for (const auto& r : rows) {
            f << ',' << format_number(r.rmse_rel);
        }
        for (const auto& r : rows) {
            f << ',' << format_number(r.mae_rel);
        }
        f << '\n';
        std::cerr << param << "=" << text << " done\n";
    }
    save_run_config(base, dir / ("sweep_" + param + "_base_config.json"));
    return 0;
}

// ---------------------------------------------------------------- synth

int cmd_synth(std::uint64_t seed, std::size_t weeks, const std::string& start, int terms,
              const std::optional<std::string>& out_dir)
{
    SyntheticSpec spec;
    spec.seed = seed;
    spec.weeks = weeks;
    spec.start = parse_week_arg(start, "--start");
    spec.n_terms = terms;
    spec.level = 1000.0;
    spec.seasonal_amplitude = 200.0;
    spec.ar_sd = 20.0;
    spec.noise_sd = 10.0;
    const auto data = make_synthetic(spec);
    std::string dir_text = out_dir.value_or(".");
    if (!out_dir) {
        if (const char* env = std::getenv("PRISM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
            dir_text = env;
        }
    }
    const fs::path dir = prepare_dir(dir_text);
    {
        auto f = open_output(dir / "claims.csv");
        write_series_csv(f, data.y, "CLAIMS");
    }
    // Overlapping five-year batches starting every two years, each rescaled to 0..100
    // integers within itself, dated by week-start Sunday like a Trends export.
    auto manifest = open_output(dir / "manifest.txt");
    manifest << "# synthetic search-volume batches\n";
    const std::size_t span = 260;
    const std::size_t step = 104;
    const auto& x = data.x;
    for (std::size_t b0 = 0; b0 + span <= x.rows() || b0 == 0; b0 += step) {
        const std::size_t len = std::min(span, x.rows() - b0);
        const std::string id = "batch" + std::to_string(b0 / step + 1);
        const std::string file = "trends_" + id + ".csv";
        auto f = open_output(dir / file);
        f << "Category: All categories\n\nWeek";
        for (const auto& t : x.terms()) {
            f << ',' << t << ": (Synthetic)";
        }
        f << '\n';
        std::vector<double> hi(x.width(), 0.0);
        std::vector<double> lo(x.width(), 1e300);
        for (std::size_t i = b0; i < b0 + len; ++i) {
            for (std::size_t j = 0; j < x.width(); ++j) {
                hi[j] = std::max(hi[j], x.row(i)[j]);
                lo[j] = std::min(lo[j], x.row(i)[j]);
            }
        }
        for (std::size_t i = b0; i < b0 + len; ++i) {
            const Date sunday = x.start().date() + std::chrono::days(7 * static_cast<long>(i) - 6);
            f << format_iso_date(sunday);
            for (std::size_t j = 0; j < x.width(); ++j) {
                const double s = hi[j] > lo[j] ? (x.row(i)[j] - lo[j]) / (hi[j] - lo[j]) : 0.0;
                f << ',' << static_cast<int>(std::lround(100.0 * s));
            }
            f << '\n';
        }
        manifest << "batch=" << id << "\nfile=" << file << "\n";
        if (len < span) {
            break;
        }
    }
    std::cerr << "wrote " << (dir / "claims.csv").string() << " and " << (dir / "manifest.txt").string()
              << '\n';
    return 0;
}

int exit_code_for(const Error& e)
{
    switch (e.category()) {
    case ErrorCategory::Usage: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
    }
    return kExitNumerical;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-stage seasonal nowcasting of weekly claims with search-volume regressors"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::Throw);

    ConfigFlags dflags;
    std::string at;
    std::optional<std::string> dout;
    auto* dec = app.add_subcommand("decompose", "write the decomposition of the M weeks before --at");
    dflags.attach(dec, false);
    dec->add_option("--at", at, "vintage week (Saturday)")->required();
    dec->add_option("--out", dout, "output CSV path");

    ConfigFlags bflags;
    std::string name = "prism";
    auto* bt = app.add_subcommand("backtest", "rolling-origin forecasts plus the naive baseline");
    bflags.attach(bt, true);
    bt->add_option("--name", name, "output file stem for the model track");

    std::vector<std::string> specs;
    std::optional<std::string> reference;
    std::optional<std::string> eclaims;
    std::optional<std::string> efrom;
    std::optional<std::string> eto;
    std::optional<std::string> eout;
    bool svg = false;
    auto* ev = app.add_subcommand("evaluate", "error tables, Diebold-Mariano, CSSED and QQ data");
    ev->add_option("tracks", specs, "forecast CSVs, optionally as name=path")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    ev->add_option("--reference", reference, "reference track name (default naive)");
    ev->add_option("--claims", eclaims, "claims CSV used to fill realized values");
    ev->add_option("--eval-from", efrom, "first origin counted");
    ev->add_option("--eval-to", eto, "last target week counted");
    ev->add_option("--out-dir", eout, "output directory (else $PRISM_OUTPUT_DIR, else .)");
    ev->add_flag("--svg", svg, "also write SVG line plots");

    ConfigFlags sflags;
    std::string param;
    std::string values;
    auto* sw = app.add_subcommand("sweep", "one backtest per value of a single parameter");
    sflags.attach(sw, true);
    sw->add_option("--param", param, "w, N, M or l1_ratio")->required();
    sw->add_option("--values", values, "comma-separated values")->required();

    std::uint64_t seed = 1;
    std::size_t weeks = 1200;
    std::string start = "1990-01-06";
    int terms = 5;
    std::optional<std::string> synth_out;
    auto* sy = app.add_subcommand("synth", "write a seeded synthetic claims CSV and Trends batches");
    sy->add_option("--seed", seed, "random seed");
    sy->add_option("--weeks", weeks, "series length");
    sy->add_option("--start", start, "first week (Saturday)");
    sy->add_option("--terms", terms, "search terms");
    sy->add_option("--out-dir", synth_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*dec) {
            return cmd_decompose(dflags, at, dout);
        }
        if (*bt) {
            return cmd_backtest(bflags, name);
        }
        if (*ev) {
            return cmd_evaluate(specs, reference, eclaims, efrom, eto, eout, svg);
        }
        if (*sw) {
            return cmd_sweep(sflags, param, values);
        }
        if (*sy) {
            return cmd_synth(seed, weeks, start, terms, synth_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitUsage;
}

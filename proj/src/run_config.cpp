#include "prism/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prism/error.hpp"

namespace prism {

namespace {

using nlohmann::json;

json week_or_null(const std::optional<WeekStamp>& w)
{
    return w ? json(w->iso()) : json(nullptr);
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where)
{
    for (const auto& [k, v] : j.items()) {
        if (!known.contains(k)) {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "' in " + where);
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void read_opt_int(const json& j, const char* key, std::optional<int>& out)
{
    if (j.contains(key)) {
        out = j.at(key).is_null() ? std::nullopt : std::optional<int>(j.at(key).get<int>());
    }
}

void read_week(const json& j, const char* key, std::optional<WeekStamp>& out)
{
    if (j.contains(key)) {
        out = j.at(key).is_null() ? std::nullopt
                                  : std::optional<WeekStamp>(WeekStamp::parse(j.at(key).get<std::string>()));
    }
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

std::string to_json(const RunConfig& cfg)
{
    const auto& p = cfg.prism;
    json stl = {
        {"period", p.stl.period},
        {"seasonal_window", opt_int(p.stl.seasonal_window)},
        {"trend_window", opt_int(p.stl.trend_window)},
        {"low_pass_window", opt_int(p.stl.low_pass_window)},
        {"inner_loops", p.stl.inner_loops},
        {"outer_loops", p.stl.outer_loops},
        {"seasonal_degree", p.stl.seasonal_degree},
        {"trend_degree", p.stl.trend_degree},
        {"low_pass_degree", p.stl.low_pass_degree},
    };
    json penalty = {
        {"path_points", p.penalty.path_points},
        {"path_ratio", p.penalty.path_ratio},
        {"l1_ratio", p.penalty.l1_ratio},
        {"n_folds", p.penalty.n_folds},
        {"rule", std::string(to_string(p.penalty.rule))},
        {"fold_scheme", std::string(to_string(p.penalty.fold_scheme))},
        {"separate_lambdas", p.penalty.separate_lambdas},
        {"fixed_lambda", p.penalty.fixed_lambda ? json(*p.penalty.fixed_lambda) : json(nullptr)},
        {"tolerance", p.penalty.solver.tolerance},
        {"max_sweeps", p.penalty.solver.max_sweeps},
    };
    json prism = {
        {"K", p.K},
        {"N", p.N},
        {"M", p.M},
        {"w", p.w},
        {"horizons", p.horizons},
        {"use_exogenous", p.use_exogenous},
        {"decomposition_method", std::string(to_string(p.decomposition_method))},
        {"stl", stl},
        {"penalty", penalty},
        {"interval_L", p.interval_L},
        {"interval_alpha", p.interval_alpha},
        {"threads", p.threads},
    };
    json j = {
        {"prism", prism},
        {"claims_path", cfg.claims_path},
        {"claims_column", cfg.claims_column},
        {"trends_manifest", cfg.trends_manifest},
        {"from", week_or_null(cfg.from)},
        {"to", week_or_null(cfg.to)},
        {"eval_first_origin", week_or_null(cfg.eval.first_origin)},
        {"eval_last_target", week_or_null(cfg.eval.last_target)},
        {"output_dir", cfg.output_dir},
        {"seed", cfg.seed},
    };
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text)
{
    RunConfig cfg;
    try {
        const json j = json::parse(text);
        reject_unknown(j, {"prism", "claims_path", "claims_column", "trends_manifest", "from", "to",
                           "eval_first_origin", "eval_last_target", "output_dir", "seed"},
                       "run config");
        read(j, "claims_path", cfg.claims_path);
        read(j, "claims_column", cfg.claims_column);
        read(j, "trends_manifest", cfg.trends_manifest);
        read_week(j, "from", cfg.from);
        read_week(j, "to", cfg.to);
        read_week(j, "eval_first_origin", cfg.eval.first_origin);
        read_week(j, "eval_last_target", cfg.eval.last_target);
        read(j, "output_dir", cfg.output_dir);
        read(j, "seed", cfg.seed);
        if (j.contains("prism")) {
            const json& pj = j.at("prism");
            auto& p = cfg.prism;
            reject_unknown(pj, {"K", "N", "M", "w", "horizons", "use_exogenous", "decomposition_method",
                                "stl", "penalty", "interval_L", "interval_alpha", "threads"},
                           "prism");
            read(pj, "K", p.K);
            read(pj, "N", p.N);
            read(pj, "M", p.M);
            read(pj, "w", p.w);
            read(pj, "horizons", p.horizons);
            read(pj, "use_exogenous", p.use_exogenous);
            if (pj.contains("decomposition_method")) {
                p.decomposition_method =
                    parse_decomposition_method(pj.at("decomposition_method").get<std::string>());
            }
            read(pj, "interval_L", p.interval_L);
            read(pj, "interval_alpha", p.interval_alpha);
            read(pj, "threads", p.threads);
            if (pj.contains("stl")) {
                const json& sj = pj.at("stl");
                reject_unknown(sj, {"period", "seasonal_window", "trend_window", "low_pass_window",
                                    "inner_loops", "outer_loops", "seasonal_degree", "trend_degree",
                                    "low_pass_degree"},
                               "stl");
                read(sj, "period", p.stl.period);
                read_opt_int(sj, "seasonal_window", p.stl.seasonal_window);
                read_opt_int(sj, "trend_window", p.stl.trend_window);
                read_opt_int(sj, "low_pass_window", p.stl.low_pass_window);
                read(sj, "inner_loops", p.stl.inner_loops);
                read(sj, "outer_loops", p.stl.outer_loops);
                read(sj, "seasonal_degree", p.stl.seasonal_degree);
                read(sj, "trend_degree", p.stl.trend_degree);
                read(sj, "low_pass_degree", p.stl.low_pass_degree);
            }
            if (pj.contains("penalty")) {
                const json& qj = pj.at("penalty");
                reject_unknown(qj, {"path_points", "path_ratio", "l1_ratio", "n_folds", "rule",
                                    "fold_scheme", "separate_lambdas", "fixed_lambda", "tolerance",
                                    "max_sweeps"},
                               "penalty");
                auto& q = p.penalty;
                read(qj, "path_points", q.path_points);
                read(qj, "path_ratio", q.path_ratio);
                read(qj, "l1_ratio", q.l1_ratio);
                read(qj, "n_folds", q.n_folds);
                if (qj.contains("rule")) {
                    q.rule = parse_selection_rule(qj.at("rule").get<std::string>());
                }
                if (qj.contains("fold_scheme")) {
                    q.fold_scheme = parse_fold_scheme(qj.at("fold_scheme").get<std::string>());
                }
                read(qj, "separate_lambdas", q.separate_lambdas);
                if (qj.contains("fixed_lambda")) {
                    q.fixed_lambda = qj.at("fixed_lambda").is_null()
                                         ? std::nullopt
                                         : std::optional<double>(qj.at("fixed_lambda").get<double>());
                }
                read(qj, "tolerance", q.solver.tolerance);
                read(qj, "max_sweeps", q.solver.max_sweeps);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("run config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::InvalidSeries) {
            throw Error(ErrorCode::InvalidConfig, e.what());
        }
        throw;
    }
    cfg.prism.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    out << to_json(cfg);
}

} // namespace prism

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prism/data_ingest.hpp"
#include "prism/decomposition.hpp"
#include "prism/error.hpp"
#include "prism/evaluation.hpp"
#include "prism/penalized_regression.hpp"
#include "prism/pipeline.hpp"
#include "prism/run_config.hpp"
#include "prism/synthetic.hpp"

namespace py = pybind11;
using namespace prism;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const double> v)
{
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const Array& a)
{
    return std::vector<double>(a.data(), a.data() + a.size());
}

PrismConfig config_from(const std::optional<std::string>& json)
{
    return json ? run_config_from_json("{\"prism\": " + *json + "}").prism : PrismConfig{};
}

py::dict record_dict(const ForecastRecord& r)
{
    py::dict d;
    d["origin"] = r.origin.iso();
    d["horizon"] = r.horizon;
    d["target"] = r.target().iso();
    d["point"] = r.point;
    d["se"] = r.se ? py::cast(*r.se) : py::none();
    d["lo"] = r.interval ? py::cast(r.interval->first) : py::none();
    d["hi"] = r.interval ? py::cast(r.interval->second) : py::none();
    d["realized"] = r.realized ? py::cast(*r.realized) : py::none();
    return d;
}

std::vector<ForecastRecord> records_from(const py::list& items)
{
    std::vector<ForecastRecord> out;
    for (const auto& item : items) {
        const auto d = item.cast<py::dict>();
        ForecastRecord r;
        r.origin = WeekStamp::parse(d["origin"].cast<std::string>());
        r.horizon = d["horizon"].cast<int>();
        r.point = d["point"].cast<double>();
        if (d.contains("realized") && !d["realized"].is_none()) {
            r.realized = d["realized"].cast<double>();
        }
        out.push_back(r);
    }
    return out;
}

py::list records_list(const std::vector<ForecastRecord>& records)
{
    py::list out;
    for (const auto& r : records) {
        out.append(record_dict(r));
    }
    return out;
}

py::dict decomposition_dict(const DecompositionResult& d)
{
    py::dict out;
    out["start"] = d.start().iso();
    out["method"] = std::string(to_string(d.method));
    out["value"] = to_array(d.input.values());
    out["seasonal"] = to_array(d.seasonal.values());
    out["trend"] = to_array(d.trend.values());
    out["remainder"] = to_array(d.remainder.values());
    return out;
}

StlConfig stl_config(bool robust) { return robust ? StlConfig::robust() : StlConfig{}; }

DesignMatrix design(const Array& x, const Array& y, const std::optional<Array>& weights,
                    const std::optional<std::vector<std::string>>& groups)
{
    if (x.ndim() != 2) {
        throw Error(ErrorCode::InvalidDesign, "x must be two-dimensional");
    }
    const auto rows = static_cast<std::size_t>(x.shape(0));
    const auto cols = static_cast<std::size_t>(x.shape(1));
    std::vector<double> w = weights ? to_vector(*weights) : std::vector<double>(rows, 1.0);
    std::vector<PenaltyGroup> g(cols, PenaltyGroup::TimeSeriesBlock);
    if (groups) {
        if (groups->size() != cols) {
            throw Error(ErrorCode::InvalidDesign, "one group per column");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& s = (*groups)[j];
            if (s == "ts") {
                g[j] = PenaltyGroup::TimeSeriesBlock;
            } else if (s == "exo") {
                g[j] = PenaltyGroup::ExogenousBlock;
            } else if (s == "none") {
                g[j] = PenaltyGroup::Unpenalized;
            } else {
                throw Error(ErrorCode::InvalidDesign, "group must be ts, exo or none: " + s);
            }
        }
    }
    return DesignMatrix(rows, cols, to_vector(x), to_vector(y), std::move(w), std::move(g));
}

} // namespace

PYBIND11_MODULE(_prism, m)
{
    m.doc() = "Seasonal-decomposition nowcasting of weekly claims";

    static py::exception<Error> prism_error(m, "PrismError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error& e) {
            py::object exc = prism_error;
            PyErr_SetObject(exc.ptr(), py::make_tuple(e.what(), std::string(to_string(e.code()))).ptr());
        }
    });

    py::class_<WeeklySeries>(m, "WeeklySeries")
        .def(py::init([](const std::string& start, const Array& values, bool allow_nan) {
                 return WeeklySeries(WeekStamp::parse(start), to_vector(values),
                                     allow_nan ? MissingValues::AllowNaN : MissingValues::Reject);
             }),
             py::arg("start"), py::arg("values"), py::arg("allow_nan") = false)
        .def_property_readonly("start", [](const WeeklySeries& s) { return s.start().iso(); })
        .def_property_readonly("end", [](const WeeklySeries& s) { return s.end().iso(); })
        .def_property_readonly("values", [](const WeeklySeries& s) { return to_array(s.values()); })
        .def("__len__", &WeeklySeries::size)
        .def("__repr__", [](const WeeklySeries& s) {
            return "WeeklySeries(" + s.start().iso() + " .. " + s.end().iso() + ", " +
                   std::to_string(s.size()) + " weeks)";
        });

    m.def("default_config", [] { return to_json(RunConfig{}); },
          "Default run configuration as a JSON string; its \"prism\" object configures forecasts.");

    m.def("read_claims", [](const std::string& path, const std::string& column) {
              ClaimsCsvOptions opt;
              opt.value_column = column;
              return parse_claims_csv(std::filesystem::path(path), opt);
          },
          py::arg("path"), py::arg("column") = "");

    m.def("decompose", [](const WeeklySeries& y, const std::string& method, bool robust) {
              return decomposition_dict(decompose(y, parse_decomposition_method(method), stl_config(robust)));
          },
          py::arg("series"), py::arg("method") = "stl", py::arg("robust") = false);

    m.def("vintage", [](const WeeklySeries& y, const std::string& at, int window, const std::string& method,
                        bool robust) {
              return decomposition_dict(vintage_decompose(y, WeekStamp::parse(at), window, stl_config(robust),
                                                          parse_decomposition_method(method)));
          },
          py::arg("series"), py::arg("at"), py::arg("window") = 700, py::arg("method") = "stl",
          py::arg("robust") = false, "Decomposition of the `window` weeks before `at`.");

    m.def("fit_penalized",
          [](const Array& x, const Array& y, double lam, double l1_ratio, const std::optional<Array>& weights,
             const std::optional<std::vector<std::string>>& groups) {
              const auto fit = fit_penalized(design(x, y, weights, groups), PenaltySpec::uniform(lam, l1_ratio));
              py::dict out;
              out["intercept"] = fit.intercept;
              out["coefficients"] = to_array(fit.coefficients);
              out["n_nonzero"] = fit.n_nonzero;
              out["objective"] = fit.objective_value;
              out["kkt_violation"] = fit.kkt_violation;
              out["converged"] = fit.converged;
              return out;
          },
          py::arg("x"), py::arg("y"), py::arg("lam"), py::arg("l1_ratio") = 1.0, py::arg("weights") = py::none(),
          py::arg("groups") = py::none(),
          "Weighted elastic net on standardised features; groups are \"ts\", \"exo\" or \"none\".");

    m.def("lambda_max",
          [](const Array& x, const Array& y, double l1_ratio, const std::optional<Array>& weights) {
              return lambda_max(design(x, y, weights, std::nullopt), l1_ratio);
          },
          py::arg("x"), py::arg("y"), py::arg("l1_ratio") = 1.0, py::arg("weights") = py::none());

    m.def("forecast",
          [](const WeeklySeries& y, const std::string& at, const std::optional<std::string>& config,
             const std::optional<Array>& x, const std::optional<std::string>& x_start) {
              auto cfg = config_from(config);
              std::optional<ExogenousPanel> panel;
              if (x && cfg.use_exogenous) {
                  const auto cols = x->ndim() == 2 ? static_cast<std::size_t>(x->shape(1)) : 1u;
                  std::vector<std::string> terms;
                  for (std::size_t j = 0; j < cols; ++j) {
                      terms.push_back("x" + std::to_string(j + 1));
                  }
                  panel.emplace(WeekStamp::parse(x_start.value_or(y.start().iso())), std::move(terms),
                                to_vector(*x), "python");
              }
              return records_list(forecast_one(y, panel ? &*panel : nullptr, WeekStamp::parse(at), cfg));
          },
          py::arg("series"), py::arg("at"), py::arg("config") = py::none(), py::arg("x") = py::none(),
          py::arg("x_start") = py::none(),
          "Forecasts at one origin. `config` is the JSON of the \"prism\" object; `x` is a weeks-by-terms "
          "array starting at `x_start` (default: the series start).");

    m.def("backtest",
          [](const WeeklySeries& y, const std::string& from, const std::string& to,
             const std::optional<std::string>& config, const std::optional<std::string>& manifest) {
              auto cfg = config_from(config);
              const auto f = WeekStamp::parse(from);
              const auto t = WeekStamp::parse(to);
              std::vector<ForecastRecord> records;
              if (manifest && cfg.use_exogenous) {
                  const auto batches = load_manifest(*manifest);
                  const auto schedule = build_schedule(batches, f, t, cfg);
                  py::gil_scoped_release release;
                  records = backtest(y, make_selector(batches, schedule), f, t, cfg);
              } else {
                  cfg.use_exogenous = false;
                  py::gil_scoped_release release;
                  records = backtest(y, static_cast<const ExogenousPanel*>(nullptr), f, t, cfg);
              }
              return records_list(records);
          },
          py::arg("series"), py::arg("start"), py::arg("end"), py::arg("config") = py::none(),
          py::arg("manifest") = py::none(), "Weekly rolling-origin forecasts over origins [start, end].");

    m.def("naive_backtest",
          [](const WeeklySeries& y, const std::string& from, const std::string& to, const std::vector<int>& h) {
              return records_list(naive_backtest(y, WeekStamp::parse(from), WeekStamp::parse(to), h));
          },
          py::arg("series"), py::arg("start"), py::arg("end"), py::arg("horizons") = std::vector<int>{0, 1, 2, 3});

    m.def("relative_errors",
          [](const py::dict& tracks, const std::string& reference) {
              std::vector<MethodTrack> all;
              std::optional<MethodTrack> ref;
              for (const auto& [name, recs] : tracks) {
                  MethodTrack track(name.cast<std::string>(), records_from(recs.cast<py::list>()));
                  if (track.method_name() == reference) {
                      ref = track;
                  }
                  all.push_back(std::move(track));
              }
              if (!ref) {
                  throw Error(ErrorCode::GridMismatch, "no track named " + reference);
              }
              py::list out;
              for (const auto& row : relative_errors(all, *ref)) {
                  py::dict d;
                  d["method"] = row.method;
                  d["horizon"] = row.horizon;
                  d["rmse"] = row.rmse_abs;
                  d["mae"] = row.mae_abs;
                  d["rmse_rel"] = row.rmse_rel;
                  d["mae_rel"] = row.mae_rel;
                  out.append(d);
              }
              return out;
          },
          py::arg("tracks"), py::arg("reference") = "naive",
          "RMSE and MAE per method and horizon, absolute and relative to the reference track.");

    m.def("diebold_mariano",
          [](const Array& a, const Array& b, int horizon) {
              const auto r = diebold_mariano(std::span<const double>(a.data(), a.size()),
                                             std::span<const double>(b.data(), b.size()), horizon);
              py::dict d;
              d["n"] = r.n;
              d["mean_differential"] = r.mean_differential;
              d["statistic"] = r.statistic;
              d["p_value"] = r.p_value;
              d["statistic_normal"] = r.statistic_normal;
              d["p_value_normal"] = r.p_value_normal;
              return d;
          },
          py::arg("errors_a"), py::arg("errors_b"), py::arg("horizon") = 0,
          "Squared-error Diebold-Mariano test on two forecast-error sequences.");

    m.def("synthetic",
          [](std::uint64_t seed, std::size_t weeks, const std::string& start, int n_terms) {
              SyntheticSpec spec;
              spec.seed = seed;
              spec.weeks = weeks;
              spec.start = WeekStamp::parse(start);
              spec.n_terms = n_terms;
              auto data = make_synthetic(spec);
              Array x({static_cast<py::ssize_t>(data.x.rows()), static_cast<py::ssize_t>(data.x.width())});
              std::copy(data.x.data().begin(), data.x.data().end(), x.mutable_data());
              return py::make_tuple(std::move(data.y), x);
          },
          py::arg("seed") = 1, py::arg("weeks") = 1200, py::arg("start") = "1990-01-06", py::arg("n_terms") = 5,
          "Seeded synthetic target series and a weeks-by-terms regressor array on the same grid.");
}

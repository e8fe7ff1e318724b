#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace prism {

enum class PenaltyGroup { TimeSeriesBlock, ExogenousBlock, Unpenalized };

/// Row-major regression design with per-row observation weights. The intercept is implicit
/// and never penalised.
class DesignMatrix {
public:
    /// Throws Error{InvalidDesign} on shape mismatch, non-finite entries or weights <= 0.
    DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major,
                 std::vector<double> responses, std::vector<double> weights,
                 std::vector<PenaltyGroup> groups);

    std::size_t rows() const noexcept { return responses_.size(); }
    std::size_t cols() const noexcept { return groups_.size(); }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return std::span<const double>(x_).subspan(i * cols(), cols());
    }
    double at(std::size_t i, std::size_t j) const noexcept { return x_[i * cols() + j]; }
    std::span<const double> data() const noexcept { return x_; }
    std::span<const double> responses() const noexcept { return responses_; }
    std::span<const double> weights() const noexcept { return weights_; }
    const std::vector<PenaltyGroup>& groups() const noexcept { return groups_; }

    DesignMatrix subset(std::span<const std::size_t> rows) const;

private:
    std::vector<double> x_;
    std::vector<double> responses_;
    std::vector<double> weights_;
    std::vector<PenaltyGroup> groups_;
};

/// Penalty weights. The loss is (1 / 2W) sum_i w_i r_i^2 with W = sum_i w_i, and each
/// penalised standardised coefficient c adds lambda * (l1_ratio * |c| + (1 - l1_ratio) * c^2).
struct PenaltySpec {
    double lambda_ts = 0.0;
    double lambda_exo = 0.0;
    /// 1 is the lasso, 0 is ridge.
    double l1_ratio = 1.0;

    static PenaltySpec uniform(double lambda, double l1_ratio = 1.0)
    {
        return PenaltySpec{lambda, lambda, l1_ratio};
    }
    double for_group(PenaltyGroup g) const noexcept
    {
        switch (g) {
        case PenaltyGroup::TimeSeriesBlock: return lambda_ts;
        case PenaltyGroup::ExogenousBlock: return lambda_exo;
        case PenaltyGroup::Unpenalized: return 0.0;
        }
        return 0.0;
    }
};

struct SolverOptions {
    /// Convergence when the largest standardised-coefficient step falls below
    /// tolerance times the weighted standard deviation of the response.
    double tolerance = 1e-7;
    int max_sweeps = 10000;
    /// After coordinate descent, re-solve the active set exactly and keep the result if it
    /// satisfies the optimality conditions.
    bool polish = true;
    /// Record the objective after each sweep in FitResult::objective_trace.
    bool trace_objective = false;
};

struct FitResult {
    double intercept = 0.0;
    /// Coefficients on the original feature scale.
    std::vector<double> coefficients;
    PenaltySpec lambda_used;
    std::size_t n_nonzero = 0;
    double objective_value = 0.0;

    bool converged = true;
    int sweeps = 0;
    /// Features with (numerically) zero weighted variance; their coefficients are forced to 0.
    std::vector<std::size_t> dropped_features;
    /// Largest violation of the optimality conditions in standardised coordinates.
    double kkt_violation = 0.0;
    std::vector<double> standardized_coefficients;
    std::vector<double> objective_trace;

    double predict(std::span<const double> features) const;
};

FitResult fit_penalized(const DesignMatrix& x, const PenaltySpec& penalty,
                        const SolverOptions& options = {});

/// Smallest uniform penalty at which every penalised coefficient is zero.
double lambda_max(const DesignMatrix& x, double l1_ratio = 1.0);

/// `n_points` log-spaced uniform penalties from lambda_max down to ratio * lambda_max.
std::vector<PenaltySpec> lambda_path(const DesignMatrix& x, int n_points = 100, double ratio = 1e-3,
                                     double l1_ratio = 1.0);

enum class SelectionRule { Min, OneSE };
enum class FoldScheme { Interleaved, Contiguous };

std::string_view to_string(SelectionRule r) noexcept;
SelectionRule parse_selection_rule(std::string_view s);
std::string_view to_string(FoldScheme s) noexcept;
/// "interleaved" or "contiguous". Throws Error{InvalidConfig}.
FoldScheme parse_fold_scheme(std::string_view s);

struct CvOptions {
    int n_folds = 10;
    SelectionRule rule = SelectionRule::Min;
    FoldScheme scheme = FoldScheme::Interleaved;
    SolverOptions solver;
};

struct CvResult {
    std::vector<PenaltySpec> path;
    std::vector<double> mean_error;
    std::vector<double> standard_error;
    std::size_t min_index = 0;
    std::size_t selected_index = 0;
    PenaltySpec selected;
};

/// Fold of each row under the given scheme.
std::vector<int> assign_folds(std::size_t rows, int n_folds, FoldScheme scheme);

/// K-fold cross-validation over `path` (ordered by decreasing penalty). Held-out error is
/// the observation-weighted mean squared prediction error. Throws Error{FoldTooSmall}.
CvResult cross_validate(const DesignMatrix& x, const std::vector<PenaltySpec>& path,
                        const CvOptions& options = {});

PenaltySpec cross_validate_lambda(const DesignMatrix& x, const std::vector<PenaltySpec>& path,
                                  int n_folds = 10, SelectionRule rule = SelectionRule::Min);

/// Cross-validation over the product of separate time-series and exogenous penalty paths.
/// `path` entries are flattened as ts_index * exo_path.size() + exo_index.
CvResult cross_validate_grid(const DesignMatrix& x, std::span<const double> ts_path,
                             std::span<const double> exo_path, double l1_ratio,
                             const CvOptions& options = {});

} // namespace prism

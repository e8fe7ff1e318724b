#include "prism/penalized_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "prism/error.hpp"

namespace prism {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double z, double t)
{
    if (z > t) {
        return z - t;
    }
    if (z < -t) {
        return z + t;
    }
    return 0.0;
}

/// The design after weighted centring and scaling, reduced to its Gram form:
/// loss(c) = 0.5 * (syy - 2 b'c + c'Gc).
class StandardizedProblem {
public:
    explicit StandardizedProblem(const DesignMatrix& x)
        : d_(x.cols()), mean_(d_, 0.0), scale_(d_, 0.0)
    {
        const std::size_t n = x.rows();
        const auto w = x.weights();
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = w[i] / total;
        }
        const auto y = x.responses();
        ybar_ = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ybar_ += v[i] * y[i];
        }
        Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
        double ysq = 0.0;
        double yabs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            yc[static_cast<Eigen::Index>(i)] = y[i] - ybar_;
            ysq += v[i] * (y[i] - ybar_) * (y[i] - ybar_);
            yabs = std::max(yabs, std::abs(y[i]));
        }
        syy_ = ysq;
        sy_ = std::sqrt(ysq);
        constant_response_ = !(sy_ > 1e-10 * std::max(yabs, std::numeric_limits<double>::min()));

        for (std::size_t j = 0; j < d_; ++j) {
            double m = 0.0;
            double sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                m += v[i] * x.at(i, j);
                sq += v[i] * x.at(i, j) * x.at(i, j);
            }
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = x.at(i, j) - m;
                var += v[i] * c * c;
            }
            mean_[j] = m;
            const double sd = std::sqrt(var);
            if (sd > 1e-10 * std::sqrt(sq) && sd > 0.0) {
                scale_[j] = sd;
                kept_.push_back(j);
                group_.push_back(x.groups()[j]);
            } else {
                dropped_.push_back(j);
            }
        }

        const auto k = static_cast<Eigen::Index>(kept_.size());
        Eigen::MatrixXd xs(static_cast<Eigen::Index>(n), k);
        for (Eigen::Index c = 0; c < k; ++c) {
            const std::size_t j = kept_[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < n; ++i) {
                xs(static_cast<Eigen::Index>(i), c) = (x.at(i, j) - mean_[j]) / scale_[j];
            }
        }
        Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n))
                                 .cwiseSqrt();
        const Eigen::MatrixXd xw = sv.asDiagonal() * xs;
        gram_ = xw.transpose() * xw;
        rhs_ = xs.transpose() * (Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n))
                                     .cwiseProduct(yc));
    }

    std::size_t kept() const noexcept { return kept_.size(); }
    bool constant_response() const noexcept { return constant_response_; }
    double response_scale() const noexcept { return sy_ > 0.0 && !constant_response_ ? sy_ : 1.0; }

    std::vector<double> penalties(const PenaltySpec& p) const
    {
        std::vector<double> lam(kept_.size());
        for (std::size_t c = 0; c < kept_.size(); ++c) {
            lam[c] = p.for_group(group_[c]);
        }
        return lam;
    }

    /// Gradient of the smooth loss, negated: b - G c.
    Eigen::VectorXd residual_correlation(const std::vector<double>& c) const
    {
        const Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
        return rhs_ - gram_ * cv;
    }

    double objective(const std::vector<double>& c, const std::vector<double>& lam, double a) const
    {
        const Eigen::Map<const Eigen::VectorXd> cv(c.data(), static_cast<Eigen::Index>(c.size()));
        double obj = 0.5 * (syy_ - 2.0 * rhs_.dot(cv) + cv.dot(gram_ * cv));
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (std::isfinite(lam[j])) {
                obj += lam[j] * (a * std::abs(c[j]) + (1.0 - a) * c[j] * c[j]);
            }
        }
        return obj;
    }

    double kkt(const std::vector<double>& c, const std::vector<double>& lam, double a) const
    {
        const Eigen::VectorXd q = residual_correlation(c);
        double worst = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double g = -q[static_cast<Eigen::Index>(j)];
            if (!std::isfinite(lam[j])) {
                continue;
            }
            double viol = 0.0;
            if (c[j] != 0.0) {
                viol = std::abs(g + lam[j] * a * (c[j] > 0 ? 1.0 : -1.0) +
                                2.0 * lam[j] * (1.0 - a) * c[j]);
            } else {
                viol = std::max(0.0, std::abs(g) - lam[j] * a);
            }
            worst = std::max(worst, viol);
        }
        return worst;
    }

    /// Coordinate descent from the warm start in `c`. Returns sweeps used. With `shortcut`,
    /// the active set is periodically re-solved exactly and descent stops as soon as that
    /// point meets `kkt_tol`.
    int descend(std::vector<double>& c, const std::vector<double>& lam, double a,
                const SolverOptions& opt, int budget, bool& converged,
                std::vector<double>* trace, double kkt_tol = -1.0) const
    {
        const std::size_t k = c.size();
        Eigen::VectorXd q = residual_correlation(c);
        const double tol = opt.tolerance * response_scale();
        int sweeps = 0;
        std::vector<std::size_t> active;
        converged = false;

        auto sweep = [&](bool full) {
            double max_step = 0.0;
            auto visit = [&](std::size_t j) {
                const auto jj = static_cast<Eigen::Index>(j);
                const double old = c[j];
                double next = 0.0;
                if (std::isfinite(lam[j])) {
                    const double rho = q[jj] + old * gram_(jj, jj);
                    next = soft_threshold(rho, lam[j] * a) /
                           (gram_(jj, jj) + 2.0 * lam[j] * (1.0 - a));
                }
                if (next != old) {
                    const double delta = next - old;
                    q.noalias() -= gram_.col(jj) * delta;
                    c[j] = next;
                    max_step = std::max(max_step, std::abs(delta));
                }
            };
            if (full) {
                for (std::size_t j = 0; j < k; ++j) {
                    visit(j);
                }
            } else {
                for (std::size_t j : active) {
                    visit(j);
                }
            }
            ++sweeps;
            if (trace != nullptr) {
                trace->push_back(objective(c, lam, a));
            }
            return max_step;
        };

        // Tries an exact active-set finish; true when it certifies optimality.
        auto shortcut = [&]() {
            if (kkt_tol < 0.0 || !opt.polish) {
                return false;
            }
            std::vector<double> trial = c;
            if (!feature_sign(trial, lam, a, kkt_tol)) {
                return false;
            }
            c = std::move(trial);
            return true;
        };

        constexpr int polish_every = 16;
        while (sweeps < budget) {
            const double full_step = sweep(true);
            if (full_step < tol) {
                converged = true;
                break;
            }
            active.clear();
            for (std::size_t j = 0; j < k; ++j) {
                if (c[j] != 0.0) {
                    active.push_back(j);
                }
            }
            int since = 0;
            bool done = shortcut();
            while (!done && sweeps < budget) {
                if (sweep(false) < tol) {
                    break;
                }
                if (++since % polish_every == 0 && shortcut()) {
                    done = true;
                    break;
                }
            }
            if (done) {
                converged = true;
                break;
            }
        }
        return sweeps;
    }

    /// Feature-sign active-set search from `c`: solve the smooth problem on the signed active
    /// set, line-search to the best sign change, add the worst violator, repeat. Every step
    /// lowers the objective. Returns true with `c` updated once the optimality conditions
    /// hold within `kkt_tol`; false (leaving `c` alone) if it stalls.
    bool feature_sign(std::vector<double>& c, const std::vector<double>& lam, double a,
                      double kkt_tol) const
    {
        const std::size_t k = c.size();
        std::vector<double> cur = c;
        double f_cur = objective(cur, lam, a);
        const int max_iter = 4 * static_cast<int>(k) + 20;
        for (int it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd q = residual_correlation(cur);
            auto grad = [&](std::size_t j) {
                return -q[static_cast<Eigen::Index>(j)] + 2.0 * lam[j] * (1.0 - a) * cur[j];
            };
            double worst_active = 0.0;
            std::size_t enter = k;
            double enter_viol = kkt_tol;
            for (std::size_t j = 0; j < k; ++j) {
                if (!std::isfinite(lam[j])) {
                    continue;
                }
                if (cur[j] != 0.0) {
                    worst_active = std::max(
                        worst_active, std::abs(grad(j) + lam[j] * a * (cur[j] > 0 ? 1.0 : -1.0)));
                } else if (const double v = std::abs(grad(j)) - lam[j] * a; v > enter_viol) {
                    enter = j;
                    enter_viol = v;
                }
            }
            if (enter == k && worst_active <= kkt_tol) {
                c = std::move(cur);
                return true;
            }

            std::vector<std::size_t> act;
            std::vector<double> sign;
            for (std::size_t j = 0; j < k; ++j) {
                if (cur[j] != 0.0 || j == enter) {
                    act.push_back(j);
                    sign.push_back(cur[j] != 0.0 ? (cur[j] > 0 ? 1.0 : -1.0)
                                                 : (grad(j) > 0 ? -1.0 : 1.0));
                }
            }
            const auto m = static_cast<Eigen::Index>(act.size());
            Eigen::MatrixXd h(m, m);
            Eigen::VectorXd r(m);
            for (Eigen::Index p = 0; p < m; ++p) {
                const std::size_t j = act[static_cast<std::size_t>(p)];
                for (Eigen::Index s2 = 0; s2 < m; ++s2) {
                    h(p, s2) = gram_(static_cast<Eigen::Index>(j),
                                     static_cast<Eigen::Index>(act[static_cast<std::size_t>(s2)]));
                }
                h(p, p) += 2.0 * lam[j] * (1.0 - a);
                r[p] = rhs_[static_cast<Eigen::Index>(j)] - lam[j] * a * sign[static_cast<std::size_t>(p)];
            }
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            if (ldlt.info() != Eigen::Success) {
                return false;
            }
            const Eigen::VectorXd x = ldlt.solve(r);
            if (!x.allFinite()) {
                return false;
            }

            // Along c + t d the smooth loss is f0 - t q'd + t^2/2 d'(G + R)d, R the ridge
            // diagonal; the penalty is evaluated per coordinate at each candidate step.
            Eigen::VectorXd d(m);
            Eigen::VectorXd gd = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
            for (Eigen::Index p = 0; p < m; ++p) {
                const std::size_t j = act[static_cast<std::size_t>(p)];
                d[p] = x[p] - cur[j];
                gd.noalias() += gram_.col(static_cast<Eigen::Index>(j)) * d[p];
            }
            double qd = 0.0;
            double dgd = 0.0;
            double l1_now = 0.0;
            double l2_now = 0.0;
            for (Eigen::Index p = 0; p < m; ++p) {
                const std::size_t j = act[static_cast<std::size_t>(p)];
                qd += q[static_cast<Eigen::Index>(j)] * d[p];
                dgd += d[p] * gd[static_cast<Eigen::Index>(j)];
                l1_now += lam[j] * a * std::abs(cur[j]);
                l2_now += lam[j] * (1.0 - a) * cur[j] * cur[j];
            }
            auto along = [&](double t, std::size_t zeroed) {
                double pen = 0.0;
                for (Eigen::Index p = 0; p < m; ++p) {
                    const std::size_t j = act[static_cast<std::size_t>(p)];
                    const double v = static_cast<std::size_t>(p) == zeroed ? 0.0 : cur[j] + t * d[p];
                    pen += lam[j] * (a * std::abs(v) + (1.0 - a) * v * v);
                }
                return f_cur - l1_now - l2_now - t * qd + 0.5 * t * t * dgd + pen;
            };

            // Candidate steps: the full step and every point where a coordinate reaches zero.
            double t_best = 0.0;
            std::size_t z_best = k;
            double f_best = f_cur;
            auto consider = [&](double t, std::size_t zeroed) {
                const double f = along(t, zeroed);
                if (f < f_best) {
                    f_best = f;
                    t_best = t;
                    z_best = zeroed;
                }
            };
            consider(1.0, k);
            for (Eigen::Index p = 0; p < m; ++p) {
                const double c0 = cur[act[static_cast<std::size_t>(p)]];
                if (c0 != 0.0 && c0 * x[p] < 0.0) {
                    consider(c0 / (c0 - x[p]), static_cast<std::size_t>(p));
                }
            }
            std::vector<double> best;
            if (t_best > 0.0) {
                best = cur;
                for (Eigen::Index p = 0; p < m; ++p) {
                    const std::size_t j = act[static_cast<std::size_t>(p)];
                    best[j] = static_cast<std::size_t>(p) == z_best ? 0.0 : cur[j] + t_best * d[p];
                }
                f_best = objective(best, lam, a);
                if (!(f_best < f_cur)) {
                    best.clear();
                }
            }
            if (best.empty()) {
                return false;
            }
            cur = std::move(best);
            f_cur = f_best;
        }
        return false;
    }

    /// Exact solve on the current active set. Returns true and updates `c` when the
    /// re-solved point keeps its signs and satisfies the optimality conditions at least as
    /// well as the descent iterate.
    bool polish(std::vector<double>& c, const std::vector<double>& lam, double a) const
    {
        std::vector<Eigen::Index> act;
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (c[j] != 0.0) {
                act.push_back(static_cast<Eigen::Index>(j));
            }
        }
        if (act.empty()) {
            return false;
        }
        const auto m = static_cast<Eigen::Index>(act.size());
        Eigen::MatrixXd g(m, m);
        Eigen::VectorXd r(m);
        for (Eigen::Index p = 0; p < m; ++p) {
            const auto j = static_cast<std::size_t>(act[static_cast<std::size_t>(p)]);
            for (Eigen::Index s = 0; s < m; ++s) {
                g(p, s) = gram_(act[static_cast<std::size_t>(p)], act[static_cast<std::size_t>(s)]);
            }
            g(p, p) += 2.0 * lam[j] * (1.0 - a);
            r[p] = rhs_[act[static_cast<std::size_t>(p)]] - lam[j] * a * (c[j] > 0 ? 1.0 : -1.0);
        }
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            return false;
        }
        const Eigen::VectorXd sol = ldlt.solve(r);
        if (!sol.allFinite()) {
            return false;
        }
        std::vector<double> candidate = c;
        for (Eigen::Index p = 0; p < m; ++p) {
            const auto j = static_cast<std::size_t>(act[static_cast<std::size_t>(p)]);
            const double v = sol[p];
            if (lam[j] * a > 0.0 && (v == 0.0 || (v > 0) != (c[j] > 0))) {
                return false;
            }
            candidate[j] = v;
        }
        if (kkt(candidate, lam, a) > kkt(c, lam, a)) {
            return false;
        }
        c = std::move(candidate);
        return true;
    }

    void solve(std::vector<double>& c, const PenaltySpec& p, const SolverOptions& opt,
               FitResult& out) const
    {
        const auto lam = penalties(p);
        const double a = p.l1_ratio;
        if (constant_response_) {
            std::fill(c.begin(), c.end(), 0.0);
            out.converged = true;
            out.sweeps = 0;
            out.kkt_violation = 0.0;
            return;
        }
        const double kkt_tol = 1e-9 * response_scale();
        bool converged = false;
        std::vector<double>* trace = opt.trace_objective ? &out.objective_trace : nullptr;
        int used = descend(c, lam, a, opt, opt.max_sweeps, converged, trace, kkt_tol);
        if (opt.polish) {
            polish(c, lam, a);
        }
        out.kkt_violation = kkt(c, lam, a);
        if (out.kkt_violation > kkt_tol && used < opt.max_sweeps) {
            // The step criterion can stop early along flat, collinear directions; refine once.
            SolverOptions tighter = opt;
            tighter.tolerance = opt.tolerance * 1e-3;
            bool refined = false;
            used += descend(c, lam, a, tighter, opt.max_sweeps - used, refined, trace);
            if (opt.polish) {
                polish(c, lam, a);
            }
            out.kkt_violation = kkt(c, lam, a);
        }
        out.converged = converged;
        out.sweeps = used;
    }

    FitResult finish(const std::vector<double>& c, const PenaltySpec& p, FitResult out) const
    {
        out.lambda_used = p;
        out.coefficients.assign(d_, 0.0);
        out.standardized_coefficients.assign(d_, 0.0);
        out.dropped_features = dropped_;
        double intercept = ybar_;
        for (std::size_t s = 0; s < kept_.size(); ++s) {
            const std::size_t j = kept_[s];
            const double coef = c[s] / scale_[j];
            out.standardized_coefficients[j] = c[s];
            out.coefficients[j] = coef;
            intercept -= coef * mean_[j];
        }
        out.intercept = intercept;
        out.n_nonzero = static_cast<std::size_t>(std::count_if(
            out.coefficients.begin(), out.coefficients.end(), [](double v) { return v != 0.0; }));
        out.objective_value = objective(c, penalties(p), p.l1_ratio);
        return out;
    }

    /// Largest |b - G c| over penalised coordinates once unpenalised ones are fitted.
    double max_penalized_correlation() const
    {
        if (constant_response_ || kept_.empty()) {
            return 0.0;
        }
        std::vector<double> lam(kept_.size());
        bool any_free = false;
        for (std::size_t s = 0; s < kept_.size(); ++s) {
            lam[s] = group_[s] == PenaltyGroup::Unpenalized ? 0.0 : kInf;
            any_free = any_free || group_[s] == PenaltyGroup::Unpenalized;
        }
        std::vector<double> c(kept_.size(), 0.0);
        if (any_free) {
            SolverOptions opt;
            bool converged = false;
            descend(c, lam, 1.0, opt, opt.max_sweeps, converged, nullptr);
            polish(c, lam, 1.0);
        }
        const Eigen::VectorXd q = residual_correlation(c);
        double best = 0.0;
        for (std::size_t s = 0; s < kept_.size(); ++s) {
            if (group_[s] != PenaltyGroup::Unpenalized) {
                best = std::max(best, std::abs(q[static_cast<Eigen::Index>(s)]));
            }
        }
        return best;
    }

private:
    std::size_t d_;
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<std::size_t> kept_;
    std::vector<std::size_t> dropped_;
    std::vector<PenaltyGroup> group_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd rhs_;
    double ybar_ = 0.0;
    double syy_ = 0.0;
    double sy_ = 0.0;
    bool constant_response_ = false;
};

void check_penalty(const PenaltySpec& p)
{
    if (!(p.lambda_ts >= 0.0) || !(p.lambda_exo >= 0.0) || !(p.l1_ratio >= 0.0) ||
        !(p.l1_ratio <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "penalties must be >= 0 and l1_ratio in [0, 1]");
    }
}

double weighted_holdout_error(const DesignMatrix& x, std::span<const std::size_t> rows,
                              const FitResult& fit)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i : rows) {
        const double e = x.responses()[i] - fit.predict(x.row(i));
        num += x.weights()[i] * e * e;
        den += x.weights()[i];
    }
    return num / den;
}

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

std::vector<FoldSplit> make_splits(std::size_t n, const CvOptions& opt)
{
    if (opt.n_folds < 2 || static_cast<std::size_t>(opt.n_folds) > n) {
        throw Error(ErrorCode::FoldTooSmall, std::to_string(opt.n_folds) + " folds over " +
                                                 std::to_string(n) + " rows");
    }
    const auto fold = assign_folds(n, opt.n_folds, opt.scheme);
    std::vector<FoldSplit> splits(static_cast<std::size_t>(opt.n_folds));
    for (std::size_t i = 0; i < n; ++i) {
        for (int f = 0; f < opt.n_folds; ++f) {
            (fold[i] == f ? splits[static_cast<std::size_t>(f)].test
                          : splits[static_cast<std::size_t>(f)].train)
                .push_back(i);
        }
    }
    for (const auto& s : splits) {
        if (s.train.size() < 2 || s.test.empty()) {
            throw Error(ErrorCode::FoldTooSmall, "a fold leaves fewer than 2 training rows");
        }
    }
    return splits;
}

CvResult summarize(std::vector<PenaltySpec> path, const std::vector<std::vector<double>>& err,
                   SelectionRule rule)
{
    CvResult res;
    res.path = std::move(path);
    const std::size_t m = res.path.size();
    const auto k = static_cast<double>(err.size());
    res.mean_error.assign(m, 0.0);
    res.standard_error.assign(m, 0.0);
    for (std::size_t p = 0; p < m; ++p) {
        double mean = 0.0;
        for (const auto& fold : err) {
            mean += fold[p];
        }
        mean /= k;
        double var = 0.0;
        for (const auto& fold : err) {
            var += (fold[p] - mean) * (fold[p] - mean);
        }
        var /= std::max(1.0, k - 1.0);
        res.mean_error[p] = mean;
        res.standard_error[p] = std::sqrt(var / k);
    }
    res.min_index = static_cast<std::size_t>(
        std::min_element(res.mean_error.begin(), res.mean_error.end()) - res.mean_error.begin());
    res.selected_index = res.min_index;
    if (rule == SelectionRule::OneSE) {
        const double bound = res.mean_error[res.min_index] + res.standard_error[res.min_index];
        for (std::size_t p = 0; p < m; ++p) {
            if (res.mean_error[p] <= bound) {
                res.selected_index = p;
                break;
            }
        }
    }
    res.selected = res.path[res.selected_index];
    return res;
}

} // namespace

DesignMatrix::DesignMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major,
                           std::vector<double> responses, std::vector<double> weights,
                           std::vector<PenaltyGroup> groups)
    : x_(std::move(row_major)), responses_(std::move(responses)), weights_(std::move(weights)),
      groups_(std::move(groups))
{
    if (rows == 0) {
        throw Error(ErrorCode::InvalidDesign, "design needs at least one row");
    }
    if (x_.size() != rows * cols || responses_.size() != rows || weights_.size() != rows ||
        groups_.size() != cols) {
        throw Error(ErrorCode::InvalidDesign, "design dimensions disagree");
    }
    for (double v : x_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InvalidDesign, "non-finite feature value");
        }
    }
    for (double v : responses_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InvalidDesign, "non-finite response");
        }
    }
    for (double w : weights_) {
        if (!std::isfinite(w) || !(w > 0.0)) {
            throw Error(ErrorCode::InvalidDesign, "observation weights must be finite and > 0");
        }
    }
}

DesignMatrix DesignMatrix::subset(std::span<const std::size_t> rows) const
{
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;
    x.reserve(rows.size() * cols());
    for (std::size_t i : rows) {
        auto r = row(i);
        x.insert(x.end(), r.begin(), r.end());
        y.push_back(responses_[i]);
        w.push_back(weights_[i]);
    }
    return DesignMatrix(rows.size(), cols(), std::move(x), std::move(y), std::move(w), groups_);
}

double FitResult::predict(std::span<const double> features) const
{
    double v = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
        v += coefficients[j] * features[j];
    }
    return v;
}

FitResult fit_penalized(const DesignMatrix& x, const PenaltySpec& penalty,
                        const SolverOptions& options)
{
    check_penalty(penalty);
    if (x.rows() < 2) {
        throw Error(ErrorCode::InvalidDesign, "penalised fit needs at least two rows");
    }
    const StandardizedProblem prob(x);
    std::vector<double> c(prob.kept(), 0.0);
    FitResult out;
    prob.solve(c, penalty, options, out);
    return prob.finish(c, penalty, std::move(out));
}

double lambda_max(const DesignMatrix& x, double l1_ratio)
{
    const StandardizedProblem prob(x);
    return prob.max_penalized_correlation() / std::max(l1_ratio, 1e-3);
}

std::vector<PenaltySpec> lambda_path(const DesignMatrix& x, int n_points, double ratio,
                                     double l1_ratio)
{
    if (n_points < 2 || !(ratio > 0.0) || !(ratio < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "lambda path needs n_points >= 2 and 0 < ratio < 1");
    }
    const double top = lambda_max(x, l1_ratio);
    std::vector<PenaltySpec> path;
    path.reserve(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(n_points - 1);
        path.push_back(PenaltySpec::uniform(top * std::pow(ratio, frac), l1_ratio));
    }
    return path;
}

std::string_view to_string(SelectionRule r) noexcept
{
    return r == SelectionRule::Min ? "min" : "1se";
}

SelectionRule parse_selection_rule(std::string_view s)
{
    if (s == "min") {
        return SelectionRule::Min;
    }
    if (s == "1se" || s == "onese") {
        return SelectionRule::OneSE;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown selection rule '" + std::string(s) + "'");
}

std::string_view to_string(FoldScheme s) noexcept
{
    return s == FoldScheme::Interleaved ? "interleaved" : "contiguous";
}

FoldScheme parse_fold_scheme(std::string_view s)
{
    if (s == "interleaved") {
        return FoldScheme::Interleaved;
    }
    if (s == "contiguous") {
        return FoldScheme::Contiguous;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown fold scheme '" + std::string(s) + "'");
}

std::vector<int> assign_folds(std::size_t rows, int n_folds, FoldScheme scheme)
{
    std::vector<int> fold(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        fold[i] = scheme == FoldScheme::Interleaved
                      ? static_cast<int>(i % static_cast<std::size_t>(n_folds))
                      : static_cast<int>(i * static_cast<std::size_t>(n_folds) / rows);
    }
    return fold;
}

CvResult cross_validate(const DesignMatrix& x, const std::vector<PenaltySpec>& path,
                        const CvOptions& options)
{
    if (path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "empty penalty path");
    }
    for (const auto& p : path) {
        check_penalty(p);
    }
    const auto splits = make_splits(x.rows(), options);
    std::vector<std::vector<double>> err(splits.size(), std::vector<double>(path.size()));
    for (std::size_t f = 0; f < splits.size(); ++f) {
        const DesignMatrix train = x.subset(splits[f].train);
        const StandardizedProblem prob(train);
        std::vector<double> c(prob.kept(), 0.0);
        for (std::size_t p = 0; p < path.size(); ++p) {
            FitResult out;
            prob.solve(c, path[p], options.solver, out);
            const FitResult fit = prob.finish(c, path[p], std::move(out));
            err[f][p] = weighted_holdout_error(x, splits[f].test, fit);
        }
    }
    return summarize(path, err, options.rule);
}

PenaltySpec cross_validate_lambda(const DesignMatrix& x, const std::vector<PenaltySpec>& path,
                                  int n_folds, SelectionRule rule)
{
    CvOptions opt;
    opt.n_folds = n_folds;
    opt.rule = rule;
    return cross_validate(x, path, opt).selected;
}

CvResult cross_validate_grid(const DesignMatrix& x, std::span<const double> ts_path,
                             std::span<const double> exo_path, double l1_ratio,
                             const CvOptions& options)
{
    std::vector<PenaltySpec> grid;
    for (double lt : ts_path) {
        for (double le : exo_path) {
            grid.push_back(PenaltySpec{lt, le, l1_ratio});
        }
    }
    if (grid.empty()) {
        throw Error(ErrorCode::InvalidConfig, "empty penalty grid");
    }
    const auto splits = make_splits(x.rows(), options);
    std::vector<std::vector<double>> err(splits.size(), std::vector<double>(grid.size()));
    for (std::size_t f = 0; f < splits.size(); ++f) {
        const DesignMatrix train = x.subset(splits[f].train);
        const StandardizedProblem prob(train);
        for (std::size_t a = 0; a < ts_path.size(); ++a) {
            std::vector<double> c(prob.kept(), 0.0);
            for (std::size_t b = 0; b < exo_path.size(); ++b) {
                const std::size_t p = a * exo_path.size() + b;
                FitResult out;
                prob.solve(c, grid[p], options.solver, out);
                const FitResult fit = prob.finish(c, grid[p], std::move(out));
                err[f][p] = weighted_holdout_error(x, splits[f].test, fit);
            }
        }
    }
    return summarize(std::move(grid), err, options.rule);
}

} // namespace prism

#ifndef QOECOST_POWER_FIT_HPP
#define QOECOST_POWER_FIT_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace qoecost {

struct PointXY {
    double x = 0.0;
    double y = 0.0;
};

/// Observations for the one-term power model. All x must be positive and all
/// values finite; at least two points.
struct DataSet {
    std::vector<PointXY> points;

    std::size_t size() const { return points.size(); }
};

/// f(x) = a * x^b
struct PowerLaw {
    double a = 0.0;
    double b = 0.0;

    double operator()(double x) const { return a * std::pow(x, b); }
};

enum class RobustMode { none, lar };

enum class Termination { tol_fun, tol_x, max_iter, max_fun_evals };

/// Solver configuration. The iteration and function-evaluation caps bound the
/// whole fit, including robust reweighting rounds. diff_min_change and
/// diff_max_change clamp the relative finite-difference step used for the
/// Jacobian.
struct FitOptions {
    RobustMode robust = RobustMode::none;
    std::optional<std::pair<double, double>> start;  // (a0, b0); default is a log-log regression
    double tol_fun = 1e-6;
    double tol_x = 1e-6;
    int max_iter = 400;
    int max_fun_evals = 600;
    double diff_min_change = 1e-8;
    double diff_max_change = 0.1;
};

/// Unweighted goodness-of-fit summary. rmse and adj_r_square are absent when
/// dfe == 0 (two-point fits); r_square and adj_r_square are absent when the
/// data has zero variance (sst == 0).
struct FitDiagnostics {
    double sse = 0.0;
    double sst = 0.0;
    std::optional<double> r_square;
    std::optional<double> adj_r_square;
    std::optional<double> rmse;
    int dfe = 0;
    int n_coeff = 2;
};

/// Per-coefficient confidence interval. `degenerate` marks intervals that
/// could not be computed (singular normal equations or dfe == 0); the bounds
/// are then infinite.
struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;
};

struct FitResult {
    PowerLaw model;
    FitDiagnostics diagnostics;
    std::array<ConfidenceInterval, 2> confidence;  // [a, b], 95% level
    bool converged = false;
    int iterations = 0;
    Termination termination = Termination::tol_fun;
};

/// Fits f(x) = a * x^b by trust-region Levenberg-Marquardt on the weighted
/// squared residuals. RobustMode::lar wraps the solve in iteratively
/// reweighted least squares with weights 1/max(|r|, delta),
/// delta = 1e-6 * (1 + median|r|), re-solving until the coefficients move by
/// less than tol_x or 50 rounds elapse. Diagnostics are always computed with
/// unit weights; confidence bounds use the final Jacobian, weighted for LAR
/// fits and unweighted otherwise. Results are invariant under permutation of
/// the input points. Non-convergence is reported through `converged` and
/// `termination`, not as an error. Throws std::domain_error for invalid data
/// or options (LAR requires at least three points).
FitResult fit_power_law(const DataSet& data, const FitOptions& opts = {});

/// Exhaustive grid search: returns the (a, b) grid point of lowest unweighted
/// SSE over [a_range] x [b_range] with `resolution` points per axis
/// (resolution >= 100). Test oracle for the objective value reached by
/// fit_power_law.
PowerLaw grid_oracle(const DataSet& data, std::pair<double, double> a_range,
                     std::pair<double, double> b_range, int resolution);

/// Unweighted diagnostics of `model` on `data`: sse, sst about the mean,
/// r_square = 1 - sse/sst, adj_r_square = 1 - (1 - r_square)(n-1)/dfe,
/// rmse = sqrt(sse/dfe), dfe = n - 2.
FitDiagnostics goodness_of_fit(const DataSet& data, const PowerLaw& model);

/// Assembles diagnostics from precomputed residual sums (n = point count).
FitDiagnostics diagnostics_from_sums(double sse, double sst, std::size_t n);

/// Confidence bounds coefficient +- t(1-(1-level)/2, dfe) * standard error,
/// with standard errors from the diagonal of s^2 (J^T J)^-1, s^2 = sse/dfe,
/// and J the finite-difference Jacobian at `model`. Requires n >= 3 and level
/// in (0, 1). Singular J^T J yields infinite bounds flagged degenerate.
std::array<ConfidenceInterval, 2> confidence_bounds(const DataSet& data,
                                                    const PowerLaw& model,
                                                    double level = 0.95);

/// Forward-difference Jacobian of the model values, one row (df/da, df/db)
/// per point. The per-coefficient step is rel * max(|coef|, 1) with rel the
/// square root of machine epsilon clamped into
/// [diff_min_change, diff_max_change].
std::vector<std::array<double, 2>> finite_diff_jacobian(const DataSet& data,
                                                        const PowerLaw& model,
                                                        const FitOptions& opts = {});

}  // namespace qoecost

#endif

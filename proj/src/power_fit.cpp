#include "qoecost/power_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qoecost/tdist.hpp"

namespace qoecost {

namespace {

constexpr double kSqrtEps = 1.4901161193847656e-08;  // sqrt(DBL_EPSILON)

void validate_dataset(const DataSet& data) {
    if (data.points.size() < 2) {
        throw std::domain_error("power_fit: need at least 2 data points");
    }
    for (const auto& p : data.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw std::domain_error("power_fit: data values must be finite");
        }
        if (p.x <= 0.0) {
            throw std::domain_error("power_fit: x values must be positive");
        }
    }
}

void validate_options(const FitOptions& opts) {
    if (!(opts.tol_fun > 0.0) || !(opts.tol_x > 0.0)) {
        throw std::domain_error("power_fit: tolerances must be positive");
    }
    if (opts.max_iter < 1 || opts.max_fun_evals < 1) {
        throw std::domain_error("power_fit: iteration caps must be at least 1");
    }
    if (!(opts.diff_min_change > 0.0) || opts.diff_min_change > opts.diff_max_change) {
        throw std::domain_error("power_fit: need 0 < diff_min_change <= diff_max_change");
    }
    if (opts.start &&
        (!std::isfinite(opts.start->first) || !std::isfinite(opts.start->second))) {
        throw std::domain_error("power_fit: start point must be finite");
    }
}

// Accumulations run in sorted order so permuted inputs give identical output.
std::vector<PointXY> canonical_points(const DataSet& data) {
    std::vector<PointXY> pts = data.points;
    std::sort(pts.begin(), pts.end(), [](const PointXY& l, const PointXY& r) {
        return l.x != r.x ? l.x < r.x : l.y < r.y;
    });
    return pts;
}

std::vector<double> eval_model(const std::vector<PointXY>& pts, double a, double b) {
    std::vector<double> f(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        f[i] = a * std::pow(pts[i].x, b);
    }
    return f;
}

// Forward-difference rows (df/da, df/db) given the model values at (a, b).
std::vector<std::array<double, 2>> fd_jacobian_rows(const std::vector<PointXY>& pts,
                                                    double a, double b,
                                                    const std::vector<double>& base,
                                                    const FitOptions& opts) {
    const double rel = std::clamp(kSqrtEps, opts.diff_min_change, opts.diff_max_change);
    const double step_a = rel * std::max(std::fabs(a), 1.0);
    const double step_b = rel * std::max(std::fabs(b), 1.0);
    const std::vector<double> fa = eval_model(pts, a + step_a, b);
    const std::vector<double> fb = eval_model(pts, a, b + step_b);
    std::vector<std::array<double, 2>> jac(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        jac[i][0] = (fa[i] - base[i]) / step_a;
        jac[i][1] = (fb[i] - base[i]) / step_b;
    }
    return jac;
}

std::pair<double, double> default_start(const std::vector<PointXY>& pts) {
    double mean_y = 0.0;
    bool all_positive = true;
    for (const auto& p : pts) {
        mean_y += p.y;
        all_positive = all_positive && p.y > 0.0;
    }
    mean_y /= static_cast<double>(pts.size());
    if (!all_positive) {
        return {mean_y, 0.0};
    }
    // Ordinary linear regression of ln y on ln x.
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += std::log(p.x);
        my += std::log(p.y);
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : pts) {
        const double dx = std::log(p.x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.y) - my);
    }
    if (!(sxx > 0.0)) {
        return {mean_y, 0.0};
    }
    const double slope = sxy / sxx;
    return {std::exp(my - slope * mx), slope};
}

struct Budget {
    int iters_left;
    int fevals_left;
};

struct LmState {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> model;                   // f values at (a, b)
    std::vector<std::array<double, 2>> jac;      // Jacobian rows at (a, b)
    double damping = 1e-3;  // dimensionless Marquardt factor, carried across solves
    bool converged = false;
    Termination termination = Termination::max_fun_evals;
};

// Weighted gradient and normal matrix of F = 1/2 sum w (y - f)^2.
struct Quadratic {
    double a00, a01, a11;  // J^T W J
    double g0, g1;         // gradient of F
    double value;          // F
};

Quadratic build_quadratic(const std::vector<PointXY>& pts, const std::vector<double>& w,
                          const std::vector<double>& model,
                          const std::vector<std::array<double, 2>>& jac) {
    Quadratic q{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].y - model[i];
        q.a00 += w[i] * jac[i][0] * jac[i][0];
        q.a01 += w[i] * jac[i][0] * jac[i][1];
        q.a11 += w[i] * jac[i][1] * jac[i][1];
        q.g0 -= w[i] * jac[i][0] * r;
        q.g1 -= w[i] * jac[i][1] * r;
        q.value += 0.5 * w[i] * r * r;
    }
    return q;
}

double weighted_objective(const std::vector<PointXY>& pts, const std::vector<double>& w,
                          const std::vector<double>& model) {
    double f = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].y - model[i];
        f += 0.5 * w[i] * r * r;
    }
    return f;
}

// Trust-region Levenberg-Marquardt on the weighted problem. Marquardt
// scaling damps each normal-matrix diagonal multiplicatively, which keeps
// the step invariant under per-axis rescaling of the problem; the
// dimensionless factor is halved on gain ratio > 0.75, quadrupled on gain
// ratio < 0.25 or a rejected step, and carried across solves together with
// the model and Jacobian caches so reweighted restarts are free.
LmState lm_solve(const std::vector<PointXY>& pts, const std::vector<double>& w,
                 LmState st, const FitOptions& opts, Budget& budget) {
    st.converged = false;
    if (st.model.size() != pts.size() || st.jac.size() != pts.size()) {
        if (budget.fevals_left < 3) {
            st.termination = Termination::max_fun_evals;
            return st;
        }
        st.model = eval_model(pts, st.a, st.b);
        st.jac = fd_jacobian_rows(pts, st.a, st.b, st.model, opts);
        budget.fevals_left -= 3;
    }
    Quadratic q = build_quadratic(pts, w, st.model, st.jac);

    constexpr double kRestingDamping = 1e-3;

    while (true) {
        if (std::max(std::fabs(q.g0), std::fabs(q.g1)) <= opts.tol_fun) {
            st.converged = true;
            st.termination = Termination::tol_fun;
            return st;
        }
        if (budget.iters_left <= 0) {
            st.termination = Termination::max_iter;
            return st;
        }
        if (budget.fevals_left < 3) {
            st.termination = Termination::max_fun_evals;
            return st;
        }

        // Diagonally scaled solve of (JtWJ + damping*diag(JtWJ)) step = -g.
        // Scaling keeps the 2x2 system well conditioned even when one
        // residual weight dwarfs the rest: the scaled off-diagonal is bounded
        // by 1/(1 + damping), so 1 - rho^2 never cancels away. A zero
        // diagonal means that column of J vanishes (and with it the matching
        // gradient entry), so that component simply stays put.
        const double d0 = std::sqrt(q.a00 * (1.0 + st.damping));
        const double d1 = std::sqrt(q.a11 * (1.0 + st.damping));
        double da = 0.0, db = 0.0;
        if (d0 > 0.0 && d1 > 0.0) {
            const double rho = q.a01 / (d0 * d1);
            const double v0 = -q.g0 / d0;
            const double v1 = -q.g1 / d1;
            const double denom = 1.0 - rho * rho;
            da = (v0 - rho * v1) / (denom * d0);
            db = (v1 - rho * v0) / (denom * d1);
        } else if (d0 > 0.0) {
            da = -q.g0 / (d0 * d0);
        } else if (d1 > 0.0) {
            db = -q.g1 / (d1 * d1);
        }

        // A proposed step only signals a stationary point while the damping
        // rests at or below its base level; a step shrunk by raised damping
        // has to earn acceptance first.
        const double step_norm = std::hypot(da, db);
        const double step_floor = opts.tol_x * (std::hypot(st.a, st.b) + opts.tol_x);
        if (st.damping <= kRestingDamping && step_norm <= step_floor) {
            st.converged = true;
            st.termination = Termination::tol_x;
            return st;
        }

        budget.iters_left -= 1;
        budget.fevals_left -= 1;
        const std::vector<double> trial = eval_model(pts, st.a + da, st.b + db);
        const double trial_value = weighted_objective(pts, w, trial);
        const double predicted =
            0.5 * (da * (st.damping * q.a00 * da - q.g0) + db * (st.damping * q.a11 * db - q.g1));
        const double gain = (q.value - trial_value) / predicted;

        if (std::isfinite(trial_value) && predicted > 0.0 && gain > 0.0) {
            st.a += da;
            st.b += db;
            st.model = trial;
            st.jac = fd_jacobian_rows(pts, st.a, st.b, st.model, opts);
            budget.fevals_left -= 2;
            q = build_quadratic(pts, w, st.model, st.jac);
            if (gain > 0.75) {
                st.damping = std::max(st.damping * 0.5, 1e-12);
            } else if (gain < 0.25) {
                st.damping *= 4.0;
            }
            if (step_norm <= opts.tol_x * (std::hypot(st.a, st.b) + opts.tol_x)) {
                st.converged = true;
                st.termination = Termination::tol_x;
                return st;
            }
        } else {
            st.damping *= 4.0;
        }
        if (!std::isfinite(st.damping) || st.damping > 1e15) {
            st.damping = 1e15;
        }
    }
}

double median_abs(std::vector<double> values) {
    for (double& v : values) v = std::fabs(v);
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double med = values[mid];
    if (values.size() % 2 == 0) {
        const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
        med = 0.5 * (lo + med);
    }
    return med;
}

std::array<ConfidenceInterval, 2> bounds_from_jacobian(
    const PowerLaw& model, const std::vector<std::array<double, 2>>& jac,
    const std::vector<double>& w, double weighted_sse, int dfe, double level) {
    std::array<ConfidenceInterval, 2> out;
    const double inf = std::numeric_limits<double>::infinity();
    if (dfe <= 0) {
        out[0] = {-inf, inf, true};
        out[1] = {-inf, inf, true};
        return out;
    }
    double a00 = 0.0, a01 = 0.0, a11 = 0.0;
    for (std::size_t i = 0; i < jac.size(); ++i) {
        a00 += w[i] * jac[i][0] * jac[i][0];
        a01 += w[i] * jac[i][0] * jac[i][1];
        a11 += w[i] * jac[i][1] * jac[i][1];
    }
    const double det = a00 * a11 - a01 * a01;
    if (!(det > std::numeric_limits<double>::epsilon() * a00 * a11)) {
        out[0] = {-inf, inf, true};
        out[1] = {-inf, inf, true};
        return out;
    }
    const double variance = weighted_sse / dfe;
    const double tq = stats::students_t_quantile(1.0 - 0.5 * (1.0 - level), dfe);
    const double se_a = std::sqrt(variance * a11 / det);
    const double se_b = std::sqrt(variance * a00 / det);
    out[0] = {model.a - tq * se_a, model.a + tq * se_a, false};
    out[1] = {model.b - tq * se_b, model.b + tq * se_b, false};
    return out;
}

}  // namespace

FitDiagnostics diagnostics_from_sums(double sse, double sst, std::size_t n) {
    if (n < 2) {
        throw std::domain_error("power_fit: diagnostics need at least 2 points");
    }
    FitDiagnostics d;
    d.sse = sse;
    d.sst = sst;
    d.dfe = static_cast<int>(n) - d.n_coeff;
    if (sst > 0.0) {
        d.r_square = 1.0 - sse / sst;
    }
    if (d.dfe > 0) {
        d.rmse = std::sqrt(sse / d.dfe);
        if (d.r_square) {
            d.adj_r_square = 1.0 - (1.0 - *d.r_square) * (static_cast<double>(n) - 1.0) / d.dfe;
        }
    }
    return d;
}

FitDiagnostics goodness_of_fit(const DataSet& data, const PowerLaw& model) {
    validate_dataset(data);
    if (!std::isfinite(model.a) || !std::isfinite(model.b)) {
        throw std::domain_error("power_fit: model coefficients must be finite");
    }
    const auto pts = canonical_points(data);
    double mean_y = 0.0;
    for (const auto& p : pts) mean_y += p.y;
    mean_y /= static_cast<double>(pts.size());
    double sse = 0.0, sst = 0.0;
    for (const auto& p : pts) {
        const double r = p.y - model(p.x);
        const double d = p.y - mean_y;
        sse += r * r;
        sst += d * d;
    }
    return diagnostics_from_sums(sse, sst, pts.size());
}

std::vector<std::array<double, 2>> finite_diff_jacobian(const DataSet& data,
                                                        const PowerLaw& model,
                                                        const FitOptions& opts) {
    validate_dataset(data);
    validate_options(opts);
    if (!std::isfinite(model.a) || !std::isfinite(model.b)) {
        throw std::domain_error("power_fit: model coefficients must be finite");
    }
    const auto& pts = data.points;  // row order follows the input here
    const auto base = eval_model(pts, model.a, model.b);
    return fd_jacobian_rows(pts, model.a, model.b, base, opts);
}

std::array<ConfidenceInterval, 2> confidence_bounds(const DataSet& data,
                                                    const PowerLaw& model,
                                                    double level) {
    validate_dataset(data);
    if (data.points.size() < 3) {
        throw std::domain_error("power_fit: confidence bounds need at least 3 points");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw std::domain_error("power_fit: confidence level must lie in (0, 1)");
    }
    const auto pts = canonical_points(data);
    const auto base = eval_model(pts, model.a, model.b);
    const auto jac = fd_jacobian_rows(pts, model.a, model.b, base, FitOptions{});
    double sse = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].y - base[i];
        sse += r * r;
    }
    const std::vector<double> unit(pts.size(), 1.0);
    return bounds_from_jacobian(model, jac, unit, sse, static_cast<int>(pts.size()) - 2, level);
}

PowerLaw grid_oracle(const DataSet& data, std::pair<double, double> a_range,
                     std::pair<double, double> b_range, int resolution) {
    validate_dataset(data);
    if (!std::isfinite(a_range.first) || !std::isfinite(a_range.second) ||
        !std::isfinite(b_range.first) || !std::isfinite(b_range.second) ||
        a_range.first > a_range.second || b_range.first > b_range.second) {
        throw std::domain_error("power_fit: grid ranges must be finite and ordered");
    }
    if (resolution < 100) {
        throw std::domain_error("power_fit: grid resolution must be at least 100 per axis");
    }
    const auto pts = canonical_points(data);
    const double a_step = (a_range.second - a_range.first) / (resolution - 1);
    const double b_step = (b_range.second - b_range.first) / (resolution - 1);

    double best_sse = std::numeric_limits<double>::infinity();
    PowerLaw best{a_range.first, b_range.first};
    std::vector<double> powed(pts.size());
    for (int bi = 0; bi < resolution; ++bi) {
        const double b = b_range.first + bi * b_step;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            powed[i] = std::pow(pts[i].x, b);
        }
        for (int ai = 0; ai < resolution; ++ai) {
            const double a = a_range.first + ai * a_step;
            double sse = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double r = pts[i].y - a * powed[i];
                sse += r * r;
            }
            if (sse < best_sse) {
                best_sse = sse;
                best = PowerLaw{a, b};
            }
        }
    }
    return best;
}

FitResult fit_power_law(const DataSet& data, const FitOptions& opts) {
    validate_dataset(data);
    validate_options(opts);
    const auto pts = canonical_points(data);
    if (opts.robust == RobustMode::lar && pts.size() < 3) {
        throw std::domain_error("power_fit: LAR fitting needs at least 3 points");
    }

    Budget budget{opts.max_iter, opts.max_fun_evals};
    std::vector<double> weights(pts.size(), 1.0);

    LmState state;
    const auto [a0, b0] = opts.start ? *opts.start : default_start(pts);
    state.a = a0;
    state.b = b0;
    state = lm_solve(pts, weights, std::move(state), opts, budget);

    if (opts.robust == RobustMode::lar && !state.model.empty()) {
        for (int round = 0; round < 50; ++round) {
            std::vector<double> resid(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i) {
                resid[i] = pts[i].y - state.model[i];
            }
            const double floor = 1e-6 * (1.0 + median_abs(resid));
            for (std::size_t i = 0; i < pts.size(); ++i) {
                weights[i] = 1.0 / std::max(std::fabs(resid[i]), floor);
            }
            const double prev_a = state.a;
            const double prev_b = state.b;
            state = lm_solve(pts, weights, std::move(state), opts, budget);
            const bool settled = std::fabs(state.a - prev_a) < opts.tol_x &&
                                 std::fabs(state.b - prev_b) < opts.tol_x;
            if (settled || !state.converged) break;
        }
    }

    FitResult result;
    result.model = PowerLaw{state.a, state.b};
    result.converged = state.converged;
    result.termination = state.termination;
    result.iterations = opts.max_iter - budget.iters_left;
    result.diagnostics = goodness_of_fit(data, result.model);

    // Confidence bounds from the final Jacobian: weighted for LAR fits,
    // unweighted otherwise. Reporting is not charged against the caps.
    if (state.model.size() != pts.size() || state.jac.size() != pts.size()) {
        state.model = eval_model(pts, state.a, state.b);
        state.jac = fd_jacobian_rows(pts, state.a, state.b, state.model, opts);
    }
    if (opts.robust == RobustMode::none) {
        std::fill(weights.begin(), weights.end(), 1.0);
    }
    double weighted_sse = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].y - state.model[i];
        weighted_sse += weights[i] * r * r;
    }
    result.confidence = bounds_from_jacobian(result.model, state.jac, weights, weighted_sse,
                                             result.diagnostics.dfe, 0.95);
    return result;
}

}  // namespace qoecost

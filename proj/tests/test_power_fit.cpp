#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "qoecost/power_fit.hpp"

using namespace qoecost;

namespace {

DataSet uk_tariffs() {
    return DataSet{{{10, 20}, {30, 37}, {50, 40}, {100, 42}, {200, 43},
                    {400, 45}, {600, 46}, {800, 46}, {1000, 46}}};
}

DataSet synthetic(double a, double b, int n = 12) {
    DataSet d;
    for (int i = 1; i <= n; ++i) {
        const double x = static_cast<double>(i);
        d.points.push_back({x, a * std::pow(x, b)});
    }
    return d;
}

double sse_of(const DataSet& d, const PowerLaw& m) {
    double s = 0.0;
    for (const auto& p : d.points) {
        const double r = p.y - m(p.x);
        s += r * r;
    }
    return s;
}

double abs_res_of(const DataSet& d, const PowerLaw& m) {
    double s = 0.0;
    for (const auto& p : d.points) s += std::fabs(p.y - m(p.x));
    return s;
}

}  // namespace

TEST_CASE("noiseless data is recovered exactly") {
    const DataSet d = synthetic(3.7, 0.42);
    const FitResult r = fit_power_law(d);
    CHECK(r.converged);
    CHECK(r.model.a == doctest::Approx(3.7).epsilon(1e-8));
    CHECK(r.model.b == doctest::Approx(0.42).epsilon(1e-8));
    CHECK(r.diagnostics.sse <= 1e-14);

    FitOptions away;  // start far from the solution
    away.start = {{9.2708, 0.3019}};
    const FitResult r2 = fit_power_law(d, away);
    CHECK(r2.converged);
    CHECK(r2.model.a == doctest::Approx(3.7).epsilon(1e-6));
    CHECK(r2.model.b == doctest::Approx(0.42).epsilon(1e-6));
    // Finite-difference Jacobians floor the reachable residual around 1e-11.
    CHECK(r2.diagnostics.sse <= 1e-9);
}

TEST_CASE("two points are interpolated exactly") {
    // 6/3 = 4^0.5, so (1,3), (4,6) pins a=3, b=0.5.
    const DataSet d{{{1, 3}, {4, 6}}};
    const FitResult r = fit_power_law(d);
    CHECK(r.converged);
    CHECK(r.model.a == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(r.model.b == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.diagnostics.sse <= 1e-16);
}

TEST_CASE("negative exponents are recovered") {
    const DataSet d = synthetic(5.0, -0.7);
    const FitResult r = fit_power_law(d);
    CHECK(r.converged);
    CHECK(r.model.a == doctest::Approx(5.0).epsilon(1e-8));
    CHECK(r.model.b == doctest::Approx(-0.7).epsilon(1e-8));
}

TEST_CASE("finite difference jacobian matches analytic derivatives") {
    const DataSet d = uk_tariffs();
    const PowerLaw m{23.3, 0.107};
    const auto jac = finite_diff_jacobian(d, m);
    REQUIRE(jac.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.points[i].x;
        const double da = std::pow(x, m.b);            // df/da
        const double db = m.a * std::pow(x, m.b) * std::log(x);  // df/db
        CHECK(jac[i][0] == doctest::Approx(da).epsilon(1e-6));
        CHECK(jac[i][1] == doctest::Approx(db).epsilon(1e-6));
    }
}

TEST_CASE("finite differences at the identity point and with a forced step") {
    const DataSet one{{{1, 1}, {2, 1}}};
    const auto rows = finite_diff_jacobian(one, PowerLaw{1.0, 0.0});
    CHECK(rows[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rows[0][1] == doctest::Approx(0.0).epsilon(1e-6));

    // Clamping both step bounds to 0.1 forces that exact relative step, so
    // the result must equal a hand-rolled forward difference.
    FitOptions coarse;
    coarse.diff_min_change = 0.1;
    coarse.diff_max_change = 0.1;
    const PowerLaw m{23.3, 0.107};
    const DataSet d{{{100, 40}, {200, 43}}};
    const auto fd = finite_diff_jacobian(d, m, coarse);
    const double ha = 0.1 * std::max(std::fabs(m.a), 1.0);
    const double hb = 0.1 * std::max(std::fabs(m.b), 1.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.points[i].x;
        const double base = m(x);
        const double expect_a = (PowerLaw{m.a + ha, m.b}(x) - base) / ha;
        const double expect_b = (PowerLaw{m.a, m.b + hb}(x) - base) / hb;
        CHECK(fd[i][0] == doctest::Approx(expect_a).epsilon(1e-12));
        CHECK(fd[i][1] == doctest::Approx(expect_b).epsilon(1e-12));
    }
}

TEST_CASE("tariff fit beats the exhaustive grid") {
    const DataSet d = uk_tariffs();
    const FitResult r = fit_power_law(d);
    CHECK(r.converged);
    CHECK(r.iterations <= 400);
    CHECK(r.model.a == doctest::Approx(23.299376).epsilon(1e-4));
    CHECK(r.model.b == doctest::Approx(0.107281).epsilon(1e-4));
    CHECK(r.diagnostics.sse == doctest::Approx(159.041872).epsilon(1e-6));

    const PowerLaw grid = grid_oracle(d, {5.0, 50.0}, {0.0, 0.5}, 400);
    CHECK(r.diagnostics.sse <= sse_of(d, grid));
}

TEST_CASE("robust LAR fit lowers the absolute-residual total") {
    const DataSet d = uk_tariffs();
    FitOptions opts;
    opts.robust = RobustMode::lar;
    const FitResult r = fit_power_law(d, opts);
    CHECK(r.converged);
    CHECK(r.iterations <= opts.max_iter);
    const double lar_total = abs_res_of(d, r.model);
    const double ls_total = abs_res_of(d, fit_power_law(d).model);
    CHECK(lar_total < ls_total);
    CHECK(lar_total <= 21.5);
}

TEST_CASE("point order never changes the result") {
    const DataSet d = uk_tariffs();
    DataSet shuffled = d;
    std::mt19937 rng(7);
    for (int round = 0; round < 5; ++round) {
        std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
        for (RobustMode mode : {RobustMode::none, RobustMode::lar}) {
            FitOptions opts;
            opts.robust = mode;
            const FitResult a = fit_power_law(d, opts);
            const FitResult b = fit_power_law(shuffled, opts);
            CHECK(a.model.a == b.model.a);  // bitwise
            CHECK(a.model.b == b.model.b);
            CHECK(a.diagnostics.sse == b.diagnostics.sse);
            CHECK(a.iterations == b.iterations);
            CHECK(a.confidence[0].lower == b.confidence[0].lower);
            CHECK(a.confidence[1].upper == b.confidence[1].upper);
        }
    }
}

TEST_CASE("repeat fits are bitwise identical") {
    const DataSet d = uk_tariffs();
    const FitResult a = fit_power_law(d);
    const FitResult b = fit_power_law(d);
    CHECK(a.model.a == b.model.a);
    CHECK(a.model.b == b.model.b);
    CHECK(a.diagnostics.sse == b.diagnostics.sse);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("scaling the observations rescales only the amplitude") {
    const DataSet d = synthetic(2.1, 0.33);
    DataSet scaled = d;
    const double k = 3.5;
    for (auto& p : scaled.points) p.y *= k;
    const FitResult base = fit_power_law(d);
    const FitResult big = fit_power_law(scaled);
    CHECK(big.model.a == doctest::Approx(k * base.model.a).epsilon(1e-8));
    CHECK(big.model.b == doctest::Approx(base.model.b).epsilon(1e-8));

    // The same equivariance holds at solver tolerance on noisy data, for the
    // plain and the robust objective, with SSE scaling by k^2.
    DataSet uk = uk_tariffs();
    DataSet uk_scaled = uk;
    for (auto& p : uk_scaled.points) p.y *= k;
    for (RobustMode mode : {RobustMode::none, RobustMode::lar}) {
        FitOptions opts;
        opts.robust = mode;
        const FitResult plain = fit_power_law(uk, opts);
        const FitResult grown = fit_power_law(uk_scaled, opts);
        const double tol = mode == RobustMode::none ? 1e-6 : 1e-4;
        CHECK(grown.model.a == doctest::Approx(k * plain.model.a).epsilon(tol));
        CHECK(grown.model.b == doctest::Approx(plain.model.b).epsilon(tol));
        CHECK(grown.diagnostics.sse ==
              doctest::Approx(k * k * plain.diagnostics.sse).epsilon(10 * tol));
    }
}

TEST_CASE("scaling the abscissa folds into the amplitude") {
    const DataSet d = synthetic(2.1, 0.33);
    DataSet scaled = d;
    const double s = 4.0;
    for (auto& p : scaled.points) p.x *= s;
    const FitResult r = fit_power_law(scaled);
    // y = a x^b = (a s^-b) (s x)^b
    CHECK(r.model.b == doctest::Approx(0.33).epsilon(1e-8));
    CHECK(r.model.a == doctest::Approx(2.1 * std::pow(s, -0.33)).epsilon(1e-8));
}

TEST_CASE("grid oracle is exhaustive over its lattice") {
    const DataSet d = synthetic(3.0, 0.3, 9);
    // (3.0, 0.3) lies exactly on this lattice.
    const PowerLaw best = grid_oracle(d, {2.0, 4.0}, {0.1, 0.5}, 101);
    CHECK(best.a == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(best.b == doctest::Approx(0.3).epsilon(1e-12));

    // The oracle value can never beat the dedicated solver by more than the
    // lattice spacing allows; sanity-check the ordering on tariff data.
    const DataSet uk = uk_tariffs();
    const PowerLaw g1 = grid_oracle(uk, {5.0, 50.0}, {0.0, 0.5}, 150);
    const PowerLaw g2 = grid_oracle(uk, {5.0, 50.0}, {0.0, 0.5}, 450);
    CHECK(sse_of(uk, g2) <= sse_of(uk, g1) + 1e-12);
}

TEST_CASE("grid oracle lands within one cell of an off-lattice optimum") {
    const DataSet two{{{1, 3}, {4, 6}}};
    const PowerLaw g = grid_oracle(two, {1.0, 5.0}, {0.0, 1.0}, 1000);
    CHECK(std::fabs(g.a - 3.0) <= 4.0 / 999.0);
    CHECK(std::fabs(g.b - 0.5) <= 1.0 / 999.0);

    DataSet ref;
    for (double x : {10.0, 30.0, 50.0, 100.0, 200.0, 400.0, 600.0, 800.0, 1000.0}) {
        ref.points.push_back({x, 27.13 * std::pow(x, 0.0986)});
    }
    const PowerLaw h = grid_oracle(ref, {20.0, 35.0}, {0.0, 0.2}, 1000);
    CHECK(std::fabs(h.a - 27.13) <= 15.0 / 999.0);
    CHECK(std::fabs(h.b - 0.0986) <= 0.2 / 999.0);
}

TEST_CASE("diagnostics identities") {
    const DataSet d = uk_tariffs();
    const PowerLaw m{27.13, 0.0986};
    const FitDiagnostics g = goodness_of_fit(d, m);

    double mean = 0.0;
    for (const auto& p : d.points) mean += p.y;
    mean /= static_cast<double>(d.size());
    double sst = 0.0;
    for (const auto& p : d.points) sst += (p.y - mean) * (p.y - mean);

    CHECK(g.sse == doctest::Approx(sse_of(d, m)).epsilon(1e-12));
    CHECK(g.sst == doctest::Approx(sst).epsilon(1e-12));
    CHECK(g.dfe == 7);
    CHECK(g.n_coeff == 2);
    REQUIRE(g.r_square.has_value());
    CHECK(*g.r_square == doctest::Approx(1.0 - g.sse / sst).epsilon(1e-12));
    REQUIRE(g.adj_r_square.has_value());
    CHECK(*g.adj_r_square ==
          doctest::Approx(1.0 - (1.0 - *g.r_square) * 8.0 / 7.0).epsilon(1e-12));
    REQUIRE(g.rmse.has_value());
    CHECK(*g.rmse == doctest::Approx(std::sqrt(g.sse / 7.0)).epsilon(1e-12));
}

TEST_CASE("summary statistics reassemble the published fit report") {
    // SSE 38.4806 with R-square 0.9589 on 9 points implies the rest of the
    // report: DFE 7, adjusted R-square 0.9530, RMSE 2.3446.
    const double sse = 38.4806;
    const double sst = sse / (1.0 - 0.9589);
    const FitDiagnostics g = diagnostics_from_sums(sse, sst, 9);
    CHECK(g.dfe == 7);
    REQUIRE(g.r_square.has_value());
    CHECK(*g.r_square == doctest::Approx(0.9589).epsilon(1e-12));
    REQUIRE(g.adj_r_square.has_value());
    CHECK(*g.adj_r_square == doctest::Approx(0.9530).epsilon(2e-4));
    REQUIRE(g.rmse.has_value());
    CHECK(*g.rmse == doctest::Approx(2.3446).epsilon(1e-4));
}

TEST_CASE("degenerate diagnostics stay absent instead of dividing by zero") {
    const DataSet two{{{1, 3}, {2, 5}}};
    const FitResult r = fit_power_law(two);
    CHECK(r.diagnostics.dfe == 0);
    CHECK_FALSE(r.diagnostics.rmse.has_value());
    CHECK_FALSE(r.diagnostics.adj_r_square.has_value());
    CHECK(r.confidence[0].degenerate);
    CHECK(r.confidence[1].degenerate);

    const DataSet flat{{{1, 4}, {2, 4}, {3, 4}}};
    const FitResult f = fit_power_law(flat);
    CHECK(f.model.a == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(f.model.b == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_FALSE(f.diagnostics.r_square.has_value());  // zero variance
}

TEST_CASE("confidence bounds match an analytic-jacobian oracle") {
    const DataSet d = uk_tariffs();
    const FitResult r = fit_power_law(d);
    REQUIRE_FALSE(r.confidence[0].degenerate);

    // Oracle: exact derivatives, normal-equation inverse, and the published
    // two-sided 97.5% t critical value for 7 degrees of freedom.
    double jtj[2][2] = {{0, 0}, {0, 0}};
    for (const auto& p : d.points) {
        const double da = std::pow(p.x, r.model.b);
        const double db = r.model.a * da * std::log(p.x);
        jtj[0][0] += da * da;
        jtj[0][1] += da * db;
        jtj[1][1] += db * db;
    }
    const double det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[0][1];
    const double s2 = r.diagnostics.sse / 7.0;
    const double se_a = std::sqrt(s2 * jtj[1][1] / det);
    const double se_b = std::sqrt(s2 * jtj[0][0] / det);
    const double tcrit = 2.3646242515927853;

    CHECK(r.confidence[0].lower == doctest::Approx(r.model.a - tcrit * se_a).epsilon(1e-5));
    CHECK(r.confidence[0].upper == doctest::Approx(r.model.a + tcrit * se_a).epsilon(1e-5));
    CHECK(r.confidence[1].lower == doctest::Approx(r.model.b - tcrit * se_b).epsilon(1e-4));
    CHECK(r.confidence[1].upper == doctest::Approx(r.model.b + tcrit * se_b).epsilon(1e-4));

    const auto standalone = confidence_bounds(d, r.model);
    CHECK(standalone[0].lower == doctest::Approx(r.confidence[0].lower).epsilon(1e-9));
    CHECK(standalone[1].upper == doctest::Approx(r.confidence[1].upper).epsilon(1e-9));
}

TEST_CASE("zero residuals give zero-width bounds") {
    const DataSet d = synthetic(2.5, 0.4, 8);
    const auto ci = confidence_bounds(d, PowerLaw{2.5, 0.4});
    REQUIRE_FALSE(ci[0].degenerate);
    CHECK(ci[0].lower == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(ci[0].upper == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(ci[1].lower == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(ci[1].upper == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("bounds at a non-optimal model are finite and bracket it") {
    const auto ci = confidence_bounds(uk_tariffs(), PowerLaw{27.13, 0.0986});
    for (int i = 0; i < 2; ++i) {
        REQUIRE_FALSE(ci[i].degenerate);
        CHECK(std::isfinite(ci[i].lower));
        CHECK(std::isfinite(ci[i].upper));
        CHECK(ci[i].lower < ci[i].upper);
    }
    CHECK(ci[0].lower < 27.13);
    CHECK(ci[0].upper > 27.13);
    CHECK(ci[1].lower < 0.0986);
    CHECK(ci[1].upper > 0.0986);
}

TEST_CASE("iteration and evaluation budgets are honoured") {
    const DataSet d = uk_tariffs();

    FitOptions one;
    one.max_iter = 1;
    const FitResult r1 = fit_power_law(d, one);
    CHECK_FALSE(r1.converged);
    CHECK(r1.termination == Termination::max_iter);
    CHECK(r1.iterations == 1);

    FitOptions tiny;
    tiny.max_fun_evals = 3;  // enough for setup, not for a single step
    const FitResult r2 = fit_power_law(d, tiny);
    CHECK_FALSE(r2.converged);
    CHECK(r2.termination == Termination::max_fun_evals);
    CHECK(r2.iterations == 0);

    FitOptions lar_budget;
    lar_budget.robust = RobustMode::lar;
    const FitResult r3 = fit_power_law(d, lar_budget);
    CHECK(r3.iterations <= lar_budget.max_iter);
}

TEST_CASE("input and option validation") {
    CHECK_THROWS_AS(fit_power_law(DataSet{{{1, 2}}}), std::domain_error);
    CHECK_THROWS_AS(fit_power_law(DataSet{{{0, 2}, {1, 3}}}), std::domain_error);
    CHECK_THROWS_AS(fit_power_law(DataSet{{{-1, 2}, {1, 3}}}), std::domain_error);
    CHECK_THROWS_AS(fit_power_law(DataSet{{{1, 0.0 / 0.0}, {2, 3}}}), std::domain_error);

    FitOptions bad;
    bad.tol_fun = 0.0;
    CHECK_THROWS_AS(fit_power_law(uk_tariffs(), bad), std::domain_error);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(fit_power_law(uk_tariffs(), bad), std::domain_error);
    bad = {};
    bad.diff_min_change = 0.5;  // exceeds diff_max_change
    CHECK_THROWS_AS(fit_power_law(uk_tariffs(), bad), std::domain_error);
    bad = {};
    bad.robust = RobustMode::lar;
    CHECK_THROWS_AS(fit_power_law(DataSet{{{1, 2}, {2, 3}}}, bad), std::domain_error);

    CHECK_THROWS_AS(grid_oracle(uk_tariffs(), {5, 50}, {0, 0.5}, 99), std::domain_error);
    CHECK_THROWS_AS(grid_oracle(uk_tariffs(), {50, 5}, {0, 0.5}, 100), std::domain_error);
    CHECK_THROWS_AS(confidence_bounds(DataSet{{{1, 2}, {2, 3}}}, PowerLaw{1, 1}),
                    std::domain_error);
    CHECK_THROWS_AS(confidence_bounds(uk_tariffs(), PowerLaw{1, 1}, 1.0), std::domain_error);
}

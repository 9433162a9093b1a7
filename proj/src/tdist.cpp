#include "qoecost/tdist.hpp"

#include <cmath>
#include <stdexcept>

namespace qoecost::stats {

namespace {

// Continued fraction for the incomplete beta function, evaluated with the
// modified Lentz algorithm. The first odd coefficient is folded into the
// initial value of d; each loop pass applies one even and one odd term.
double incomplete_beta_cf(double x, double a, double b) {
    constexpr double fpmin = 1e-300;
    constexpr double eps = 1e-15;
    constexpr int max_terms = 200000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_terms; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= eps) break;
    }
    return h;
}

}  // namespace

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0) || !(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("tdist: regularized incomplete beta needs x in [0,1], a > 0, b > 0");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    // The continued fraction converges fastest below the pivot; reflect above it.
    if (x <= (a + 1.0) / (a + b + 2.0)) {
        return front * incomplete_beta_cf(x, a, b) / a;
    }
    return 1.0 - front * incomplete_beta_cf(1.0 - x, b, a) / b;
}

double students_t_cdf(double t, double dof) {
    if (!(dof > 0.0) || !std::isfinite(dof)) {
        throw std::domain_error("tdist: degrees of freedom must be positive");
    }
    if (!std::isfinite(t)) {
        return t > 0.0 ? 1.0 : 0.0;
    }
    const double tail = 0.5 * regularized_incomplete_beta(dof / (dof + t * t), 0.5 * dof, 0.5);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double students_t_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("tdist: quantile probability must lie in (0, 1)");
    }
    if (!(dof > 0.0) || !std::isfinite(dof)) {
        throw std::domain_error("tdist: degrees of freedom must be positive");
    }
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -students_t_quantile(1.0 - p, dof);

    double lo = 0.0;
    double hi = 1.0;
    while (students_t_cdf(hi, dof) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) break;
    }
    // Bisection to an interval half-width of 1e-8.
    while (hi - lo > 2e-8) {
        const double mid = 0.5 * (lo + hi);
        if (students_t_cdf(mid, dof) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace qoecost::stats

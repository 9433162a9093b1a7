#ifndef QOECOST_TDIST_HPP
#define QOECOST_TDIST_HPP

namespace qoecost::stats {

double log_beta(double a, double b);

/// Regularized incomplete beta function I_x(a, b), evaluated with the Lentz
/// continued-fraction expansion. Requires x in [0, 1] and a, b > 0.
double regularized_incomplete_beta(double x, double a, double b);

/// CDF of Student's t distribution with `dof` degrees of freedom.
double students_t_cdf(double t, double dof);

/// Quantile of Student's t distribution, computed by bisection on the CDF to
/// an interval half-width of 1e-8. Requires p in (0, 1) and dof > 0.
double students_t_quantile(double p, double dof);

}  // namespace qoecost::stats

#endif

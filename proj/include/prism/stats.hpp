#pragma once

namespace prism::stats {

double normal_cdf(double x);

/// Inverse standard normal CDF. Rational approximation refined by one Halley step;
/// absolute error well below 1e-9 on (0, 1). Throws Error{InvalidConfig} outside (0, 1).
double normal_quantile(double p);

/// Two-sided critical value z such that P(|Z| > z) = alpha.
double two_sided_z(double alpha);

/// Regularised incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// P(|T| > |t|), computed from the tail directly so tiny p-values keep their precision.
double student_t_two_sided_p(double t, double dof);

/// P(|Z| > |z|).
double normal_two_sided_p(double z);

} // namespace prism::stats

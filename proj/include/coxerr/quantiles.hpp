#pragma once

namespace coxerr {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi2_cdf(double x, int dof);
/// Upper-alpha quantile: chi2_cdf(q) = 1 - alpha.
double chi2_upper_quantile(double alpha, int dof);

double normal_cdf(double x);
/// Upper-alpha quantile of N(0,1): 1 - normal_cdf(z) = alpha.
double normal_upper_quantile(double alpha);

}  // namespace coxerr

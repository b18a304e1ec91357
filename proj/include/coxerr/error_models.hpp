#pragma once

#include <Eigen/Dense>

namespace coxerr {

enum class ErrorFamily { None, BoundedUniform, Gaussian, ShiftedPoisson };

/// Known law of the additive measurement error U in W = X + U.
///
/// Components are independent and mean zero. BoundedUniform uses
/// `params` as the half-widths a_i of U_i ~ Uniform(-a_i, a_i);
/// ShiftedPoisson uses `params` as intensities mu_i of U_i = Pois(mu_i) - mu_i;
/// Gaussian is isotropic N(0, sigma^2 I).
struct ErrorModel {
  ErrorFamily family = ErrorFamily::None;
  int dim = 1;
  double sigma = 0.0;
  Eigen::VectorXd params;

  static ErrorModel none(int dim);
  static ErrorModel uniform(const Eigen::VectorXd& halfwidths);
  static ErrorModel gaussian(int dim, double sigma);
  static ErrorModel poisson(const Eigen::VectorXd& intensities);

  /// Throws InvalidModel when parameters are not strictly positive.
  void validate() const;
};

// log E exp(z'U); finite for every finite z.
double log_mgf(const ErrorModel& model, const Eigen::VectorXd& z);

double mgf(const ErrorModel& model, const Eigen::VectorXd& z);
Eigen::VectorXd mgf_grad(const ErrorModel& model, const Eigen::VectorXd& z);
Eigen::MatrixXd mgf_hess(const ErrorModel& model, const Eigen::VectorXd& z);

/// E[U e^{z'U}] / M_U(z). This ratio stays representable when M_U(z)
/// itself overflows, so the series code works with it directly.
Eigen::VectorXd tilted_mean(const ErrorModel& model, const Eigen::VectorXd& z);

/// E[U U' e^{z'U}] / M_U(z), exactly symmetric.
Eigen::MatrixXd tilted_second_moment(const ErrorModel& model,
                                     const Eigen::VectorXd& z);

/// E ||U||^2 e^{(k+1) beta'U} / M_U((k+1) beta). Zero for ErrorFamily::None.
/// Throws SeriesOverflow when the value is not representable.
double series_growth_coef(const ErrorModel& model, const Eigen::VectorXd& beta,
                          int k);

}  // namespace coxerr

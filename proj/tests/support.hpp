#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "coxerr/simulate.hpp"

namespace coxerr::testing {

/// Hazard a + b t tabulated on G cells of [0, tau].
inline GridFunction linear_hazard(double a, double b, double tau = 1.0, int cells = 100,
                                  double lipschitz = 2.0) {
  Eigen::VectorXd v(cells + 1);
  for (int j = 0; j <= cells; ++j) v[j] = a + b * tau * j / cells;
  return GridFunction::unchecked(tau, v, lipschitz);
}

inline TrueModel default_model(const ErrorModel& error, int cells = 100) {
  Eigen::VectorXd beta0(error.dim);
  for (int i = 0; i < error.dim; ++i) beta0[i] = (i % 2 == 0) ? 0.5 : -0.5;
  return TrueModel{linear_hazard(1.0, 0.5, 1.0, cells), beta0, CovariateLaw::UniformBox, 1.0, error};
}

/// Mean and standard error of a sample accumulated one value at a time.
struct RunningMean {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double se() const { return std::sqrt(m2 / (n - 1.0) / n); }
};

}  // namespace coxerr::testing

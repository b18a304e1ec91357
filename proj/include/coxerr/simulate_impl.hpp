#pragma once

#include <random>

namespace coxerr {

template <class Rng>
Eigen::VectorXd draw_error(const ErrorModel& model, Rng& rng) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.dim);
  switch (model.family) {
    case ErrorFamily::None:
      break;
    case ErrorFamily::Gaussian: {
      std::normal_distribution<double> normal(0.0, model.sigma);
      for (int i = 0; i < model.dim; ++i) u[i] = normal(rng);
      break;
    }
    case ErrorFamily::BoundedUniform:
      for (int i = 0; i < model.dim; ++i) {
        std::uniform_real_distribution<double> unif(-model.params[i], model.params[i]);
        u[i] = unif(rng);
      }
      break;
    case ErrorFamily::ShiftedPoisson:
      for (int i = 0; i < model.dim; ++i) {
        std::poisson_distribution<long> pois(model.params[i]);
        u[i] = static_cast<double>(pois(rng)) - model.params[i];
      }
      break;
  }
  return u;
}

}  // namespace coxerr

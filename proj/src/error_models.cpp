#include "coxerr/error_models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

// Taylor coefficients of log(sinh(x)/x) in powers of x^2. Below |x| = 0.5
// the tail after x^22 is under 1e-17 and the closed forms cancel badly.
constexpr double kSeriesLimit = 0.5;
constexpr double kLogSinhc[] = {
    1.0 / 6.0,          -1.0 / 180.0,           1.0 / 2835.0,
    -1.0 / 37800.0,     1.0 / 467775.0,         -691.0 / 3831077250.0,
    2.0 / 127702575.0,  -3617.0 / 2605132530000.0, 43867.0 / 350813659321125.0,
    -174611.0 / 15313294652906250.0, 155366.0 / 147926426347074375.0};
constexpr int kTerms = sizeof(kLogSinhc) / sizeof(double);

// log(sinh(x)/x)
double log_sinhc(double x) {
  const double ax = std::abs(x);
  if (ax < kSeriesLimit) {
    const double x2 = x * x;
    double acc = 0.0;
    for (int k = kTerms - 1; k >= 0; --k) acc = acc * x2 + kLogSinhc[k];
    return acc * x2;
  }
  // sinh(x) = e^{|x|} (1 - e^{-2|x|}) / 2
  return ax + std::log1p(-std::exp(-2.0 * ax)) - std::log(2.0) - std::log(ax);
}

// d/dx log(sinh(x)/x) = coth(x) - 1/x
double dlog_sinhc(double x) {
  if (std::abs(x) < kSeriesLimit) {
    const double x2 = x * x;
    double acc = 0.0;
    for (int k = kTerms - 1; k >= 0; --k) acc = acc * x2 + 2.0 * (k + 1) * kLogSinhc[k];
    return acc * x;
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

// d2/dx2 log(sinh(x)/x) = 1/x^2 - 1/sinh(x)^2
double d2log_sinhc(double x) {
  const double ax = std::abs(x);
  if (ax < kSeriesLimit) {
    const double x2 = x * x;
    double acc = 0.0;
    for (int k = kTerms - 1; k >= 0; --k) acc = acc * x2 + (2.0 * k + 2) * (2.0 * k + 1) * kLogSinhc[k];
    return acc;
  }
  if (ax > 350.0) return 1.0 / (x * x);
  const double s = std::sinh(x);
  return 1.0 / (x * x) - 1.0 / (s * s);
}

void check_dim(const ErrorModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.dim) {
    throw Error(ErrorCode::InvalidArgument,
                "error model dimension " + std::to_string(model.dim) +
                    " does not match argument of size " +
                    std::to_string(z.size()));
  }
}

}  // namespace

ErrorModel ErrorModel::none(int dim) {
  ErrorModel m;
  m.family = ErrorFamily::None;
  m.dim = dim;
  m.params = Eigen::VectorXd::Zero(dim);
  return m;
}

ErrorModel ErrorModel::uniform(const Eigen::VectorXd& halfwidths) {
  ErrorModel m;
  m.family = ErrorFamily::BoundedUniform;
  m.dim = static_cast<int>(halfwidths.size());
  m.params = halfwidths;
  m.validate();
  return m;
}

ErrorModel ErrorModel::gaussian(int dim, double sigma) {
  ErrorModel m;
  m.family = ErrorFamily::Gaussian;
  m.dim = dim;
  m.sigma = sigma;
  m.params = Eigen::VectorXd::Zero(dim);
  m.validate();
  return m;
}

ErrorModel ErrorModel::poisson(const Eigen::VectorXd& intensities) {
  ErrorModel m;
  m.family = ErrorFamily::ShiftedPoisson;
  m.dim = static_cast<int>(intensities.size());
  m.params = intensities;
  m.validate();
  return m;
}

void ErrorModel::validate() const {
  if (dim < 1) throw Error(ErrorCode::InvalidModel, "error dimension must be >= 1");
  switch (family) {
    case ErrorFamily::None:
      return;
    case ErrorFamily::Gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidModel, "gaussian sigma must be > 0");
      return;
    case ErrorFamily::BoundedUniform:
    case ErrorFamily::ShiftedPoisson:
      if (params.size() != dim)
        throw Error(ErrorCode::InvalidModel, "error parameter count != dimension");
      for (Eigen::Index i = 0; i < params.size(); ++i) {
        if (!(params[i] > 0.0) || !std::isfinite(params[i]))
          throw Error(ErrorCode::InvalidModel, "error parameters must be > 0");
      }
      return;
  }
}

double log_mgf(const ErrorModel& model, const Eigen::VectorXd& z) {
  check_dim(model, z);
  switch (model.family) {
    case ErrorFamily::None:
      return 0.0;
    case ErrorFamily::Gaussian:
      return 0.5 * model.sigma * model.sigma * z.squaredNorm();
    case ErrorFamily::ShiftedPoisson: {
      double acc = 0.0;
      for (int i = 0; i < model.dim; ++i) {
        const double mu = model.params[i];
        acc += mu * (std::expm1(z[i]) - z[i]);
      }
      return acc;
    }
    case ErrorFamily::BoundedUniform: {
      double acc = 0.0;
      for (int i = 0; i < model.dim; ++i) acc += log_sinhc(model.params[i] * z[i]);
      return acc;
    }
  }
  return 0.0;
}

double mgf(const ErrorModel& model, const Eigen::VectorXd& z) {
  if (model.family == ErrorFamily::None) {
    check_dim(model, z);
    return 1.0;
  }
  return std::exp(log_mgf(model, z));
}

Eigen::VectorXd tilted_mean(const ErrorModel& model, const Eigen::VectorXd& z) {
  check_dim(model, z);
  const int m = model.dim;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  switch (model.family) {
    case ErrorFamily::None:
      break;
    case ErrorFamily::Gaussian:
      g = model.sigma * model.sigma * z;
      break;
    case ErrorFamily::ShiftedPoisson:
      for (int i = 0; i < m; ++i) g[i] = model.params[i] * std::expm1(z[i]);
      break;
    case ErrorFamily::BoundedUniform:
      for (int i = 0; i < m; ++i) {
        const double a = model.params[i];
        g[i] = a * dlog_sinhc(a * z[i]);
      }
      break;
  }
  return g;
}

Eigen::MatrixXd tilted_second_moment(const ErrorModel& model,
                                     const Eigen::VectorXd& z) {
  check_dim(model, z);
  const int m = model.dim;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  switch (model.family) {
    case ErrorFamily::None:
      return h;
    case ErrorFamily::Gaussian: {
      const double s2 = model.sigma * model.sigma;
      h = s2 * s2 * z * z.transpose();
      h.diagonal().array() += s2;
      break;
    }
    case ErrorFamily::ShiftedPoisson:
    case ErrorFamily::BoundedUniform: {
      // Independent components: off-diagonal entries are products of
      // tilted means, diagonal entries are per-component second moments.
      const Eigen::VectorXd g = tilted_mean(model, z);
      h = g * g.transpose();
      for (int i = 0; i < m; ++i) {
        const double p = model.params[i];
        if (model.family == ErrorFamily::ShiftedPoisson) {
          h(i, i) = g[i] * g[i] + p * std::exp(z[i]);
        } else {
          h(i, i) = g[i] * g[i] + p * p * d2log_sinhc(p * z[i]);
        }
      }
      break;
    }
  }
  // Exact symmetry regardless of rounding in the outer product.
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd mgf_grad(const ErrorModel& model, const Eigen::VectorXd& z) {
  return mgf(model, z) * tilted_mean(model, z);
}

Eigen::MatrixXd mgf_hess(const ErrorModel& model, const Eigen::VectorXd& z) {
  return mgf(model, z) * tilted_second_moment(model, z);
}

double series_growth_coef(const ErrorModel& model, const Eigen::VectorXd& beta,
                          int k) {
  check_dim(model, beta);
  if (model.family == ErrorFamily::None) return 0.0;
  const double scale = static_cast<double>(k + 1);
  if (model.family == ErrorFamily::ShiftedPoisson &&
      scale * beta.cwiseAbs().maxCoeff() > 700.0) {
    throw Error(ErrorCode::SeriesOverflow,
                "shifted Poisson tilt exp((k+1) beta_i) exceeds double range at k=" +
                    std::to_string(k));
  }
  const double value = tilted_second_moment(model, scale * beta).trace();
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::SeriesOverflow,
                "series growth coefficient not representable at k=" + std::to_string(k));
  }
  return value;
}

}  // namespace coxerr

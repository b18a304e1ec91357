#include "coxerr/hazard_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coxerr/error.hpp"

namespace coxerr {

GridFunction::GridFunction(double tau, Eigen::VectorXd values, double lipschitz)
    : tau_(tau), lipschitz_(lipschitz), values_(std::move(values)) {
  if (!(tau_ > 0.0) || !std::isfinite(tau_))
    throw Error(ErrorCode::InvalidArgument, "grid function needs tau > 0");
  if (values_.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "grid function needs at least one cell");
  if (!values_.allFinite())
    throw Error(ErrorCode::InvalidArgument, "grid function values must be finite");
  const double h = step();
  prefix_.resize(values_.size());
  prefix_[0] = 0.0;
  for (Eigen::Index j = 1; j < values_.size(); ++j)
    prefix_[j] = prefix_[j - 1] + 0.5 * h * (values_[j - 1] + values_[j]);
}

GridFunction GridFunction::make(double tau, Eigen::VectorXd values, double lipschitz) {
  if (!(lipschitz > 0.0))
    throw Error(ErrorCode::InvalidArgument, "Lipschitz constant must be > 0");
  GridFunction f(tau, std::move(values), lipschitz);
  if (!f.in_cone())
    throw Error(ErrorCode::InvalidArgument,
                "values violate nonnegativity or the Lipschitz bound");
  return f;
}

GridFunction GridFunction::unchecked(double tau, Eigen::VectorXd values,
                                     double lipschitz) {
  return GridFunction(tau, std::move(values), lipschitz);
}

bool GridFunction::in_cone(double tol) const {
  if (values_.minCoeff() < -tol) return false;
  const double bound = lipschitz_ * step();
  for (Eigen::Index j = 0; j + 1 < values_.size(); ++j) {
    if (std::abs(values_[j + 1] - values_[j]) > bound + tol) return false;
  }
  return true;
}

std::pair<int, double> GridFunction::locate(double t) const {
  if (!(t >= 0.0 && t <= tau_))
    throw Error(ErrorCode::OutOfDomain,
                "t = " + std::to_string(t) + " outside [0, " + std::to_string(tau_) + "]");
  const int g = cells();
  const double x = t / step();
  int j = static_cast<int>(std::floor(x));
  if (j >= g) return {g - 1, 1.0};
  return {j, std::clamp(x - j, 0.0, 1.0)};
}

double GridFunction::evaluate(double t) const {
  const auto [j, s] = locate(t);
  return (1.0 - s) * values_[j] + s * values_[j + 1];
}

double GridFunction::cumulative(double t) const {
  const auto [j, s] = locate(t);
  const double h = step();
  const double v0 = values_[j];
  const double vt = (1.0 - s) * v0 + s * values_[j + 1];
  return prefix_[j] + 0.5 * s * h * (v0 + vt);
}

double evaluate(const GridFunction& f, double t) { return f.evaluate(t); }
double cumulative(const GridFunction& f, double t) { return f.cumulative(t); }
double min_value(const GridFunction& f) { return f.values().minCoeff(); }

GridFunction project(const Eigen::VectorXd& raw, double tau, double lipschitz,
                     double floor, const ProjectionOptions& options) {
  if (!raw.allFinite())
    throw Error(ErrorCode::InvalidArgument, "projection input must be finite");
  if (!(floor >= 0.0) || !(options.ceiling >= floor))
    throw Error(ErrorCode::InvalidArgument, "projection needs 0 <= floor <= ceiling");
  const Eigen::Index n = raw.size();
  const int g = static_cast<int>(n) - 1;
  const double bound = lipschitz * tau / g;
  const double lo = floor;
  const double hi = options.ceiling;

  Eigen::VectorXd x = raw;
  // Dykstra increments: one full vector for the box, a pair per slab.
  Eigen::VectorXd box_inc = Eigen::VectorXd::Zero(n);
  Eigen::MatrixX2d slab_inc = Eigen::MatrixX2d::Zero(g, 2);

  auto violation = [&](const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      worst = std::max({worst, lo - v[j], v[j] - hi});
    for (Eigen::Index j = 0; j < g; ++j)
      worst = std::max(worst, std::abs(v[j + 1] - v[j]) - bound);
    return worst;
  };

  auto slab_step = [&](int j) {
    const double y0 = x[j] + slab_inc(j, 0);
    const double y1 = x[j + 1] + slab_inc(j, 1);
    double p0 = y0;
    double p1 = y1;
    const double d = y1 - y0;
    if (std::abs(d) > bound) {
      const double shift = 0.5 * (std::abs(d) - bound) * (d > 0 ? 1.0 : -1.0);
      p0 = y0 + shift;
      p1 = y1 - shift;
    }
    slab_inc(j, 0) = y0 - p0;
    slab_inc(j, 1) = y1 - p1;
    x[j] = p0;
    x[j + 1] = p1;
  };

  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    const Eigen::VectorXd before = x;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double y = x[j] + box_inc[j];
      const double p = std::clamp(y, lo, hi);
      box_inc[j] = y - p;
      x[j] = p;
    }
    for (int j = 0; j < g; j += 2) slab_step(j);
    for (int j = 1; j < g; j += 2) slab_step(j);
    if ((x - before).cwiseAbs().maxCoeff() < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged && violation(x) > 1e-6) {
    throw Error(ErrorCode::NonConvergence,
                "Dykstra projection did not converge within " +
                    std::to_string(options.max_sweeps) + " sweeps");
  }

  // Remove the residual infeasibility left by the stopping rule.
  for (Eigen::Index j = 0; j < n; ++j) x[j] = std::clamp(x[j], lo, hi);
  for (Eigen::Index j = 0; j < g; ++j)
    x[j + 1] = std::clamp(x[j + 1], std::max(lo, x[j] - bound), std::min(hi, x[j] + bound));
  return GridFunction::unchecked(tau, std::move(x), lipschitz);
}

}  // namespace coxerr

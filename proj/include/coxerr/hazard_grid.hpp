#pragma once

#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace coxerr {

/// Piecewise-linear function on [0, tau] given by its values at the
/// equispaced nodes t_j = j tau / G. Members of the Lipschitz cone
/// (nonnegative, slope bounded by `lipschitz`) are built through `make`,
/// which validates both constraint families. `unchecked` admits arbitrary
/// tables (weights, tabulated plug-ins) that share the same grid.
class GridFunction {
 public:
  GridFunction() = default;

  static GridFunction make(double tau, Eigen::VectorXd values, double lipschitz);
  static GridFunction unchecked(double tau, Eigen::VectorXd values,
                                double lipschitz = std::numeric_limits<double>::infinity());

  double tau() const { return tau_; }
  double lipschitz() const { return lipschitz_; }
  int cells() const { return static_cast<int>(values_.size()) - 1; }
  double step() const { return tau_ / cells(); }
  double node(int j) const { return tau_ * j / cells(); }
  const Eigen::VectorXd& values() const { return values_; }

  /// Cell index j and local coordinate s in [0,1] with t = t_j + s h.
  std::pair<int, double> locate(double t) const;

  double evaluate(double t) const;
  double cumulative(double t) const;

  bool in_cone(double tol = 1e-12) const;

 private:
  GridFunction(double tau, Eigen::VectorXd values, double lipschitz);

  double tau_ = 1.0;
  double lipschitz_ = 1.0;
  Eigen::VectorXd values_;
  Eigen::VectorXd prefix_;  // integral from 0 to each node
};

double evaluate(const GridFunction& f, double t);
double cumulative(const GridFunction& f, double t);
double min_value(const GridFunction& f);

struct ProjectionOptions {
  double ceiling = std::numeric_limits<double>::infinity();
  double tolerance = 1e-10;
  int max_sweeps = 10000;
};

/// Euclidean projection of `raw` onto
///   { v : floor <= v_j <= ceiling, |v_{j+1} - v_j| <= L tau / G }
/// by Dykstra's alternating projections. Throws NonConvergence when the
/// sweep cap is hit with a constraint violation above 1e-6.
GridFunction project(const Eigen::VectorXd& raw, double tau, double lipschitz,
                     double floor, const ProjectionOptions& options = {});

}  // namespace coxerr

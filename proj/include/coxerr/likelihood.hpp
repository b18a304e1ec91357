#pragma once

#include <vector>

#include <Eigen/Dense>

#include "coxerr/error_models.hpp"
#include "coxerr/hazard_grid.hpp"
#include "coxerr/simulate.hpp"

namespace coxerr {

/// Compact parameter set for beta: a coordinate box with nonempty interior.
struct BetaBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BetaBox symmetric(int dim, double radius);
  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& beta) const;
  void validate() const;
};

struct LikelihoodContext {
  LikelihoodContext(const Dataset& data, ErrorModel error, BetaBox box);

  const Dataset* dataset;
  ErrorModel error;
  BetaBox box;
};

/// One corrected partial log-likelihood term
///   delta (log lambda(Y) + beta'W) - exp(beta'W) / M_U(beta) * Lambda(Y).
/// Returns -infinity when delta = 1 and lambda(Y) <= 0.
double q_single(const Record& rec, const GridFunction& lambda,
                const Eigen::VectorXd& beta, const ErrorModel& error);

double objective(const LikelihoodContext& ctx, const GridFunction& lambda,
                 const Eigen::VectorXd& beta);

/// Mean over records of dq/dbeta.
Eigen::VectorXd grad_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                          const Eigen::VectorXd& beta);

Eigen::MatrixXd hess_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                          const Eigen::VectorXd& beta);

/// Derivative of the objective along each hat basis function.
Eigen::VectorXd grad_lambda_nodes(const LikelihoodContext& ctx,
                                  const GridFunction& lambda,
                                  const Eigen::VectorXd& beta);

/// Integrals over [0, y] of every hat basis function of a grid with
/// `cells` cells on [0, tau], added into `out` with weight `scale`.
void accumulate_hat_integrals(double tau, int cells, double y, double scale,
                              Eigen::VectorXd& out);

/// The objective restricted to lambda for a fixed beta, as a function of
/// the node values v:
///   F(v) = (1/n) sum_events log(l_i'v) - weights'v + constant.
/// Each l_i has two nonzero entries (the cell holding Y_i).
class HazardSection {
 public:
  HazardSection(const LikelihoodContext& ctx, const Eigen::VectorXd& beta,
                double tau, int cells);

  double value(const Eigen::VectorXd& v) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& v) const;
  /// Adds `scale` times the negated Hessian, which is tridiagonal, into
  /// its diagonal and first off-diagonal.
  void add_curvature(const Eigen::VectorXd& v, double scale, Eigen::VectorXd& diag,
                     Eigen::VectorXd& off) const;
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  struct Event {
    int cell;
    double s;
  };
  std::vector<Event> events_;
  Eigen::VectorXd weights_;
  double constant_ = 0.0;
  double inv_n_ = 0.0;
};

}  // namespace coxerr

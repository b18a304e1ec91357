#pragma once

#include <vector>

#include <Eigen/Dense>

#include "coxerr/hazard_grid.hpp"
#include "coxerr/likelihood.hpp"

namespace coxerr {

struct FitConfig {
  int grid = 100;
  double lipschitz = 2.0;
  double radius = 15.0;    // sup-norm bound R on lambda
  double epsilon_n = 1e-6; // near-sup tolerance of the corrected estimator
  int max_outer_iters = 200;
  int beta_restarts = 5;
  double convergence_tol = 1e-6;
  int max_lambda_iters = 20000;

  void validate() const;
};

enum class FitStage { Corrected, Modified };

struct FitDiagnostics {
  int outer_iterations = 0;
  int lambda_iterations = 0;
  double lambda_certificate = 0.0;  // projected-gradient norm at exit
  double beta_gradient_norm = 0.0;  // projected beta gradient at exit
  double floor = 0.0;
  std::vector<double> objective_trace;  // after each outer sweep
};

struct FitResult {
  GridFunction lambda_hat;
  Eigen::VectorXd beta_hat;
  double objective_value = 0.0;
  FitStage stage = FitStage::Corrected;
  FitDiagnostics diagnostics;
};

/// Near-maximiser of the corrected objective over the Lipschitz cone
/// intersected with the sup-norm ball of radius R, times the beta box.
FitResult fit_corrected(const LikelihoodContext& ctx, const FitConfig& cfg);

/// Refit on the set where min lambda >= min(first.lambda_hat) / 2; returns
/// `first` unchanged when that minimum is zero.
FitResult fit_modified(const LikelihoodContext& ctx, const FitConfig& cfg,
                       const FitResult& first);

/// Both stages in sequence.
struct FitPair {
  FitResult corrected;
  FitResult modified;
};
FitPair fit(const LikelihoodContext& ctx, const FitConfig& cfg);

/// Restart points for the beta step: a scrambled-free Sobol sequence
/// mapped into the box, first point skipped.
std::vector<Eigen::VectorXd> sobol_starts(const BetaBox& box, int count);

/// Maximiser of the objective over the box for the hazard held fixed.
/// `starts` are tried in order; ties go to the earliest start.
Eigen::VectorXd maximize_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                              const std::vector<Eigen::VectorXd>& starts, double tol);

/// Maximiser over the hazard for fixed beta (log-barrier Newton on the
/// node values, with a projected-gradient polish).
struct LambdaStep {
  GridFunction lambda;
  int iterations = 0;
  double certificate = 0.0;
};
LambdaStep maximize_lambda(const LikelihoodContext& ctx, const Eigen::VectorXd& beta,
                           const GridFunction& start, double floor, const FitConfig& cfg);

}  // namespace coxerr

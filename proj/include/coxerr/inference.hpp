#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "coxerr/deconvolution.hpp"
#include "coxerr/estimator.hpp"
#include "coxerr/kaplan_meier.hpp"

namespace coxerr {

/// Continuous piecewise-linear function on sorted knots, zero outside
/// [knots.front(), knots.back()].
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> knots, std::vector<double> values);

  /// Tent of the given height on [lo, hi], peaking at the midpoint.
  static PiecewiseLinear tent(double lo, double hi, double height = 1.0);

  double operator()(double u) const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double support_end() const { return knots_.empty() ? 0.0 : knots_.back(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Calls visit(u, weight) at three-point Gauss-Legendre nodes on every piece
/// of [lo, hi] cut at `breaks` (sorted). Exact for piecewise quintics.
template <class Visit>
void for_each_gauss_point(const std::vector<double>& breaks, double lo, double hi, Visit&& visit);

/// Fitted plug-ins shared by all inference routines. Every estimated curve
/// (b, a, p, K = lambda/b, TK) is the linear interpolant of its values at
/// the hazard grid nodes, so integrals against the step function G_C are
/// computed exactly.
struct PluginTables {
  PluginContext ctx;
  AbpTable abp;
  Eigen::VectorXd k_nodes;
  std::vector<Eigen::MatrixXd> tk_nodes;
  StepSurvival gc;
  double y_max = 0.0;
  std::vector<double> breaks;  // grid nodes and KM jumps in [0, y_max], with y_max
  double m_beta = 1.0;         // M_U(beta_hat)
  Eigen::VectorXd tilt_beta;   // E[U e^{beta'U}] / M_U(beta_hat)

  double b_at(double u) const;
  Eigen::VectorXd a_at(double u) const;
  double k_at(double u) const;
  Eigen::MatrixXd tk_at(double u) const;
  Eigen::MatrixXd p_at(double u) const;

  /// Integral over [0, y] of a(u) K(u).
  Eigen::VectorXd ak_integral(double y) const;

  std::vector<Eigen::VectorXd> ak_prefix;  // at each break
};

PluginTables build_plugins(const FitResult& fit, const Dataset& data, const ErrorModel& error,
                           const SeriesPolicy& policy);

struct InferenceOptions {
  /// Multiplier on the sample second moments in the variance estimators.
  double variance_scale = 1.0;
  double max_condition = 1e12;
  double residual_tol = 1e-8;
  double zero_variance = 1e-14;

  void validate() const;
};

/// Integral of TK G_C over [0, Y_(n)], symmetrized.
Eigen::MatrixXd m_hat(const PluginTables& pt);

/// Integral of lambda p G_C over [0, Y_(n)], symmetrized.
Eigen::MatrixXd a_mat_hat(const PluginTables& pt);

/// Estimated influence term of one record for the beta score.
Eigen::VectorXd zeta_hat(const Record& rec, const PluginTables& pt);

struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;  // inverse sandwich
  double radius2 = 0.0;   // chi-square quantile / n

  bool contains(const Eigen::VectorXd& z) const;
};

struct BetaInference {
  Eigen::MatrixXd M_hat;
  Eigen::MatrixXd Sigma_hat;
  Eigen::MatrixXd sandwich;
  double alpha = 0.05;
  double quantile = 0.0;
  Ellipsoid ellipsoid;
};

BetaInference beta_confidence(const FitResult& fit, const PluginTables& pt, double alpha,
                              const InferenceOptions& opts = {});

/// Solution of the degenerate-kernel Fredholm equation
///   phi(u) / K(u) - a(u)' A^{-1} m(phi) = f(u) / G_C(u)
/// written as phi = K (f / G_C + a' A^{-1} c) with c = m(phi).
struct FredholmSolution {
  Eigen::MatrixXd A_hat;
  Eigen::VectorXd c;          // m-hat of the solution
  Eigen::VectorXd a_inv_c;    // A^{-1} c
  Eigen::VectorXd phi_beta;   // -A^{-1} c
  std::vector<double> times;  // grid nodes
  Eigen::VectorXd phi_nodes;  // phi at the grid nodes
  double residual = 0.0;
  double condition = 0.0;

  double phi(double u, const PiecewiseLinear& f, const PluginTables& pt) const;
};

FredholmSolution fredholm_solve(const PiecewiseLinear& f, const PluginTables& pt,
                                const InferenceOptions& opts = {});

/// Integral of lambda f over the support of f.
double functional_value(const GridFunction& lambda, const PiecewiseLinear& f);

struct FunctionalInference {
  double estimate = 0.0;
  double sigma2_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double alpha = 0.05;
  double z = 0.0;
  double m_norm = 0.0;  // |m-hat(phi)|, which must be nonzero for a valid interval
  FredholmSolution solution;

  bool contains(double v) const { return lo <= v && v <= hi; }
};

FunctionalInference functional_interval(const FitResult& fit, const PiecewiseLinear& f,
                                        const PluginTables& pt, double alpha,
                                        const InferenceOptions& opts = {});

// ---------------------------------------------------------------------------

namespace detail {
inline constexpr double kGaussNode = 0.7745966692414834;  // sqrt(3/5)
inline constexpr double kGaussOuter = 5.0 / 18.0;
inline constexpr double kGaussInner = 8.0 / 18.0;
}  // namespace detail

template <class Visit>
void for_each_gauss_point(const std::vector<double>& breaks, double lo, double hi,
                          Visit&& visit) {
  if (!(hi > lo)) return;
  double left = lo;
  auto it = std::upper_bound(breaks.begin(), breaks.end(), lo);
  while (left < hi) {
    const double right = (it == breaks.end() || *it >= hi) ? hi : *it;
    if (it != breaks.end()) ++it;
    if (right <= left) continue;
    const double half = 0.5 * (right - left);
    const double mid = 0.5 * (right + left);
    visit(mid - detail::kGaussNode * half, detail::kGaussOuter * 2.0 * half);
    visit(mid, detail::kGaussInner * 2.0 * half);
    visit(mid + detail::kGaussNode * half, detail::kGaussOuter * 2.0 * half);
    left = right;
  }
}

}  // namespace coxerr

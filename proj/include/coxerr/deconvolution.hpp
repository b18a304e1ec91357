#pragma once

#include <vector>

#include <Eigen/Dense>

#include "coxerr/error_models.hpp"
#include "coxerr/hazard_grid.hpp"
#include "coxerr/simulate.hpp"

namespace coxerr {

struct SeriesPolicy {
  int max_terms = 80;
  double tail_tol = 1e-10;

  void validate() const;
};

/// Per-k error moments used by the series, for z_k = (k+1) beta:
/// log M_U(z_k), E[U e^{z_k'U}] / M_U(z_k) and E[UU' e^{z_k'U}] / M_U(z_k).
/// Entries are tabulated up to the policy cap or the first k whose moments
/// overflow, whichever comes first.
class SeriesTable {
 public:
  SeriesTable(const ErrorModel& error, const Eigen::VectorXd& beta, int max_terms);

  int available() const { return static_cast<int>(log_m_.size()); }
  int max_terms() const { return max_terms_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  double log_m(int k) const { return log_m_[static_cast<std::size_t>(k)]; }
  double log_factorial(int k) const { return log_fact_[static_cast<std::size_t>(k)]; }
  const Eigen::VectorXd& tilt_mean(int k) const { return mean_[static_cast<std::size_t>(k)]; }
  const Eigen::MatrixXd& tilt_second(int k) const { return second_[static_cast<std::size_t>(k)]; }

 private:
  Eigen::VectorXd beta_;
  int max_terms_;
  std::vector<double> log_m_;
  std::vector<double> log_fact_;
  std::vector<Eigen::VectorXd> mean_;
  std::vector<Eigen::MatrixXd> second_;
};

/// Truncated deconvolution series at one (W, t).
struct SeriesValue {
  double b = 0.0;
  Eigen::VectorXd a;
  Eigen::MatrixXd p;
  int terms = 0;             // number of terms summed (k = 0 .. terms-1)
  double relative_tail = 0.0;  // bound on the omitted tail / |partial sum|
};

enum class SeriesParts { B, BA, BAP };

/// Sums the series for b, a and p at cumulative hazard `cum_hazard`:
///   B_k = (-1)^k Lambda^k e^{(k+1)beta'W} / (k! M_k)
///   A_k = B_k (W - g_k)
///   P_k = B_k (WW' - W g_k' - g_k W' - H_k + 2 g_k g_k')
/// Stops at the first k where the tail bound falls below
/// tail_tol |partial sum| for every requested part. Throws
/// TruncationFailure when the cap is reached with a relative tail above
/// 1e-6, and SeriesOverflow when the moment table runs out first.
SeriesValue sum_series(const Eigen::VectorXd& w, double cum_hazard, const SeriesTable& table,
                       const SeriesPolicy& policy, SeriesParts parts = SeriesParts::BAP);

/// Fitted quantities the plug-in estimators are built from.
struct PluginContext {
  GridFunction lambda_hat;
  Eigen::VectorXd beta_hat;
  ErrorModel error;
  const Dataset* dataset = nullptr;

  double cum_hazard(double t) const { return lambda_hat.cumulative(t); }
};

double series_b(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                const SeriesPolicy& pol);
Eigen::VectorXd series_a(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                         const SeriesPolicy& pol);
Eigen::MatrixXd series_p(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                         const SeriesPolicy& pol);

/// b-hat, a-hat, p-hat tabulated at the given time points.
struct AbpTable {
  std::vector<double> times;
  Eigen::VectorXd b;
  Eigen::MatrixXd a;               // dim x times
  std::vector<Eigen::MatrixXd> p;  // one dim x dim matrix per time
  int max_terms_used = 0;
  double max_relative_tail = 0.0;
};

AbpTable estimate_abp(const PluginContext& ctx, const SeriesPolicy& pol,
                      const std::vector<double>& times);

/// (p - a a'/b) * lambda_hat at each tabulated time; throws DegenerateB
/// when b <= 1e-12.
std::vector<Eigen::MatrixXd> tk_hat(const PluginContext& ctx, const AbpTable& abp);

/// Time points of the hazard grid.
std::vector<double> grid_times(const GridFunction& f);

}  // namespace coxerr

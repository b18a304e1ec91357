#pragma once

#include <vector>

#include "coxerr/simulate.hpp"

namespace coxerr {

/// Right-continuous step function on [0, tau]: 1 before the first jump,
/// `values[k]` on [jumps[k], jumps[k+1]), and 0 beyond `support_end`.
class StepSurvival {
 public:
  StepSurvival() = default;
  StepSurvival(std::vector<double> jumps, std::vector<double> values, double support_end);

  double operator()(double u) const;

  const std::vector<double>& jumps() const { return jumps_; }
  const std::vector<double>& values() const { return values_; }
  double support_end() const { return support_end_; }

 private:
  std::vector<double> jumps_;
  std::vector<double> values_;
  double support_end_ = 0.0;
};

/// Product-limit estimator of the censor survival function: each censored
/// Y_j contributes the factor N(Y_j) / (N(Y_j) + 1) with N(u) = #{Y_i > u}.
StepSurvival km_censor(const Dataset& data);

}  // namespace coxerr

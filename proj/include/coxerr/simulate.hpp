#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "coxerr/error_models.hpp"
#include "coxerr/hazard_grid.hpp"

namespace coxerr {

enum class CovariateLaw { UniformBox, Gaussian };

struct TrueModel {
  GridFunction lambda0;
  Eigen::VectorXd beta0;
  CovariateLaw covariate_law = CovariateLaw::UniformBox;
  // Half-width c of the box [-c, c]^m, or the standard deviation for Gaussian.
  double covariate_scale = 1.0;
  ErrorModel error;

  int dim() const { return static_cast<int>(beta0.size()); }
  double tau() const { return lambda0.tau(); }

  /// Throws InvalidModel on a zero hazard node, a nonpositive covariate
  /// scale or a dimension mismatch with the error model.
  void validate() const;
};

struct Record {
  double y = 0.0;
  bool delta = false;
  Eigen::VectorXd w;
};

/// Latent quantities kept for oracle tests. `t` is +infinity when the
/// lifetime exceeds tau.
struct HiddenTruth {
  Eigen::VectorXd x;
  double t = 0.0;
  double c = 0.0;
};

struct Dataset {
  std::vector<Record> records;
  std::optional<std::vector<HiddenTruth>> hidden;
  double tau = 1.0;

  std::size_t size() const { return records.size(); }
  int dim() const { return records.empty() ? 0 : static_cast<int>(records.front().w.size()); }
  std::size_t events() const;
  double max_y() const;
};

/// Inverse of the cumulative hazard on [0, tau] by bisection. Requires
/// 0 <= target <= cumulative(lambda, tau).
double inverse_cumulative(const GridFunction& lambda, double target);

Dataset draw_dataset(const TrueModel& model, std::size_t n, std::uint64_t seed);

/// One draw of U from the error family using the given generator.
template <class Rng>
Eigen::VectorXd draw_error(const ErrorModel& model, Rng& rng);

}  // namespace coxerr

#include "coxerr/simulate_impl.hpp"

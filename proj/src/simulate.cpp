#include "coxerr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "coxerr/error.hpp"
#include "coxerr/rng.hpp"

namespace coxerr {

void TrueModel::validate() const {
  if (lambda0.values().size() < 2)
    throw Error(ErrorCode::InvalidModel, "true hazard is empty");
  if (!(min_value(lambda0) > 0.0))
    throw Error(ErrorCode::InvalidModel, "true hazard must be strictly positive at every node");
  if (beta0.size() < 1) throw Error(ErrorCode::InvalidModel, "beta0 is empty");
  if (!(covariate_scale > 0.0))
    throw Error(ErrorCode::InvalidModel, "covariate scale must be > 0");
  if (error.dim != dim())
    throw Error(ErrorCode::InvalidModel, "error dimension does not match beta0");
  error.validate();
}

std::size_t Dataset::events() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const Record& r) { return r.delta; }));
}

double Dataset::max_y() const {
  double m = 0.0;
  for (const auto& r : records) m = std::max(m, r.y);
  return m;
}

double inverse_cumulative(const GridFunction& lambda, double target) {
  const double tau = lambda.tau();
  double lo = 0.0;
  double hi = tau;
  const double tol = 1e-12 * tau;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (lambda.cumulative(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Dataset draw_dataset(const TrueModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  const int m = model.dim();
  const double tau = model.tau();
  const double total = model.lambda0.cumulative(tau);

  Dataset data;
  data.tau = tau;
  data.records.resize(n);
  std::vector<HiddenTruth> hidden(n);

  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = stream(seed, i);
    HiddenTruth& h = hidden[i];
    h.x.resize(m);
    if (model.covariate_law == CovariateLaw::UniformBox) {
      std::uniform_real_distribution<double> unif(-model.covariate_scale, model.covariate_scale);
      for (int k = 0; k < m; ++k) h.x[k] = unif(rng);
    } else {
      std::normal_distribution<double> normal(0.0, model.covariate_scale);
      for (int k = 0; k < m; ++k) h.x[k] = normal(rng);
    }
    std::exponential_distribution<double> expo(1.0);
    const double e = expo(rng);
    const double risk = std::exp(model.beta0.dot(h.x));
    if (e > total * risk) {
      h.t = std::numeric_limits<double>::infinity();
    } else {
      h.t = inverse_cumulative(model.lambda0, e / risk);
    }
    std::uniform_real_distribution<double> censor(0.0, tau);
    h.c = censor(rng);

    Record& r = data.records[i];
    r.delta = h.t <= h.c;
    r.y = r.delta ? h.t : h.c;
    r.w = h.x + draw_error(model.error, rng);
  }
  data.hidden = std::move(hidden);
  return data;
}

}  // namespace coxerr

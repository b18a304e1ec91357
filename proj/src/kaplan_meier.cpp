#include "coxerr/kaplan_meier.hpp"

#include <algorithm>

#include "coxerr/error.hpp"

namespace coxerr {

StepSurvival::StepSurvival(std::vector<double> jumps, std::vector<double> values,
                           double support_end)
    : jumps_(std::move(jumps)), values_(std::move(values)), support_end_(support_end) {}

double StepSurvival::operator()(double u) const {
  if (u > support_end_) return 0.0;
  const auto it = std::upper_bound(jumps_.begin(), jumps_.end(), u);
  if (it == jumps_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
}

StepSurvival km_censor(const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "Kaplan-Meier needs n >= 1");
  std::vector<double> ys;
  ys.reserve(data.size());
  std::vector<double> censored;
  for (const auto& r : data.records) {
    ys.push_back(r.y);
    if (!r.delta) censored.push_back(r.y);
  }
  std::sort(ys.begin(), ys.end());
  std::sort(censored.begin(), censored.end());

  std::vector<double> jumps;
  std::vector<double> values;
  double current = 1.0;
  for (const double y : censored) {
    const auto above = static_cast<double>(ys.end() - std::upper_bound(ys.begin(), ys.end(), y));
    current *= above / (above + 1.0);
    if (!jumps.empty() && jumps.back() == y) {
      values.back() = current;
    } else {
      jumps.push_back(y);
      values.push_back(current);
    }
  }
  return StepSurvival(std::move(jumps), std::move(values), ys.back());
}

}  // namespace coxerr

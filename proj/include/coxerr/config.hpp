#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coxerr/deconvolution.hpp"
#include "coxerr/estimator.hpp"
#include "coxerr/inference.hpp"
#include "coxerr/simulate.hpp"

namespace coxerr {

/// Flat `key = value` text. Blank lines and `#` comments are ignored; keys
/// are dotted names such as `error.family`. Duplicate keys are an error.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  std::optional<std::string> text(const std::string& key) const;
  std::optional<double> real(const std::string& key) const;
  std::optional<long long> integer(const std::string& key) const;
  std::optional<std::vector<double>> list(const std::string& key) const;

  /// Throws Parse naming the first key never read through the accessors.
  void reject_unused() const;

 private:
  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, bool> used_;

  const Entry* find(const std::string& key) const;
};

/// Everything a CLI run needs, validated at load time.
struct RunConfig {
  // True model, used by `simulate`, `coverage` and as a reference in `plot`.
  double tau = 1.0;
  double lambda0_intercept = 1.0;
  double lambda0_slope = 0.5;
  Eigen::VectorXd beta0 = Eigen::Vector2d(0.5, -0.5);
  CovariateLaw covariate_law = CovariateLaw::UniformBox;
  double covariate_scale = 1.0;
  ErrorModel error = ErrorModel::gaussian(2, 0.3);

  FitConfig fit;
  bool radius_set = false;
  // epsilon_n = epsilon_scale * n^(-epsilon_power)
  double epsilon_scale = 1.0;
  double epsilon_power = 1.0;
  BetaBox beta_box = BetaBox::symmetric(2, 3.0);

  SeriesPolicy series;
  InferenceOptions inference;
  double alpha = 0.05;
  double margin = 0.2;  // support of f is [0, (1 - margin) tau]
  double functional_height = 1.0;

  std::uint64_t seed = 1;
  std::size_t n = 1000;
  int replicates = 300;
  int threads = 1;

  int dim() const { return static_cast<int>(beta0.size()); }
  TrueModel true_model() const;
  /// Fit settings with epsilon_n evaluated for a sample of size n.
  FitConfig fit_config(std::size_t sample_size) const;
  PiecewiseLinear weight() const;

  void validate() const;

  static RunConfig from(const ConfigFile& file);
  static RunConfig load(const std::string& path);
};

}  // namespace coxerr

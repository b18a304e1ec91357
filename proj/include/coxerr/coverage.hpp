#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coxerr/config.hpp"
#include "coxerr/error.hpp"

namespace coxerr {

/// Both estimator stages on a dataset with the run's settings.
FitPair fit_dataset(const RunConfig& rc, const Dataset& data);

struct ReplicateOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  std::optional<ErrorCode> failure;
  std::string message;
  bool beta_covered = false;
  bool functional_covered = false;
  Eigen::VectorXd beta_hat;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double min_lambda1 = 0.0;
  double min_lambda2 = 0.0;
  double fredholm_residual = 0.0;
  double series_tail = 0.0;
};

struct CoverageSummary {
  std::vector<ReplicateOutcome> rows;
  double truth = 0.0;  // I_f(lambda0)
  int succeeded = 0;
  double beta_coverage = 0.0;
  double functional_coverage = 0.0;
  double mean_length = 0.0;
  std::map<ErrorCode, int> failures;
};

/// Seed of replicate `index` under the master seed.
std::uint64_t replicate_seed(std::uint64_t master, int index);

/// Simulate, fit, and build both confidence sets for one replicate. Errors
/// are captured in the outcome.
ReplicateOutcome run_replicate(const RunConfig& rc, int index, std::uint64_t master_seed);

/// Runs replicates 0..count-1 on `threads` workers. Results depend only on
/// (config, seed). Throws TooManyFailures once more than 20% fail.
CoverageSummary run_coverage(const RunConfig& rc, int count, std::uint64_t seed, int threads);

void write_coverage_rows(std::ostream& out, const CoverageSummary& s, int dim);
void write_coverage_summary(std::ostream& out, const CoverageSummary& s);

}  // namespace coxerr

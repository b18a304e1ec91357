#include "coxerr/coverage.hpp"

#include <atomic>
#include <ostream>
#include <thread>

#include "coxerr/csv.hpp"
#include "coxerr/rng.hpp"

namespace coxerr {

FitPair fit_dataset(const RunConfig& rc, const Dataset& data) {
  if (data.dim() != rc.dim()) {
    throw Error(ErrorCode::InvalidArgument, "data has " + std::to_string(data.dim()) +
                                                " covariates but the config has " +
                                                std::to_string(rc.dim()));
  }
  const LikelihoodContext ctx(data, rc.error, rc.beta_box);
  return fit(ctx, rc.fit_config(data.size()));
}

std::uint64_t replicate_seed(std::uint64_t master, int index) {
  return stream(master, static_cast<std::uint64_t>(index))();
}

ReplicateOutcome run_replicate(const RunConfig& rc, int index, std::uint64_t master_seed) {
  ReplicateOutcome out;
  out.index = index;
  out.seed = replicate_seed(master_seed, index);
  try {
    const TrueModel model = rc.true_model();
    const Dataset data = draw_dataset(model, rc.n, out.seed);
    const FitPair pair = fit_dataset(rc, data);
    out.min_lambda1 = min_value(pair.corrected.lambda_hat);
    out.min_lambda2 = min_value(pair.modified.lambda_hat);
    out.beta_hat = pair.modified.beta_hat;
    const PluginTables pt = build_plugins(pair.modified, data, rc.error, rc.series);
    out.series_tail = pt.abp.max_relative_tail;
    const BetaInference bi = beta_confidence(pair.modified, pt, rc.alpha, rc.inference);
    out.beta_covered = bi.ellipsoid.contains(model.beta0);
    const PiecewiseLinear f = rc.weight();
    const FunctionalInference fi = functional_interval(pair.modified, f, pt, rc.alpha, rc.inference);
    out.estimate = fi.estimate;
    out.lo = fi.lo;
    out.hi = fi.hi;
    out.fredholm_residual = fi.solution.residual;
    out.functional_covered = fi.contains(functional_value(model.lambda0, f));
  } catch (const Error& e) {
    out.failure = e.code();
    out.message = e.what();
  }
  return out;
}

CoverageSummary run_coverage(const RunConfig& rc, int count, std::uint64_t seed, int threads) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "replicate count must be >= 1");
  if (threads < 1) throw Error(ErrorCode::InvalidArgument, "thread count must be >= 1");
  CoverageSummary s;
  s.truth = functional_value(rc.true_model().lambda0, rc.weight());
  s.rows.resize(static_cast<std::size_t>(count));
  const int limit = count / 5;  // more than 20% failures aborts
  std::atomic<int> next{0};
  std::atomic<int> failed{0};
  const auto worker = [&] {
    for (;;) {
      if (failed.load() > limit) return;
      const int r = next.fetch_add(1);
      if (r >= count) return;
      s.rows[static_cast<std::size_t>(r)] = run_replicate(rc, r, seed);
      if (s.rows[static_cast<std::size_t>(r)].failure) failed.fetch_add(1);
    }
  };
  const int workers = std::min(threads, count);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load() > limit) {
    throw Error(ErrorCode::TooManyFailures,
                "coverage aborted: more than 20% of " + std::to_string(count) + " replicates failed");
  }

  double length = 0.0;
  int beta_hits = 0;
  int func_hits = 0;
  for (const auto& row : s.rows) {
    if (row.failure) {
      ++s.failures[*row.failure];
      continue;
    }
    ++s.succeeded;
    beta_hits += row.beta_covered;
    func_hits += row.functional_covered;
    length += row.hi - row.lo;
  }
  if (s.succeeded > 0) {
    s.beta_coverage = static_cast<double>(beta_hits) / s.succeeded;
    s.functional_coverage = static_cast<double>(func_hits) / s.succeeded;
    s.mean_length = length / s.succeeded;
  }
  return s;
}

void write_coverage_rows(std::ostream& out, const CoverageSummary& s, int dim) {
  out << "replicate,seed,status,beta_covered,functional_covered,estimate,lo,hi,truth,"
         "min_lambda1,min_lambda2,fredholm_residual,series_tail";
  for (int j = 1; j <= dim; ++j) out << ",beta" << j;
  out << '\n';
  for (const auto& row : s.rows) {
    out << row.index << ',' << row.seed << ',' << (row.failure ? to_string(*row.failure) : "ok")
        << ',' << row.beta_covered << ',' << row.functional_covered << ','
        << format_number(row.estimate) << ',' << format_number(row.lo) << ','
        << format_number(row.hi) << ',' << format_number(s.truth) << ','
        << format_number(row.min_lambda1) << ',' << format_number(row.min_lambda2) << ','
        << format_number(row.fredholm_residual) << ',' << format_number(row.series_tail);
    for (int j = 0; j < dim; ++j)
      out << ',' << (row.beta_hat.size() == dim ? format_number(row.beta_hat[j]) : "nan");
    out << '\n';
  }
}

void write_coverage_summary(std::ostream& out, const CoverageSummary& s) {
  out << "replicates = " << s.rows.size() << '\n'
      << "succeeded = " << s.succeeded << '\n'
      << "beta_coverage = " << format_number(s.beta_coverage) << '\n'
      << "functional_coverage = " << format_number(s.functional_coverage) << '\n'
      << "mean_interval_length = " << format_number(s.mean_length) << '\n'
      << "functional_truth = " << format_number(s.truth) << '\n';
  for (const auto& [code, count] : s.failures)
    out << "failures." << to_string(code) << " = " << count << '\n';
}

}  // namespace coxerr

#include "coxerr/deconvolution.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

constexpr double kHardTruncation = 1e-6;

// Running tail estimate for one part of the series. Once term magnitudes
// have passed their peak with nonincreasing ratios, the tail after term k
// is at most t_k * rho / (1 - rho) with rho = t_k / t_{k-1}.
struct TailTracker {
  double previous = -1.0;
  double previous_ratio = std::numeric_limits<double>::infinity();
  double bound = std::numeric_limits<double>::infinity();

  void push(double magnitude, int k) {
    if (previous >= 0.0) {
      if (magnitude == 0.0) {
        bound = 0.0;
      } else if (previous > 0.0) {
        const double ratio = magnitude / previous;
        if (k >= 2 && ratio < 1.0 && ratio <= previous_ratio * (1.0 + 1e-12)) {
          bound = magnitude * ratio / (1.0 - ratio);
        } else {
          bound = std::numeric_limits<double>::infinity();
        }
        previous_ratio = ratio;
      }
    }
    previous = magnitude;
  }

  double relative(double partial_norm) const {
    if (bound == 0.0) return 0.0;
    if (!(partial_norm > 0.0)) return std::numeric_limits<double>::infinity();
    return bound / partial_norm;
  }
};

}  // namespace

void SeriesPolicy::validate() const {
  if (max_terms < 1) throw Error(ErrorCode::InvalidArgument, "series max_terms must be >= 1");
  if (!(tail_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "series tail_tol must be > 0");
}

SeriesTable::SeriesTable(const ErrorModel& error, const Eigen::VectorXd& beta, int max_terms)
    : beta_(beta), max_terms_(max_terms) {
  for (int k = 0; k < max_terms; ++k) {
    const Eigen::VectorXd z = static_cast<double>(k + 1) * beta;
    double lm = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    try {
      lm = log_mgf(error, z);
      g = tilted_mean(error, z);
      h = tilted_second_moment(error, z);
    } catch (const Error&) {
      break;
    }
    if (!std::isfinite(lm) || !g.allFinite() || !h.allFinite()) break;
    log_m_.push_back(lm);
    log_fact_.push_back(std::lgamma(static_cast<double>(k) + 1.0));
    mean_.push_back(std::move(g));
    second_.push_back(std::move(h));
  }
}

SeriesValue sum_series(const Eigen::VectorXd& w, double cum_hazard, const SeriesTable& table,
                       const SeriesPolicy& policy, SeriesParts parts) {
  const auto m = w.size();
  const bool want_a = parts != SeriesParts::B;
  const bool want_p = parts == SeriesParts::BAP;
  SeriesValue out;
  out.a = Eigen::VectorXd::Zero(want_a ? m : 0);
  out.p = Eigen::MatrixXd::Zero(want_p ? m : 0, want_p ? m : 0);
  if (table.available() == 0)
    throw Error(ErrorCode::SeriesOverflow, "error moments overflow already at k = 0");

  const double bw = table.beta().dot(w);
  const double log_cum = cum_hazard > 0.0 ? std::log(cum_hazard) : -std::numeric_limits<double>::infinity();
  TailTracker tail_b, tail_a, tail_p;
  Eigen::VectorXd d(m);
  Eigen::MatrixXd q(want_p ? m : 0, want_p ? m : 0);

  const int cap = std::min(policy.max_terms, table.max_terms());
  int k = 0;
  double relative = std::numeric_limits<double>::infinity();
  for (; k < cap; ++k) {
    if (k >= table.available()) {
      throw Error(ErrorCode::SeriesOverflow,
                  "error moments overflow at k = " + std::to_string(k) +
                      " before the series converged");
    }
    double bk = 0.0;
    if (k == 0 || cum_hazard > 0.0) {
      const double log_mag = (k == 0 ? 0.0 : k * log_cum) + (k + 1) * bw - table.log_factorial(k) - table.log_m(k);
      if (log_mag > 700.0)
        throw Error(ErrorCode::SeriesOverflow,
                    "series term exceeds double range at k = " + std::to_string(k));
      bk = std::exp(log_mag);
      if (k % 2 == 1) bk = -bk;
    }
    const double mag = std::abs(bk);
    out.b += bk;
    tail_b.push(mag, k);
    relative = tail_b.relative(std::abs(out.b));

    if (want_a) {
      const Eigen::VectorXd& g = table.tilt_mean(k);
      d = w - g;
      out.a += bk * d;
      tail_a.push(mag * d.norm(), k);
      relative = std::max(relative, tail_a.relative(out.a.norm()));
      if (want_p) {
        const Eigen::MatrixXd& h = table.tilt_second(k);
        for (Eigen::Index i = 0; i < m; ++i) {
          for (Eigen::Index j = 0; j < m; ++j) {
            q(i, j) = w[i] * w[j] - w[i] * g[j] - g[i] * w[j] - h(i, j) + 2.0 * g[i] * g[j];
          }
        }
        out.p += bk * q;
        tail_p.push(mag * q.norm(), k);
        relative = std::max(relative, tail_p.relative(out.p.norm()));
      }
    }
    if (cum_hazard <= 0.0) {
      // Every term past k = 0 vanishes.
      relative = 0.0;
      ++k;
      break;
    }
    if (relative < policy.tail_tol) {
      ++k;
      break;
    }
  }
  out.terms = k;
  out.relative_tail = relative;
  if (relative >= policy.tail_tol && relative > kHardTruncation) {
    throw Error(ErrorCode::TruncationFailure,
                "series not converged after " + std::to_string(k) +
                    " terms (relative tail bound " + std::to_string(relative) + ")");
  }
  if (want_p) out.p = 0.5 * (out.p + out.p.transpose()).eval();
  return out;
}

namespace {

SeriesValue series_at(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                      const SeriesPolicy& pol, SeriesParts parts) {
  pol.validate();
  const SeriesTable table(ctx.error, ctx.beta_hat, pol.max_terms);
  return sum_series(w, ctx.cum_hazard(t), table, pol, parts);
}

}  // namespace

double series_b(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                const SeriesPolicy& pol) {
  return series_at(w, t, ctx, pol, SeriesParts::B).b;
}

Eigen::VectorXd series_a(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                         const SeriesPolicy& pol) {
  return series_at(w, t, ctx, pol, SeriesParts::BA).a;
}

Eigen::MatrixXd series_p(const Eigen::VectorXd& w, double t, const PluginContext& ctx,
                         const SeriesPolicy& pol) {
  return series_at(w, t, ctx, pol, SeriesParts::BAP).p;
}

std::vector<double> grid_times(const GridFunction& f) {
  std::vector<double> times(static_cast<std::size_t>(f.cells()) + 1);
  for (int j = 0; j <= f.cells(); ++j) times[static_cast<std::size_t>(j)] = f.node(j);
  times.back() = f.tau();
  return times;
}

AbpTable estimate_abp(const PluginContext& ctx, const SeriesPolicy& pol,
                      const std::vector<double>& times) {
  pol.validate();
  if (ctx.dataset == nullptr || ctx.dataset->size() == 0)
    throw Error(ErrorCode::InvalidArgument, "plug-in context needs a nonempty dataset");
  const Dataset& data = *ctx.dataset;
  const int m = data.dim();
  const SeriesTable table(ctx.error, ctx.beta_hat, pol.max_terms);
  const auto nt = static_cast<Eigen::Index>(times.size());
  AbpTable out;
  out.times = times;
  out.b = Eigen::VectorXd::Zero(nt);
  out.a = Eigen::MatrixXd::Zero(m, nt);
  out.p.assign(times.size(), Eigen::MatrixXd::Zero(m, m));
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (Eigen::Index j = 0; j < nt; ++j) {
    const double cum = ctx.cum_hazard(times[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd& pj = out.p[static_cast<std::size_t>(j)];
    for (const Record& r : data.records) {
      const SeriesValue s = sum_series(r.w, cum, table, pol, SeriesParts::BAP);
      out.b[j] += s.b;
      out.a.col(j) += s.a;
      pj += s.p;
      out.max_terms_used = std::max(out.max_terms_used, s.terms);
      out.max_relative_tail = std::max(out.max_relative_tail, s.relative_tail);
    }
    out.b[j] *= inv_n;
    out.a.col(j) *= inv_n;
    pj *= inv_n;
    pj = 0.5 * (pj + pj.transpose()).eval();
  }
  return out;
}

std::vector<Eigen::MatrixXd> tk_hat(const PluginContext& ctx, const AbpTable& abp) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(abp.times.size());
  for (std::size_t j = 0; j < abp.times.size(); ++j) {
    const double b = abp.b[static_cast<Eigen::Index>(j)];
    if (!(b > 1e-12)) {
      throw Error(ErrorCode::DegenerateB,
                  "b-hat = " + std::to_string(b) + " at t = " + std::to_string(abp.times[j]));
    }
    const Eigen::VectorXd a = abp.a.col(static_cast<Eigen::Index>(j));
    Eigen::MatrixXd tk = (abp.p[j] - a * a.transpose() / b) * ctx.lambda_hat.evaluate(abp.times[j]);
    out.push_back(0.5 * (tk + tk.transpose()));
  }
  return out;
}

}  // namespace coxerr

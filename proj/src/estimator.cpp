#include "coxerr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/random/sobol.hpp>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

constexpr double kArmijo = 1e-4;

// Objective as a function of beta with the hazard frozen.
class BetaSection {
 public:
  BetaSection(const LikelihoodContext& ctx, const GridFunction& lambda)
      : error_(ctx.error) {
    const auto& records = ctx.dataset->records;
    const auto n = static_cast<Eigen::Index>(records.size());
    const int m = ctx.dataset->dim();
    w_.resize(n, m);
    cum_.resize(n);
    event_sum_ = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      w_.row(i) = records[i].w.transpose();
      cum_[i] = lambda.cumulative(records[i].y);
      if (records[i].delta) event_sum_ += records[i].w;
    }
    inv_n_ = 1.0 / static_cast<double>(n);
  }

  double value(const Eigen::VectorXd& beta) const {
    const Eigen::ArrayXd c = (w_ * beta).array() - log_mgf(error_, beta);
    return inv_n_ * (event_sum_.dot(beta) - (c.exp() * cum_.array()).sum());
  }

  void derivatives(const Eigen::VectorXd& beta, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const Eigen::VectorXd g = tilted_mean(error_, beta);
    const Eigen::MatrixXd tilt_cov = tilted_second_moment(error_, beta) - g * g.transpose();
    const Eigen::ArrayXd c =
        ((w_ * beta).array() - log_mgf(error_, beta)).exp() * cum_.array();
    const Eigen::MatrixXd centered = w_.rowwise() - g.transpose();
    const double mass = c.sum();
    grad = inv_n_ * (event_sum_ - centered.transpose() * c.matrix());
    hess = inv_n_ * (mass * tilt_cov -
                     centered.transpose() * c.matrix().asDiagonal() * centered);
    hess = 0.5 * (hess + hess.transpose());
  }

 private:
  const ErrorModel& error_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd cum_;
  Eigen::VectorXd event_sum_;
  double inv_n_ = 0.0;
};

// Gradient with components that point out of the box zeroed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& beta,
                                   const BetaBox& box, std::vector<bool>* fixed = nullptr) {
  Eigen::VectorXd pg = grad;
  if (fixed) fixed->assign(static_cast<std::size_t>(grad.size()), false);
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const bool at_lower = beta[i] <= box.lower[i] && grad[i] < 0.0;
    const bool at_upper = beta[i] >= box.upper[i] && grad[i] > 0.0;
    if (at_lower || at_upper) {
      pg[i] = 0.0;
      if (fixed) (*fixed)[static_cast<std::size_t>(i)] = true;
    }
  }
  return pg;
}

// Box-constrained Newton ascent from one start.
Eigen::VectorXd newton_ascent(const BetaSection& section, const BetaBox& box,
                              Eigen::VectorXd beta, double tol) {
  const auto m = beta.size();
  double value = section.value(beta);
  Eigen::VectorXd grad(m);
  Eigen::MatrixXd hess(m, m);
  for (int iter = 0; iter < 200; ++iter) {
    section.derivatives(beta, grad, hess);
    std::vector<bool> fixed;
    const Eigen::VectorXd pg = projected_gradient(grad, beta, box, &fixed);
    if (pg.lpNorm<Eigen::Infinity>() < tol) break;

    // Newton direction on the free coordinates with the curvature made
    // negative definite; falls back to steepest ascent when degenerate.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    const auto k = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd curv(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      rhs[a] = grad[free[a]];
      for (Eigen::Index b = 0; b < k; ++b) curv(a, b) = -hess(free[a], free[b]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(curv);
    Eigen::VectorXd ev = eig.eigenvalues().cwiseAbs();
    const double floor_ev = std::max(1e-10, 1e-8 * ev.maxCoeff());
    ev = ev.cwiseMax(floor_ev);
    const Eigen::VectorXd step_free =
        eig.eigenvectors() * (eig.eigenvectors().transpose() * rhs).cwiseQuotient(ev);
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < k; ++a) dir[free[a]] = step_free[a];

    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = box.clamp(beta + alpha * dir);
      const double trial_value = section.value(trial);
      if (std::isfinite(trial_value) &&
          trial_value >= value + kArmijo * grad.dot(trial - beta)) {
        moved = (trial - beta).lpNorm<Eigen::Infinity>() > 0.0;
        beta = trial;
        value = trial_value;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return beta;
}

}  // namespace

void FitConfig::validate() const {
  if (grid < 1) throw Error(ErrorCode::InvalidArgument, "grid must be >= 1");
  if (!(lipschitz > 0.0)) throw Error(ErrorCode::InvalidArgument, "Lipschitz constant must be > 0");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius R must be > 0");
  if (!(epsilon_n > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon_n must be > 0");
  if (beta_restarts < 1) throw Error(ErrorCode::InvalidArgument, "beta_restarts must be >= 1");
  if (max_outer_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_outer_iters must be >= 1");
  if (!(convergence_tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "convergence_tol must be > 0");
}

std::vector<Eigen::VectorXd> sobol_starts(const BetaBox& box, int count) {
  const int m = box.dim();
  boost::random::sobol gen(static_cast<std::size_t>(m));
  const double span = static_cast<double>(gen.max() - gen.min()) + 1.0;
  gen.discard(static_cast<std::uintmax_t>(m));
  std::vector<Eigen::VectorXd> starts;
  starts.reserve(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    Eigen::VectorXd point(m);
    for (int d = 0; d < m; ++d) {
      const double u = static_cast<double>(gen() - gen.min()) / span;
      point[d] = box.lower[d] + u * (box.upper[d] - box.lower[d]);
    }
    starts.push_back(point);
  }
  return starts;
}

Eigen::VectorXd maximize_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                              const std::vector<Eigen::VectorXd>& starts, double tol) {
  const BetaSection section(ctx, lambda);
  Eigen::VectorXd best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    const Eigen::VectorXd candidate = newton_ascent(section, ctx.box, ctx.box.clamp(start), tol);
    const double v = section.value(candidate);
    if (best.size() == 0 || v > best_value) {
      best = candidate;
      best_value = v;
    }
  }
  return best;
}

namespace {

// Solves (-H) x = rhs for a symmetric positive definite tridiagonal -H
// given by its diagonal and first off-diagonal.
Eigen::VectorXd solve_tridiagonal(Eigen::VectorXd diag, const Eigen::VectorXd& off,
                                  Eigen::VectorXd rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double f = off[i - 1] / diag[i - 1];
    diag[i] -= f * off[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
  return rhs;
}

// Log-barrier path for  max F(v)  over  floor <= v <= ceiling,
// |v_{j+1} - v_j| <= bound.  Every term couples at most two adjacent
// nodes, so each Newton system is tridiagonal.
class BarrierSolver {
 public:
  BarrierSolver(const HazardSection& section, double floor, double ceiling, double bound)
      : section_(section), floor_(floor), ceiling_(ceiling), bound_(bound) {}

  bool strictly_feasible(const Eigen::VectorXd& v) const {
    const Eigen::Index n = v.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(v[j] > floor_) || !(v[j] < ceiling_)) return false;
      if (j + 1 < n && !(std::abs(v[j + 1] - v[j]) < bound_)) return false;
    }
    return true;
  }

  double value(const Eigen::VectorXd& v, double t) const {
    const Eigen::Index n = v.size();
    double acc = t * section_.value(v);
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += std::log(v[j] - floor_);
      if (std::isfinite(ceiling_)) acc += std::log(ceiling_ - v[j]);
      if (j + 1 < n) {
        const double d = v[j + 1] - v[j];
        acc += std::log(bound_ - d) + std::log(bound_ + d);
      }
    }
    return acc;
  }

  // Largest step keeping every barrier argument positive.
  double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dir) const {
    double alpha = std::numeric_limits<double>::infinity();
    auto limit = [&](double slack, double rate) {
      if (rate < 0.0) alpha = std::min(alpha, slack / -rate);
    };
    const Eigen::Index n = v.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      limit(v[j] - floor_, dir[j]);
      if (std::isfinite(ceiling_)) limit(ceiling_ - v[j], -dir[j]);
      if (j + 1 < n) {
        const double d = v[j + 1] - v[j];
        const double dd = dir[j + 1] - dir[j];
        limit(bound_ - d, -dd);
        limit(bound_ + d, dd);
      }
    }
    return alpha;
  }

  int constraint_count(Eigen::Index n) const {
    return static_cast<int>(n + (std::isfinite(ceiling_) ? n : 0) + 2 * (n - 1));
  }

  // Newton centering for a fixed barrier weight t. Returns iterations.
  int center(Eigen::VectorXd& v, double t) const {
    const Eigen::Index n = v.size();
    int iters = 0;
    double current = value(v, t);
    for (; iters < 100; ++iters) {
      Eigen::VectorXd grad = t * section_.gradient(v);
      Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);  // of -H
      Eigen::VectorXd off = Eigen::VectorXd::Zero(n - 1);
      section_.add_curvature(v, t, diag, off);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double lo = v[j] - floor_;
        grad[j] += 1.0 / lo;
        diag[j] += 1.0 / (lo * lo);
        if (std::isfinite(ceiling_)) {
          const double hi = ceiling_ - v[j];
          grad[j] -= 1.0 / hi;
          diag[j] += 1.0 / (hi * hi);
        }
        if (j + 1 < n) {
          const double d = v[j + 1] - v[j];
          const double a = bound_ - d;
          const double b = bound_ + d;
          const double gd = -1.0 / a + 1.0 / b;
          const double hd = 1.0 / (a * a) + 1.0 / (b * b);
          grad[j] -= gd;
          grad[j + 1] += gd;
          diag[j] += hd;
          diag[j + 1] += hd;
          off[j] -= hd;
        }
      }
      const Eigen::VectorXd dir = solve_tridiagonal(diag, off, grad);
      const double decrement = grad.dot(dir);
      if (!(decrement > 1e-9)) break;
      double alpha = std::min(1.0, 0.99 * max_step(v, dir));
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd trial = v + alpha * dir;
        if (strictly_feasible(trial)) {
          const double tv = value(trial, t);
          if (tv >= current + 0.25 * alpha * decrement) {
            v = trial;
            current = tv;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }
    return iters;
  }

 private:
  const HazardSection& section_;
  double floor_;
  double ceiling_;
  double bound_;
};

}  // namespace

LambdaStep maximize_lambda(const LikelihoodContext& ctx, const Eigen::VectorXd& beta,
                           const GridFunction& start, double floor, const FitConfig& cfg) {
  const double tau = start.tau();
  const int cells = start.cells();
  const double bound = cfg.lipschitz * tau / cells;
  const HazardSection section(ctx, beta, tau, cells);
  ProjectionOptions popt;
  popt.ceiling = cfg.radius;
  if (!(floor < cfg.radius))
    throw Error(ErrorCode::InvalidArgument, "hazard floor must be below the radius R");

  // Strictly interior start: pull the previous iterate toward a constant.
  const double level = std::clamp(start.values().mean(), floor + 1e-3 * (cfg.radius - floor),
                                  cfg.radius - 1e-3 * (cfg.radius - floor));
  const Eigen::VectorXd centre = Eigen::VectorXd::Constant(cells + 1, level);
  Eigen::VectorXd v = project(start.values(), tau, cfg.lipschitz, floor, popt).values();
  v = 0.9 * v + 0.1 * centre;

  BarrierSolver barrier(section, floor, cfg.radius, bound);
  if (!barrier.strictly_feasible(v)) v = centre;

  LambdaStep out;
  const double count = barrier.constraint_count(v.size());
  const double scale = 1.0 + std::abs(section.value(v));
  double t = count / (0.1 * scale);
  const double gap = 1e-9 * scale;
  while (true) {
    out.iterations += barrier.center(v, t);
    if (count / t < gap) break;
    t *= 20.0;
  }

  auto certificate = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    return (project(x + g, tau, cfg.lipschitz, floor, popt).values() - x)
        .lpNorm<Eigen::Infinity>();
  };
  v = project(v, tau, cfg.lipschitz, floor, popt).values();
  double value = section.value(v);
  Eigen::VectorXd grad = section.gradient(v);
  out.certificate = certificate(v, grad);

  // Spectral projected-gradient polish when the barrier stopped short.
  double step = 1.0;
  for (int iter = 0; iter < cfg.max_lambda_iters && out.certificate >= cfg.convergence_tol;
       ++iter) {
    const Eigen::VectorXd dir = project(v + step * grad, tau, cfg.lipschitz, floor, popt).values() - v;
    const double slope = grad.dot(dir);
    double alpha = 1.0;
    Eigen::VectorXd trial;
    double trial_value = -std::numeric_limits<double>::infinity();
    for (int ls = 0; ls < 60; ++ls) {
      trial = v + alpha * dir;
      trial_value = section.value(trial);
      if (std::isfinite(trial_value) && trial_value >= value + kArmijo * alpha * slope) break;
      alpha *= 0.5;
    }
    if (!(trial_value >= value)) break;
    const Eigen::VectorXd trial_grad = section.gradient(trial);
    const Eigen::VectorXd sk = trial - v;
    const double curvature = -sk.dot(trial_grad - grad);
    step = curvature > 0.0 ? std::clamp(sk.squaredNorm() / curvature, 1e-8, 1e8) : 1e8;
    v = trial;
    value = trial_value;
    grad = trial_grad;
    out.certificate = certificate(v, grad);
    ++out.iterations;
  }

  // Never return a point worse than the feasible start.
  const Eigen::VectorXd start_v = project(start.values(), tau, cfg.lipschitz, floor, popt).values();
  if (section.value(start_v) > value) v = start_v;
  out.lambda = project(v, tau, cfg.lipschitz, floor, popt);
  return out;
}

namespace {

FitResult block_ascent(const LikelihoodContext& ctx, const FitConfig& cfg,
                       GridFunction lambda, Eigen::VectorXd beta, double floor,
                       FitStage stage) {
  const auto starts_box = sobol_starts(ctx.box, cfg.beta_restarts);
  FitResult result;
  result.stage = stage;
  result.diagnostics.floor = floor;
  double previous = objective(ctx, lambda, beta);
  for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
    LambdaStep ls = maximize_lambda(ctx, beta, lambda, floor, cfg);
    lambda = std::move(ls.lambda);
    result.diagnostics.lambda_iterations += ls.iterations;
    result.diagnostics.lambda_certificate = ls.certificate;

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(beta);
    starts.insert(starts.end(), starts_box.begin(), starts_box.end());
    beta = maximize_beta(ctx, lambda, starts, cfg.convergence_tol);

    const double current = objective(ctx, lambda, beta);
    result.diagnostics.objective_trace.push_back(current);
    result.diagnostics.outer_iterations = outer;
    const double gain = current - previous;
    previous = current;
    if (std::isfinite(current) && gain < 0.5 * cfg.epsilon_n && outer > 1) break;
    if (outer == cfg.max_outer_iters && !(gain <= cfg.epsilon_n)) {
      throw Error(ErrorCode::NonConvergence,
                  "block ascent still gaining " + std::to_string(gain) + " after " +
                      std::to_string(outer) + " sweeps");
    }
  }
  result.lambda_hat = std::move(lambda);
  result.beta_hat = std::move(beta);
  result.objective_value = previous;
  result.diagnostics.beta_gradient_norm =
      projected_gradient(grad_beta(ctx, result.lambda_hat, result.beta_hat), result.beta_hat,
                         ctx.box)
          .norm();
  return result;
}

}  // namespace

FitResult fit_corrected(const LikelihoodContext& ctx, const FitConfig& cfg) {
  cfg.validate();
  const Dataset& data = *ctx.dataset;
  const std::size_t events = data.events();
  if (events == 0) throw Error(ErrorCode::NoEvents, "no uncensored observations");
  double exposure = 0.0;
  for (const auto& r : data.records) exposure += r.y;
  const double level = std::clamp(static_cast<double>(events) / std::max(exposure, 1e-12),
                                  1e-3, cfg.radius);
  const GridFunction start = GridFunction::unchecked(
      data.tau, Eigen::VectorXd::Constant(cfg.grid + 1, level), cfg.lipschitz);
  const Eigen::VectorXd beta0 = ctx.box.clamp(Eigen::VectorXd::Zero(ctx.box.dim()));
  return block_ascent(ctx, cfg, start, beta0, 0.0, FitStage::Corrected);
}

FitResult fit_modified(const LikelihoodContext& ctx, const FitConfig& cfg,
                       const FitResult& first) {
  cfg.validate();
  const double mu = min_value(first.lambda_hat);
  if (!(mu > 0.0)) return first;
  const double floor = 0.5 * mu;
  return block_ascent(ctx, cfg, first.lambda_hat, first.beta_hat, floor, FitStage::Modified);
}

FitPair fit(const LikelihoodContext& ctx, const FitConfig& cfg) {
  FitPair pair;
  pair.corrected = fit_corrected(ctx, cfg);
  pair.modified = fit_modified(ctx, cfg, pair.corrected);
  return pair;
}

}  // namespace coxerr

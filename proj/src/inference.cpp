#include "coxerr/inference.hpp"

#include <cmath>
#include <string>

#include "coxerr/error.hpp"
#include "coxerr/quantiles.hpp"

namespace coxerr {
namespace {

// Linear interpolation weights on the hazard grid.
struct GridPos {
  Eigen::Index j;
  double s;
};

GridPos grid_pos(const GridFunction& g, double u) {
  const auto [j, s] = g.locate(u);
  if (j >= g.cells()) return {g.cells() - 1, 1.0};
  return {j, s};
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double condition_number(const Eigen::MatrixXd& a) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 0.0)) return std::numeric_limits<double>::infinity();
  return sv[0] / sv[sv.size() - 1];
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size())
    throw Error(ErrorCode::InvalidArgument, "piecewise-linear weight needs >= 2 matching knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1]))
      throw Error(ErrorCode::InvalidArgument, "weight knots must be strictly increasing");
  }
  for (const double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "weight values must be finite");
  }
}

PiecewiseLinear PiecewiseLinear::tent(double lo, double hi, double height) {
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "tent needs lo < hi");
  return PiecewiseLinear({lo, 0.5 * (lo + hi), hi}, {0.0, height, 0.0});
}

double PiecewiseLinear::operator()(double u) const {
  if (knots_.empty() || u < knots_.front() || u > knots_.back()) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
  if (it == knots_.end()) return values_.back();
  const auto i = static_cast<std::size_t>(it - knots_.begin());
  const double s = (u - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return (1.0 - s) * values_[i - 1] + s * values_[i];
}

void InferenceOptions::validate() const {
  if (!(variance_scale > 0.0))
    throw Error(ErrorCode::InvalidArgument, "variance scale must be > 0");
  if (!(max_condition > 1.0)) throw Error(ErrorCode::InvalidArgument, "condition cap must be > 1");
  if (!(residual_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "residual tolerance must be > 0");
}

double PluginTables::b_at(double u) const {
  const auto p = grid_pos(ctx.lambda_hat, u);
  return (1.0 - p.s) * abp.b[p.j] + p.s * abp.b[p.j + 1];
}

Eigen::VectorXd PluginTables::a_at(double u) const {
  const auto p = grid_pos(ctx.lambda_hat, u);
  return (1.0 - p.s) * abp.a.col(p.j) + p.s * abp.a.col(p.j + 1);
}

double PluginTables::k_at(double u) const {
  const auto p = grid_pos(ctx.lambda_hat, u);
  return (1.0 - p.s) * k_nodes[p.j] + p.s * k_nodes[p.j + 1];
}

Eigen::MatrixXd PluginTables::tk_at(double u) const {
  const auto p = grid_pos(ctx.lambda_hat, u);
  return (1.0 - p.s) * tk_nodes[static_cast<std::size_t>(p.j)] +
         p.s * tk_nodes[static_cast<std::size_t>(p.j + 1)];
}

Eigen::MatrixXd PluginTables::p_at(double u) const {
  const auto p = grid_pos(ctx.lambda_hat, u);
  return (1.0 - p.s) * abp.p[static_cast<std::size_t>(p.j)] +
         p.s * abp.p[static_cast<std::size_t>(p.j + 1)];
}

Eigen::VectorXd PluginTables::ak_integral(double y) const {
  y = std::clamp(y, 0.0, y_max);
  auto it = std::upper_bound(breaks.begin(), breaks.end(), y);
  const auto k = static_cast<std::size_t>(it - breaks.begin());
  if (k == 0) return Eigen::VectorXd::Zero(abp.a.rows());
  Eigen::VectorXd out = ak_prefix[k - 1];
  for_each_gauss_point(breaks, breaks[k - 1], y,
                       [&](double u, double w) { out += w * k_at(u) * a_at(u); });
  return out;
}

PluginTables build_plugins(const FitResult& fit, const Dataset& data, const ErrorModel& error,
                           const SeriesPolicy& policy) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "inference needs data");
  PluginTables pt;
  pt.ctx = PluginContext{fit.lambda_hat, fit.beta_hat, error, &data};
  pt.abp = estimate_abp(pt.ctx, policy, grid_times(fit.lambda_hat));
  pt.tk_nodes = tk_hat(pt.ctx, pt.abp);
  const auto nodes = pt.abp.b.size();
  pt.k_nodes.resize(nodes);
  for (Eigen::Index j = 0; j < nodes; ++j)
    pt.k_nodes[j] = fit.lambda_hat.values()[j] / pt.abp.b[j];

  pt.gc = km_censor(data);
  pt.y_max = data.max_y();
  for (int j = 0; j <= fit.lambda_hat.cells(); ++j) {
    const double t = fit.lambda_hat.node(j);
    if (t < pt.y_max) pt.breaks.push_back(t);
  }
  for (const double t : pt.gc.jumps()) {
    if (t < pt.y_max) pt.breaks.push_back(t);
  }
  pt.breaks.push_back(pt.y_max);
  std::sort(pt.breaks.begin(), pt.breaks.end());
  pt.breaks.erase(std::unique(pt.breaks.begin(), pt.breaks.end()), pt.breaks.end());

  pt.ak_prefix.assign(pt.breaks.size(), Eigen::VectorXd::Zero(data.dim()));
  for (std::size_t k = 1; k < pt.breaks.size(); ++k) {
    Eigen::VectorXd piece = Eigen::VectorXd::Zero(data.dim());
    for_each_gauss_point(pt.breaks, pt.breaks[k - 1], pt.breaks[k],
                         [&](double u, double w) { piece += w * pt.k_at(u) * pt.a_at(u); });
    pt.ak_prefix[k] = pt.ak_prefix[k - 1] + piece;
  }
  pt.m_beta = mgf(error, fit.beta_hat);
  pt.tilt_beta = tilted_mean(error, fit.beta_hat);
  return pt;
}

Eigen::MatrixXd m_hat(const PluginTables& pt) {
  const auto m = pt.abp.a.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for_each_gauss_point(pt.breaks, 0.0, pt.y_max,
                       [&](double u, double w) { out += (w * pt.gc(u)) * pt.tk_at(u); });
  return symmetrized(out);
}

Eigen::MatrixXd a_mat_hat(const PluginTables& pt) {
  const auto m = pt.abp.a.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  const GridFunction& lam = pt.ctx.lambda_hat;
  for_each_gauss_point(pt.breaks, 0.0, pt.y_max, [&](double u, double w) {
    out += (w * lam.evaluate(u) * pt.gc(u)) * pt.p_at(u);
  });
  return symmetrized(out);
}

Eigen::VectorXd zeta_hat(const Record& rec, const PluginTables& pt) {
  const Eigen::VectorXd& beta = pt.ctx.beta_hat;
  const double tilt = std::exp(beta.dot(rec.w)) / pt.m_beta;
  const double cum = pt.ctx.lambda_hat.cumulative(rec.y);
  Eigen::VectorXd out = tilt * pt.ak_integral(rec.y) - (rec.w - pt.tilt_beta) * (tilt * cum);
  if (rec.delta) {
    const double b = pt.b_at(rec.y);
    if (!(b > 1e-12)) throw Error(ErrorCode::DegenerateB, "b-hat vanishes at an event time");
    out += rec.w - pt.a_at(rec.y) / b;
  }
  return out;
}

bool Ellipsoid::contains(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd d = z - center;
  return d.dot(shape * d) <= radius2;
}

BetaInference beta_confidence(const FitResult& fit, const PluginTables& pt, double alpha,
                              const InferenceOptions& opts) {
  opts.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  const Dataset& data = *pt.ctx.dataset;
  const auto m = data.dim();
  const double n = static_cast<double>(data.size());

  BetaInference out;
  out.alpha = alpha;
  out.M_hat = m_hat(pt);
  out.Sigma_hat = Eigen::MatrixXd::Zero(m, m);
  for (const Record& r : data.records) {
    const Eigen::VectorXd z = zeta_hat(r, pt);
    out.Sigma_hat.noalias() += z * z.transpose();
  }
  out.Sigma_hat = symmetrized(out.Sigma_hat * (opts.variance_scale / n));

  if (condition_number(out.M_hat) > opts.max_condition)
    throw Error(ErrorCode::SingularSandwich, "M-hat is numerically singular");
  const Eigen::MatrixXd m_inv = out.M_hat.inverse();
  out.sandwich = symmetrized(m_inv * out.Sigma_hat * m_inv);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.sandwich);
  const auto& ev = eig.eigenvalues();
  if (!(ev[0] > 0.0) || ev[m - 1] / ev[0] > opts.max_condition) {
    throw Error(ErrorCode::SingularSandwich,
                "sandwich matrix not positive definite (eigenvalues " + std::to_string(ev[0]) +
                    " .. " + std::to_string(ev[m - 1]) + ")");
  }
  out.quantile = chi2_upper_quantile(alpha, static_cast<int>(m));
  out.ellipsoid.center = fit.beta_hat;
  out.ellipsoid.shape =
      symmetrized(eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose());
  out.ellipsoid.radius2 = out.quantile / n;
  return out;
}

double FredholmSolution::phi(double u, const PiecewiseLinear& f, const PluginTables& pt) const {
  return pt.k_at(u) * (safe_ratio(f(u), pt.gc(u)) + pt.a_at(u).dot(a_inv_c));
}

FredholmSolution fredholm_solve(const PiecewiseLinear& f, const PluginTables& pt,
                                const InferenceOptions& opts) {
  opts.validate();
  const auto m = pt.abp.a.rows();
  FredholmSolution out;
  out.A_hat = a_mat_hat(pt);
  if (condition_number(out.A_hat) > opts.max_condition)
    throw Error(ErrorCode::SingularKernel, "A-hat is numerically singular");

  // Pieces also break at the kinks of f so every integrand stays polynomial.
  std::vector<double> breaks = pt.breaks;
  for (const double t : f.knots()) {
    if (t > 0.0 && t < pt.y_max) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  for_each_gauss_point(breaks, 0.0, pt.y_max, [&](double u, double w) {
    const Eigen::VectorXd a = pt.a_at(u);
    const double k = pt.k_at(u);
    d.noalias() += (w * k * pt.gc(u)) * (a * a.transpose());
    r += (w * k * f(u)) * a;
  });

  const Eigen::PartialPivLU<Eigen::MatrixXd> a_lu(out.A_hat);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(m, m) - a_lu.solve(d.transpose()).transpose();
  out.condition = condition_number(system);
  if (out.condition > opts.max_condition)
    throw Error(ErrorCode::SingularKernel, "Fredholm system is numerically singular");
  out.c = system.fullPivLu().solve(r);
  out.a_inv_c = a_lu.solve(out.c);
  out.phi_beta = -out.a_inv_c;

  const GridFunction& lam = pt.ctx.lambda_hat;
  out.times = grid_times(lam);
  out.phi_nodes.resize(static_cast<Eigen::Index>(out.times.size()));
  for (std::size_t j = 0; j < out.times.size(); ++j)
    out.phi_nodes[static_cast<Eigen::Index>(j)] = out.phi(out.times[j], f, pt);

  // Plug the tabulated solution back into m-hat; the equation residual is
  // then a(u)' A^{-1} (c - m-hat(phi)).
  Eigen::VectorXd m_phi = Eigen::VectorXd::Zero(m);
  for_each_gauss_point(breaks, 0.0, pt.y_max, [&](double u, double w) {
    m_phi += (w * out.phi(u, f, pt) * pt.gc(u)) * pt.a_at(u);
  });
  const Eigen::VectorXd gap = a_lu.solve(out.c - m_phi);
  for (const double t : out.times) {
    if (t > pt.y_max) break;
    out.residual = std::max(out.residual, std::abs(pt.a_at(t).dot(gap)));
  }
  if (!(out.residual < opts.residual_tol)) {
    throw Error(ErrorCode::ResidualFailure,
                "Fredholm residual " + std::to_string(out.residual) + " exceeds tolerance");
  }
  return out;
}

double functional_value(const GridFunction& lambda, const PiecewiseLinear& f) {
  if (f.knots().empty()) return 0.0;
  std::vector<double> breaks = grid_times(lambda);
  breaks.insert(breaks.end(), f.knots().begin(), f.knots().end());
  std::sort(breaks.begin(), breaks.end());
  const double lo = std::max(0.0, f.knots().front());
  const double hi = std::min(lambda.tau(), f.knots().back());
  double out = 0.0;
  for_each_gauss_point(breaks, lo, hi,
                       [&](double u, double w) { out += w * lambda.evaluate(u) * f(u); });
  return out;
}

FunctionalInference functional_interval(const FitResult& fit, const PiecewiseLinear& f,
                                        const PluginTables& pt, double alpha,
                                        const InferenceOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  const Dataset& data = *pt.ctx.dataset;
  if (data.size() < 2) throw Error(ErrorCode::InvalidArgument, "variance estimate needs n >= 2");
  FunctionalInference out;
  out.alpha = alpha;
  out.solution = fredholm_solve(f, pt, opts);
  const FredholmSolution& sol = out.solution;
  out.m_norm = sol.c.norm();
  out.estimate = functional_value(fit.lambda_hat, f);

  // Prefix integrals of phi at the breaks, for the integral up to each Y_i.
  std::vector<double> breaks = pt.breaks;
  for (const double t : f.knots()) {
    if (t > 0.0 && t < pt.y_max) breaks.push_back(t);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> prefix(breaks.size(), 0.0);
  for (std::size_t k = 1; k < breaks.size(); ++k) {
    double piece = 0.0;
    for_each_gauss_point(breaks, breaks[k - 1], breaks[k],
                         [&](double u, double w) { piece += w * sol.phi(u, f, pt); });
    prefix[k] = prefix[k - 1] + piece;
  }
  const auto phi_integral = [&](double y) {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), y);
    const auto k = static_cast<std::size_t>(it - breaks.begin());
    if (k == 0) return 0.0;
    double acc = prefix[k - 1];
    for_each_gauss_point(breaks, breaks[k - 1], y,
                         [&](double u, double w) { acc += w * sol.phi(u, f, pt); });
    return acc;
  };

  const Eigen::VectorXd& beta = fit.beta_hat;
  const GridFunction& lam = fit.lambda_hat;
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Record& r = data.records[static_cast<std::size_t>(i)];
    const double tilt = std::exp(beta.dot(r.w)) / pt.m_beta;
    double v = -tilt * phi_integral(r.y) -
               sol.phi_beta.dot(r.w - pt.tilt_beta) * tilt * lam.cumulative(r.y);
    if (r.delta) {
      const double l = lam.evaluate(r.y);
      if (!(l > 0.0)) throw Error(ErrorCode::DegenerateB, "fitted hazard vanishes at an event time");
      v += sol.phi(r.y, f, pt) / l + sol.phi_beta.dot(r.w);
    }
    xi[i] = v;
  }
  const double mean = xi.mean();
  out.sigma2_hat =
      opts.variance_scale * (xi.array() - mean).square().sum() / static_cast<double>(n - 1);
  if (!(out.sigma2_hat >= opts.zero_variance)) {
    throw Error(ErrorCode::ZeroVariance,
                "estimated functional variance " + std::to_string(out.sigma2_hat) + " is zero");
  }
  out.z = normal_upper_quantile(alpha / 2.0);
  const double half = out.z * std::sqrt(out.sigma2_hat / static_cast<double>(n));
  out.lo = out.estimate - half;
  out.hi = out.estimate + half;
  return out;
}

}  // namespace coxerr

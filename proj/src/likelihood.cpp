#include "coxerr/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// Cell index and local coordinate of y on a grid with `cells` cells.
std::pair<int, double> cell_of(double tau, int cells, double y) {
  const double x = y / (tau / cells);
  int j = static_cast<int>(std::floor(x));
  if (j >= cells) return {cells - 1, 1.0};
  if (j < 0) return {0, 0.0};
  return {j, std::clamp(x - j, 0.0, 1.0)};
}

}  // namespace

BetaBox BetaBox::symmetric(int dim, double radius) {
  return BetaBox{Eigen::VectorXd::Constant(dim, -radius), Eigen::VectorXd::Constant(dim, radius)};
}

bool BetaBox::contains(const Eigen::VectorXd& beta) const {
  return beta.size() == lower.size() && (beta.array() >= lower.array()).all() &&
         (beta.array() <= upper.array()).all();
}

Eigen::VectorXd BetaBox::clamp(const Eigen::VectorXd& beta) const {
  return beta.cwiseMax(lower).cwiseMin(upper);
}

void BetaBox::validate() const {
  if (lower.size() < 1 || lower.size() != upper.size())
    throw Error(ErrorCode::InvalidArgument, "beta box bounds have mismatched sizes");
  if (!((upper - lower).array() > 0.0).all() || !lower.allFinite() || !upper.allFinite())
    throw Error(ErrorCode::InvalidArgument, "beta box must be bounded with nonempty interior");
}

LikelihoodContext::LikelihoodContext(const Dataset& data, ErrorModel err, BetaBox b)
    : dataset(&data), error(std::move(err)), box(std::move(b)) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  box.validate();
  if (box.dim() != data.dim() || error.dim != data.dim())
    throw Error(ErrorCode::InvalidArgument, "dimensions of data, error model and beta box differ");
}

double q_single(const Record& rec, const GridFunction& lambda, const Eigen::VectorXd& beta,
                const ErrorModel& error) {
  const double bw = beta.dot(rec.w);
  double value = -std::exp(bw - log_mgf(error, beta)) * lambda.cumulative(rec.y);
  if (rec.delta) {
    const double at_y = lambda.evaluate(rec.y);
    if (!(at_y > 0.0)) return kMinusInf;
    value += std::log(at_y) + bw;
  }
  return value;
}

double objective(const LikelihoodContext& ctx, const GridFunction& lambda,
                 const Eigen::VectorXd& beta) {
  const double log_m = log_mgf(ctx.error, beta);
  double acc = 0.0;
  for (const Record& rec : ctx.dataset->records) {
    const double bw = beta.dot(rec.w);
    acc -= std::exp(bw - log_m) * lambda.cumulative(rec.y);
    if (rec.delta) {
      const double at_y = lambda.evaluate(rec.y);
      if (!(at_y > 0.0)) return kMinusInf;
      acc += std::log(at_y) + bw;
    }
  }
  return acc / static_cast<double>(ctx.dataset->size());
}

Eigen::VectorXd grad_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                          const Eigen::VectorXd& beta) {
  const double log_m = log_mgf(ctx.error, beta);
  const Eigen::VectorXd g = tilted_mean(ctx.error, beta);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(beta.size());
  for (const Record& rec : ctx.dataset->records) {
    if (rec.delta) acc += rec.w;
    const double c = std::exp(beta.dot(rec.w) - log_m) * lambda.cumulative(rec.y);
    acc -= c * (rec.w - g);
  }
  return acc / static_cast<double>(ctx.dataset->size());
}

Eigen::MatrixXd hess_beta(const LikelihoodContext& ctx, const GridFunction& lambda,
                          const Eigen::VectorXd& beta) {
  const double log_m = log_mgf(ctx.error, beta);
  const Eigen::VectorXd g = tilted_mean(ctx.error, beta);
  const Eigen::MatrixXd tilt_cov = tilted_second_moment(ctx.error, beta) - g * g.transpose();
  const int m = static_cast<int>(beta.size());
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(m, m);
  double mass = 0.0;
  for (const Record& rec : ctx.dataset->records) {
    const double c = std::exp(beta.dot(rec.w) - log_m) * lambda.cumulative(rec.y);
    const Eigen::VectorXd d = rec.w - g;
    outer.noalias() += c * d * d.transpose();
    mass += c;
  }
  const Eigen::MatrixXd h = (mass * tilt_cov - outer) / static_cast<double>(ctx.dataset->size());
  return 0.5 * (h + h.transpose());
}

void accumulate_hat_integrals(double tau, int cells, double y, double scale,
                              Eigen::VectorXd& out) {
  const double h = tau / cells;
  const auto [j, s] = cell_of(tau, cells, y);
  for (int l = 0; l < j; ++l) {
    out[l] += scale * 0.5 * h;
    out[l + 1] += scale * 0.5 * h;
  }
  out[j] += scale * 0.5 * h * s * (2.0 - s);
  out[j + 1] += scale * 0.5 * h * s * s;
}

Eigen::VectorXd grad_lambda_nodes(const LikelihoodContext& ctx, const GridFunction& lambda,
                                  const Eigen::VectorXd& beta) {
  const double log_m = log_mgf(ctx.error, beta);
  const int cells = lambda.cells();
  const double tau = lambda.tau();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(cells + 1);
  for (const Record& rec : ctx.dataset->records) {
    if (rec.delta) {
      const auto [j, s] = lambda.locate(rec.y);
      const double at_y = lambda.evaluate(rec.y);
      grad[j] += (1.0 - s) / at_y;
      grad[j + 1] += s / at_y;
    }
    accumulate_hat_integrals(tau, cells, rec.y, -std::exp(beta.dot(rec.w) - log_m), grad);
  }
  return grad / static_cast<double>(ctx.dataset->size());
}

HazardSection::HazardSection(const LikelihoodContext& ctx, const Eigen::VectorXd& beta,
                             double tau, int cells) {
  const auto& records = ctx.dataset->records;
  inv_n_ = 1.0 / static_cast<double>(records.size());
  const double log_m = log_mgf(ctx.error, beta);
  const double h = tau / cells;

  // Mass of records whose Y lies in each cell, for the fully covered cells.
  Eigen::VectorXd cell_mass = Eigen::VectorXd::Zero(cells);
  weights_ = Eigen::VectorXd::Zero(cells + 1);
  double linear = 0.0;
  for (const Record& rec : records) {
    const double bw = beta.dot(rec.w);
    const double c = std::exp(bw - log_m);
    const auto [j, s] = cell_of(tau, cells, rec.y);
    cell_mass[j] += c;
    weights_[j] += c * 0.5 * h * s * (2.0 - s);
    weights_[j + 1] += c * 0.5 * h * s * s;
    if (rec.delta) {
      events_.push_back({j, s});
      linear += bw;
    }
  }
  // Cell l is fully covered by every record with cell index > l.
  double beyond = 0.0;
  for (int l = cells - 1; l >= 0; --l) {
    weights_[l] += 0.5 * h * beyond;
    weights_[l + 1] += 0.5 * h * beyond;
    beyond += cell_mass[l];
  }
  weights_ *= inv_n_;
  constant_ = linear * inv_n_;
}

double HazardSection::value(const Eigen::VectorXd& v) const {
  double acc = 0.0;
  for (const Event& e : events_) {
    const double at_y = (1.0 - e.s) * v[e.cell] + e.s * v[e.cell + 1];
    if (!(at_y > 0.0)) return kMinusInf;
    acc += std::log(at_y);
  }
  return acc * inv_n_ + constant_ - weights_.dot(v);
}

Eigen::VectorXd HazardSection::gradient(const Eigen::VectorXd& v) const {
  Eigen::VectorXd grad = -weights_;
  for (const Event& e : events_) {
    const double at_y = (1.0 - e.s) * v[e.cell] + e.s * v[e.cell + 1];
    grad[e.cell] += inv_n_ * (1.0 - e.s) / at_y;
    grad[e.cell + 1] += inv_n_ * e.s / at_y;
  }
  return grad;
}

void HazardSection::add_curvature(const Eigen::VectorXd& v, double scale, Eigen::VectorXd& diag,
                                  Eigen::VectorXd& off) const {
  for (const Event& e : events_) {
    const double at_y = (1.0 - e.s) * v[e.cell] + e.s * v[e.cell + 1];
    const double c = scale * inv_n_ / (at_y * at_y);
    diag[e.cell] += c * (1.0 - e.s) * (1.0 - e.s);
    diag[e.cell + 1] += c * e.s * e.s;
    off[e.cell] += c * e.s * (1.0 - e.s);
  }
}

}  // namespace coxerr

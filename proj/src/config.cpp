#include "coxerr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coxerr/error.hpp"

namespace coxerr {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

[[noreturn]] void bad(const std::string& key, int line, const std::string& why) {
  throw Error(ErrorCode::Parse, "config line " + std::to_string(line) + ": key '" + key +
                                    "': " + why);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Parse, "config line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::Parse, "config line " + std::to_string(line) + ": empty key");
    if (value.empty()) bad(key, line, "empty value");
    if (out.entries_.count(key)) bad(key, line, "duplicate key");
    out.entries_[key] = Entry{value, line};
  }
  return out;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_[key] = true;
  return &it->second;
}

std::optional<std::string> ConfigFile::text(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  return e->value;
}

std::optional<double> ConfigFile::real(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  double v = 0.0;
  if (!parse_double(e->value, v)) bad(key, e->line, "not a finite number: '" + e->value + "'");
  return v;
}

std::optional<long long> ConfigFile::integer(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  long long v = 0;
  const char* end = e->value.data() + e->value.size();
  const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, e->line, "not an integer: '" + e->value + "'");
  return v;
}

std::optional<std::vector<double>> ConfigFile::list(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  std::vector<double> out;
  std::istringstream in(e->value);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    if (!parse_double(trim(item), v)) bad(key, e->line, "bad list entry '" + trim(item) + "'");
    out.push_back(v);
  }
  if (out.empty()) bad(key, e->line, "empty list");
  return out;
}

void ConfigFile::reject_unused() const {
  for (const auto& [key, entry] : entries_) {
    if (!used_.count(key)) bad(key, entry.line, "unknown key");
  }
}

TrueModel RunConfig::true_model() const {
  Eigen::VectorXd nodes(fit.grid + 1);
  for (int j = 0; j <= fit.grid; ++j)
    nodes[j] = lambda0_intercept + lambda0_slope * tau * j / fit.grid;
  TrueModel model{GridFunction::unchecked(tau, nodes, fit.lipschitz), beta0, covariate_law,
                  covariate_scale, error};
  model.validate();
  return model;
}

FitConfig RunConfig::fit_config(std::size_t sample_size) const {
  FitConfig cfg = fit;
  cfg.epsilon_n = epsilon_scale * std::pow(static_cast<double>(sample_size), -epsilon_power);
  return cfg;
}

PiecewiseLinear RunConfig::weight() const {
  return PiecewiseLinear::tent(0.0, (1.0 - margin) * tau, functional_height);
}

void RunConfig::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be > 0");
  if (beta0.size() < 1) throw Error(ErrorCode::InvalidArgument, "beta0 must be nonempty");
  if (error.dim != dim())
    throw Error(ErrorCode::InvalidArgument, "error dimension differs from beta0");
  if (beta_box.dim() != dim())
    throw Error(ErrorCode::InvalidArgument, "beta box dimension differs from beta0");
  error.validate();
  beta_box.validate();
  fit_config(n).validate();
  series.validate();
  inference.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be in (0,1)");
  if (!(margin > 0.0 && margin < 1.0)) throw Error(ErrorCode::InvalidArgument, "margin must be in (0,1)");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
}

RunConfig RunConfig::from(const ConfigFile& file) {
  RunConfig rc;
  const auto line_of = [&](const std::string& key) {
    const auto it = file.entries().find(key);
    return it == file.entries().end() ? 0 : it->second.line;
  };
  const auto positive = [&](const std::string& key, double& slot) {
    if (auto v = file.real(key)) {
      if (!(*v > 0.0)) bad(key, line_of(key), "must be > 0");
      slot = *v;
    }
  };
  const auto count = [&](const std::string& key, auto& slot, long long min) {
    if (auto v = file.integer(key)) {
      if (*v < min) bad(key, line_of(key), "must be >= " + std::to_string(min));
      slot = static_cast<std::remove_reference_t<decltype(slot)>>(*v);
    }
  };
  const auto to_vector = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };

  positive("model.tau", rc.tau);
  if (auto v = file.real("model.lambda0.intercept")) rc.lambda0_intercept = *v;
  if (auto v = file.real("model.lambda0.slope")) rc.lambda0_slope = *v;
  if (!(rc.lambda0_intercept > 0.0 && rc.lambda0_intercept + rc.lambda0_slope * rc.tau > 0.0)) {
    bad("model.lambda0.intercept", line_of("model.lambda0.intercept"),
        "baseline hazard must stay positive on [0, tau]");
  }
  if (auto v = file.list("model.beta0")) rc.beta0 = to_vector(*v);
  const int m = rc.dim();
  if (auto v = file.text("model.covariate.law")) {
    if (*v == "uniform") rc.covariate_law = CovariateLaw::UniformBox;
    else if (*v == "gaussian") rc.covariate_law = CovariateLaw::Gaussian;
    else bad("model.covariate.law", line_of("model.covariate.law"), "expected uniform|gaussian");
  }
  positive("model.covariate.scale", rc.covariate_scale);

  const auto per_component = [&](const std::string& key, double fallback) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(m, fallback);
    if (auto v = file.list(key)) {
      if (v->size() == 1) out.setConstant((*v)[0]);
      else if (static_cast<int>(v->size()) == m) out = to_vector(*v);
      else bad(key, line_of(key), "expected 1 or " + std::to_string(m) + " values");
      if (!(out.minCoeff() > 0.0)) bad(key, line_of(key), "must be > 0");
    }
    return out;
  };
  const std::string family = file.text("error.family").value_or("gaussian");
  if (family == "none") {
    rc.error = ErrorModel::none(m);
  } else if (family == "gaussian") {
    double sigma = 0.3;
    positive("error.sigma", sigma);
    rc.error = ErrorModel::gaussian(m, sigma);
  } else if (family == "uniform") {
    rc.error = ErrorModel::uniform(per_component("error.halfwidths", 0.5));
  } else if (family == "poisson") {
    rc.error = ErrorModel::poisson(per_component("error.intensities", 1.0));
  } else {
    bad("error.family", line_of("error.family"), "expected none|uniform|gaussian|poisson");
  }

  count("grid.size", rc.fit.grid, 1);
  positive("grid.lipschitz", rc.fit.lipschitz);
  if (file.has("optimizer.R")) {
    positive("optimizer.R", rc.fit.radius);
    rc.radius_set = true;
  } else {
    rc.fit.radius = 10.0 * std::max(rc.lambda0_intercept, rc.lambda0_intercept + rc.lambda0_slope * rc.tau);
  }
  positive("optimizer.epsilon_scale", rc.epsilon_scale);
  positive("optimizer.epsilon_power", rc.epsilon_power);
  count("optimizer.max_outer_iters", rc.fit.max_outer_iters, 1);
  count("optimizer.beta_restarts", rc.fit.beta_restarts, 1);
  positive("optimizer.convergence_tol", rc.fit.convergence_tol);
  count("optimizer.max_lambda_iters", rc.fit.max_lambda_iters, 1);

  rc.beta_box = BetaBox::symmetric(m, 3.0);
  if (auto r = file.real("beta_box.radius")) {
    if (!(*r > 0.0)) bad("beta_box.radius", line_of("beta_box.radius"), "must be > 0");
    rc.beta_box = BetaBox::symmetric(m, *r);
  }
  if (auto lo = file.list("beta_box.lower")) {
    if (static_cast<int>(lo->size()) != m) bad("beta_box.lower", line_of("beta_box.lower"), "wrong length");
    rc.beta_box.lower = to_vector(*lo);
  }
  if (auto hi = file.list("beta_box.upper")) {
    if (static_cast<int>(hi->size()) != m) bad("beta_box.upper", line_of("beta_box.upper"), "wrong length");
    rc.beta_box.upper = to_vector(*hi);
  }
  if (!(rc.beta_box.lower.array() < rc.beta_box.upper.array()).all())
    bad("beta_box.lower", line_of("beta_box.lower"), "lower bounds must be below upper bounds");

  count("series.max_terms", rc.series.max_terms, 1);
  positive("series.tail_tol", rc.series.tail_tol);

  if (auto v = file.real("inference.alpha")) {
    if (!(*v > 0.0 && *v < 1.0)) bad("inference.alpha", line_of("inference.alpha"), "must be in (0,1)");
    rc.alpha = *v;
  }
  if (auto v = file.real("inference.margin")) {
    if (!(*v > 0.0 && *v < 1.0)) bad("inference.margin", line_of("inference.margin"), "must be in (0,1)");
    rc.margin = *v;
  }
  positive("inference.variance_scale", rc.inference.variance_scale);
  positive("functional.height", rc.functional_height);

  if (auto v = file.integer("run.seed")) {
    if (*v < 0) bad("run.seed", line_of("run.seed"), "must be >= 0");
    rc.seed = static_cast<std::uint64_t>(*v);
  }
  count("run.n", rc.n, 2);
  count("run.replicates", rc.replicates, 1);
  count("run.threads", rc.threads, 1);

  file.reject_unused();
  try {
    rc.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, std::string("invalid configuration: ") + e.what());
  }
  return rc;
}

RunConfig RunConfig::load(const std::string& path) { return from(ConfigFile::load(path)); }

}  // namespace coxerr

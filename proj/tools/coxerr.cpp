#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coxerr/coverage.hpp"
#include "coxerr/csv.hpp"

using namespace coxerr;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::optional<int> threads;
  bool with_truth = false;
};

RunConfig load_config(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig::from(ConfigFile{}) : RunConfig::load(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (o.n) rc.n = *o.n;
  if (o.replicates) rc.replicates = *o.replicates;
  if (o.alpha) rc.alpha = *o.alpha;
  if (o.threads) rc.threads = *o.threads;
  try {
    rc.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, std::string("invalid option: ") + e.what());
  }
  return rc;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    out << name << ".row" << i + 1 << " = " << join(a.row(i).transpose()) << '\n';
}

void write_lambda(const std::string& path, const GridFunction& lambda) {
  std::ofstream out = open_out(path);
  std::vector<std::vector<double>> rows;
  for (int j = 0; j <= lambda.cells(); ++j) rows.push_back({lambda.node(j), lambda.values()[j]});
  write_table(out, {"t", "lambda"}, rows);
  close_out(out, path);
}

void write_fit(std::ostream& out, const FitPair& pair) {
  const auto one = [&](const std::string& tag, const FitResult& r) {
    out << tag << ".beta_hat = " << join(r.beta_hat) << '\n'
        << tag << ".objective = " << format_number(r.objective_value) << '\n'
        << tag << ".min_lambda = " << format_number(min_value(r.lambda_hat)) << '\n'
        << tag << ".floor = " << format_number(r.diagnostics.floor) << '\n'
        << tag << ".outer_iterations = " << r.diagnostics.outer_iterations << '\n'
        << tag << ".lambda_certificate = " << format_number(r.diagnostics.lambda_certificate) << '\n'
        << tag << ".beta_gradient_norm = " << format_number(r.diagnostics.beta_gradient_norm) << '\n';
  };
  one("corrected", pair.corrected);
  one("modified", pair.modified);
}

struct Fitted {
  RunConfig rc;
  Dataset data;
  FitPair pair;
};

Fitted fit_from(const Options& o) {
  RunConfig rc = load_config(o);
  Dataset data = load_dataset(o.data, rc.tau);
  FitPair pair = fit_dataset(rc, data);
  return {std::move(rc), std::move(data), std::move(pair)};
}

void cmd_simulate(const Options& o) {
  const RunConfig rc = load_config(o);
  const Dataset data = draw_dataset(rc.true_model(), rc.n, rc.seed);
  save_dataset(o.out, data, o.with_truth);
}

void cmd_fit(const Options& o) {
  const Fitted f = fit_from(o);
  std::ofstream out = open_out(o.out);
  out << "n = " << f.data.size() << '\n' << "events = " << f.data.events() << '\n';
  write_fit(out, f.pair);
  close_out(out, o.out);
  write_lambda(o.out + ".lambda.csv", f.pair.modified.lambda_hat);
}

void cmd_infer_beta(const Options& o) {
  const Fitted f = fit_from(o);
  const PluginTables pt = build_plugins(f.pair.modified, f.data, f.rc.error, f.rc.series);
  const BetaInference bi = beta_confidence(f.pair.modified, pt, f.rc.alpha, f.rc.inference);
  std::ofstream out = open_out(o.out);
  out << "n = " << f.data.size() << '\n'
      << "alpha = " << format_number(bi.alpha) << '\n'
      << "center = " << join(bi.ellipsoid.center) << '\n'
      << "chi2_quantile = " << format_number(bi.quantile) << '\n'
      << "radius2 = " << format_number(bi.ellipsoid.radius2) << '\n';
  write_matrix(out, "shape", bi.ellipsoid.shape);
  write_matrix(out, "sandwich", bi.sandwich);
  write_matrix(out, "M_hat", bi.M_hat);
  write_matrix(out, "Sigma_hat", bi.Sigma_hat);
  out << "series.max_terms_used = " << pt.abp.max_terms_used << '\n'
      << "series.max_relative_tail = " << format_number(pt.abp.max_relative_tail) << '\n';
  close_out(out, o.out);
}

void cmd_infer_functional(const Options& o) {
  const Fitted f = fit_from(o);
  const PluginTables pt = build_plugins(f.pair.modified, f.data, f.rc.error, f.rc.series);
  const PiecewiseLinear weight = f.rc.weight();
  const FunctionalInference fi =
      functional_interval(f.pair.modified, weight, pt, f.rc.alpha, f.rc.inference);
  std::ofstream out = open_out(o.out);
  out << "n = " << f.data.size() << '\n'
      << "alpha = " << format_number(fi.alpha) << '\n'
      << "support_end = " << format_number(weight.support_end()) << '\n'
      << "estimate = " << format_number(fi.estimate) << '\n'
      << "sigma2_hat = " << format_number(fi.sigma2_hat) << '\n'
      << "z = " << format_number(fi.z) << '\n'
      << "lo = " << format_number(fi.lo) << '\n'
      << "hi = " << format_number(fi.hi) << '\n'
      << "phi_beta = " << join(fi.solution.phi_beta) << '\n'
      << "m_norm = " << format_number(fi.m_norm) << '\n'
      << "fredholm_residual = " << format_number(fi.solution.residual) << '\n'
      << "fredholm_condition = " << format_number(fi.solution.condition) << '\n';
  close_out(out, o.out);
  const std::string phi_path = o.out + ".phi.csv";
  std::ofstream phi = open_out(phi_path);
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < fi.solution.times.size(); ++j)
    rows.push_back({fi.solution.times[j], fi.solution.phi_nodes[static_cast<Eigen::Index>(j)]});
  write_table(phi, {"t", "phi"}, rows);
  close_out(phi, phi_path);
}

void cmd_coverage(const Options& o) {
  const RunConfig rc = load_config(o);
  const CoverageSummary s = run_coverage(rc, rc.replicates, rc.seed, rc.threads);
  std::ofstream out = open_out(o.out);
  write_coverage_rows(out, s, rc.dim());
  close_out(out, o.out);
  write_coverage_summary(std::cout, s);
}

void cmd_plot(const Options& o) {
  const Fitted f = fit_from(o);
  const GridFunction& lam = f.pair.modified.lambda_hat;
  const GridFunction lam0 = f.rc.true_model().lambda0;
  const PluginTables pt = build_plugins(f.pair.modified, f.data, f.rc.error, f.rc.series);
  const int m = f.data.dim();
  std::vector<std::string> header{"t", "lambda_hat", "lambda_corrected", "lambda0", "b_hat"};
  for (int j = 1; j <= m; ++j) header.push_back("a_hat" + std::to_string(j));
  header.push_back("gc_hat");
  std::vector<std::vector<double>> rows;
  for (int j = 0; j <= lam.cells(); ++j) {
    const double t = lam.node(j);
    std::vector<double> row{t, lam.values()[j], f.pair.corrected.lambda_hat.values()[j],
                            lam0.evaluate(std::min(t, lam0.tau())), pt.abp.b[j]};
    for (int k = 0; k < m; ++k) row.push_back(pt.abp.a(k, j));
    row.push_back(pt.gc(t));
    rows.push_back(std::move(row));
  }
  std::ofstream out = open_out(o.out);
  write_table(out, header, rows);
  close_out(out, o.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cox regression with covariate measurement error: estimation and inference"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file (key = value)")->check(CLI::ExistingFile);
  };
  const auto out_opt = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output path")->required(); };
  const auto data_opt = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "draw a dataset from the configured model");
  common(simulate);
  out_opt(simulate);
  simulate->add_option("--n", o.n, "sample size");
  simulate->add_option("--seed", o.seed, "random seed");
  simulate->add_flag("--with-truth", o.with_truth, "include latent x, t, c columns");

  auto* fit = app.add_subcommand("fit", "corrected and modified estimators");
  common(fit);
  data_opt(fit);
  out_opt(fit);

  auto* beta = app.add_subcommand("infer-beta", "confidence ellipsoid for beta");
  common(beta);
  data_opt(beta);
  out_opt(beta);
  beta->add_option("--alpha", o.alpha, "one minus the confidence level");

  auto* functional = app.add_subcommand("infer-functional", "confidence interval for an integral of the hazard");
  common(functional);
  data_opt(functional);
  out_opt(functional);
  functional->add_option("--alpha", o.alpha, "one minus the confidence level");

  auto* coverage = app.add_subcommand("coverage", "Monte Carlo coverage of both confidence sets");
  common(coverage);
  out_opt(coverage);
  coverage->add_option("--replicates", o.replicates, "number of replicates");
  coverage->add_option("--seed", o.seed, "master seed");
  coverage->add_option("--n", o.n, "sample size per replicate");
  coverage->add_option("--alpha", o.alpha, "one minus the confidence level");
  coverage->add_option("--threads", o.threads, "worker threads");

  auto* plot = app.add_subcommand("plot", "CSV series of fitted curves for external plotting");
  common(plot);
  data_opt(plot);
  out_opt(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCode::Parse);
  }

  try {
    if (*simulate) cmd_simulate(o);
    else if (*fit) cmd_fit(o);
    else if (*beta) cmd_infer_beta(o);
    else if (*functional) cmd_infer_functional(o);
    else if (*coverage) cmd_coverage(o);
    else if (*plot) cmd_plot(o);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

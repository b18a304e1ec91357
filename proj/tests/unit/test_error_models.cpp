#include <doctest.h>

#include <cmath>
#include <random>

#include "coxerr/error.hpp"
#include "coxerr/error_models.hpp"
#include "coxerr/rng.hpp"
#include "support.hpp"

using namespace coxerr;
using coxerr::testing::RunningMean;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<ErrorModel> families() {
  return {ErrorModel::gaussian(2, 0.7), ErrorModel::uniform(vec({0.5, 1.3})),
          ErrorModel::poisson(vec({1.0, 2.5}))};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("error_models") {
  TEST_CASE("mgf at the origin and for the degenerate law") {
    CHECK(mgf(ErrorModel::none(3), vec({1.0, -2.0, 5.0})) == 1.0);
    CHECK(mgf(ErrorModel::gaussian(1, 1.0), vec({0.0})) == 1.0);
    for (const auto& m : families()) {
      CHECK(mgf(m, Eigen::VectorXd::Zero(m.dim)) == 1.0);
      CHECK(mgf_grad(m, Eigen::VectorXd::Zero(m.dim)).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("shifted Poisson mgf against Monte Carlo") {
    const auto model = ErrorModel::poisson(vec({1.0}));
    const double exact = std::exp(std::exp(0.3) - 1.0 - 0.3);
    CHECK(mgf(model, vec({0.3})) == doctest::Approx(exact).epsilon(1e-14));
    auto rng = stream(2024, 0);
    std::poisson_distribution<int> pois(1.0);
    RunningMean acc;
    for (int i = 0; i < 10'000'000; ++i) acc.add(std::exp(0.3 * (pois(rng) - 1.0)));
    CHECK(std::abs(acc.mean - exact) < 3.0 * acc.se());
  }

  TEST_CASE("closed-form gradients and second moments") {
    const auto g = ErrorModel::gaussian(2, 0.5);
    const Eigen::VectorXd grad = mgf_grad(g, vec({1.0, 0.0}));
    CHECK(grad[0] == doctest::Approx(0.25 * std::exp(0.125)).epsilon(1e-14));
    CHECK(grad[1] == 0.0);

    const auto p = ErrorModel::poisson(vec({2.0}));
    CHECK(mgf_grad(p, vec({0.1}))[0] ==
          doctest::Approx(2.0 * (std::exp(0.1) - 1.0) * mgf(p, vec({0.1}))).epsilon(1e-14));

    CHECK(mgf_hess(ErrorModel::gaussian(1, 1.0), vec({1.0}))(0, 0) ==
          doctest::Approx(2.0 * std::exp(0.5)).epsilon(1e-14));
    const Eigen::MatrixXd id = mgf_hess(ErrorModel::poisson(vec({1.0, 1.0})), vec({0.0, 0.0}));
    CHECK((id - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::MatrixXd cov = mgf_hess(ErrorModel::gaussian(3, 0.4), Eigen::VectorXd::Zero(3));
    CHECK((cov - 0.16 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    // Uniform(-a, a) has variance a^2 / 3.
    const Eigen::MatrixXd ucov = mgf_hess(ErrorModel::uniform(vec({0.6})), vec({0.0}));
    CHECK(ucov(0, 0) == doctest::Approx(0.12).epsilon(1e-14));
  }

  TEST_CASE("uniform mgf is smooth through the removable singularity") {
    const auto u = ErrorModel::uniform(vec({0.5}));
    for (double z : {1e-9, 1e-6, 9.9e-5 / 0.5, 1.01e-4 / 0.5, 1e-3}) {
      const double x = 0.5 * z;
      const double exact = 1.0 + x * x / 6.0 + x * x * x * x / 120.0 + std::pow(x, 6) / 5040.0;
      CHECK(mgf(u, vec({z})) == doctest::Approx(exact).epsilon(1e-15));
    }
  }

  TEST_CASE("derivatives match finite differences at random points") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(-1.5, 1.5);
    const double h = 1e-4;
    for (const auto& m : families()) {
      for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd z(m.dim);
        for (int i = 0; i < m.dim; ++i) z[i] = unif(gen);
        const Eigen::VectorXd grad = mgf_grad(m, z);
        const Eigen::MatrixXd hess = mgf_hess(m, z);
        for (int i = 0; i < m.dim; ++i) {
          Eigen::VectorXd e = Eigen::VectorXd::Zero(m.dim);
          e[i] = h;
          const double fd = (mgf(m, z + e) - mgf(m, z - e)) / (2 * h);
          CHECK(rel_err(grad[i], fd) < 1e-5);
          for (int j = 0; j < m.dim; ++j) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(m.dim);
            f[j] = h;
            const double fd2 = (mgf(m, z + e + f) - mgf(m, z + e - f) - mgf(m, z - e + f) +
                                mgf(m, z - e - f)) / (4 * h * h);
            CHECK(rel_err(hess(i, j), fd2) < 1e-5);
          }
        }
        CHECK(hess == hess.transpose());
        CHECK(mgf(m, z) >= 1.0);
        CHECK(tilted_second_moment(m, z) == tilted_second_moment(m, z).transpose());
      }
    }
  }

  TEST_CASE("series growth coefficient") {
    CHECK(series_growth_coef(ErrorModel::gaussian(1, 1.0), vec({0.0}), 5) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(series_growth_coef(ErrorModel::gaussian(2, 0.3), vec({0.5, -1.0}), 2) ==
          doctest::Approx((1 + 9 * 0.25 * 0.09) * 0.09 + (1 + 9 * 1.0 * 0.09) * 0.09).epsilon(1e-14));
    CHECK(series_growth_coef(ErrorModel::uniform(vec({0.5})), vec({1.0}), 3) <= 0.25);
    CHECK(series_growth_coef(ErrorModel::none(2), vec({1.0, 1.0}), 3) == 0.0);

    const auto p = ErrorModel::poisson(vec({1.0}));
    const double exact = std::pow(std::exp(0.6) - 1.0, 2) + std::exp(0.6);
    CHECK(series_growth_coef(p, vec({0.2}), 2) == doctest::Approx(exact).epsilon(1e-13));
    // Monte Carlo of E[U^2 e^{0.6 U}] / E[e^{0.6 U}] with U = Pois(1) - 1.
    auto rng = stream(99, 0);
    std::poisson_distribution<int> pois(1.0);
    const double m3 = mgf(p, vec({0.6}));
    RunningMean acc;
    for (int i = 0; i < 10'000'000; ++i) {
      const double u = pois(rng) - 1.0;
      acc.add(u * u * std::exp(0.6 * u) / m3);
    }
    CHECK(std::abs(acc.mean - exact) < 3.0 * acc.se());

    CHECK_THROWS_AS(series_growth_coef(p, vec({10.0}), 100), Error);
    try {
      series_growth_coef(p, vec({10.0}), 100);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SeriesOverflow);
    }
  }

  TEST_CASE("growth series is summable over a bounded beta box") {
    // sum_k a_{k+1}(beta) A^k / k! converges for A = 1, |beta_i| <= 1.
    for (const auto& m : families()) {
      for (double b : {-1.0, -0.3, 0.4, 1.0}) {
        const Eigen::VectorXd beta = Eigen::VectorXd::Constant(m.dim, b);
        double sum = 0.0;
        double last = 0.0;
        for (int k = 0; k <= 200; ++k) {
          const double coef = series_growth_coef(m, beta, k);
          last = std::exp(std::log(coef) - std::lgamma(k + 1.0));
          sum += last;
        }
        CHECK(std::isfinite(sum));
        CHECK(last < 1e-12 * sum);
      }
    }
  }

  TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(ErrorModel::gaussian(2, 0.0).validate(), Error);
    CHECK_THROWS_AS(ErrorModel::uniform(vec({0.5, -1.0})).validate(), Error);
    CHECK_THROWS_AS(ErrorModel::poisson(vec({0.0})).validate(), Error);
  }
}

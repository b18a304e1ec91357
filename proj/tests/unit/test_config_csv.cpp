#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <limits>
#include <sstream>

#include "coxerr/config.hpp"
#include "coxerr/csv.hpp"
#include "coxerr/error.hpp"
#include "support.hpp"

using namespace coxerr;

namespace {

// Code and message of the error raised by f.
template <typename F>
std::pair<ErrorCode, std::string> failure(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  FAIL("no error raised");
  return {ErrorCode::InvalidArgument, ""};
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_SUITE("config_csv") {
  TEST_CASE("config file parsing") {
    const ConfigFile f = ConfigFile::parse(
        "# comment line\n"
        "\n"
        "model.tau = 2.0   # trailing comment\n"
        "model.beta0 = 0.5, -0.25, 1\n"
        "error.family=uniform\n"
        "run.n = 250\n");
    CHECK(f.real("model.tau") == 2.0);
    CHECK(*f.list("model.beta0") == std::vector<double>{0.5, -0.25, 1.0});
    CHECK(f.text("error.family") == "uniform");
    CHECK(f.integer("run.n") == 250);
    CHECK(!f.real("missing").has_value());
    CHECK(f.entries().at("run.n").line == 6);

    auto [code, msg] = failure([] { ConfigFile::parse("a = 1\nb = 2\na = 3\n"); });
    CHECK(code == ErrorCode::Parse);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("'a'") != std::string::npos);
    CHECK(failure([] { ConfigFile::parse("just words\n"); }).first == ErrorCode::Parse);
    CHECK(failure([] { ConfigFile::parse("k =\n"); }).first == ErrorCode::Parse);
    CHECK(failure([] { ConfigFile::parse("= 4\n"); }).first == ErrorCode::Parse);
    const ConfigFile bad_number = ConfigFile::parse("x = 1.5abc\n");
    CHECK(failure([&] { bad_number.real("x"); }).second.find("'x'") != std::string::npos);
  }

  TEST_CASE("run configuration defaults, keys and validation") {
    const RunConfig def = RunConfig::from(ConfigFile{});
    CHECK(def.fit.grid == 100);
    CHECK(def.series.max_terms == 80);
    CHECK(def.series.tail_tol == 1e-10);
    CHECK(def.alpha == 0.05);
    CHECK(def.margin == 0.2);
    CHECK(def.fit.radius == doctest::Approx(15.0));
    CHECK(def.fit_config(1000).epsilon_n == doctest::Approx(1e-3));
    CHECK(def.weight().support_end() == doctest::Approx(0.8));
    CHECK(def.inference.variance_scale == 1.0);

    const RunConfig rc = RunConfig::from(ConfigFile::parse(
        "model.tau = 2\nmodel.beta0 = 0.3\nerror.family = poisson\nerror.intensities = 0.7\n"
        "grid.size = 40\noptimizer.R = 9\ninference.alpha = 0.1\nrun.seed = 42\n"
        "inference.variance_scale = 4\n"));
    CHECK(rc.tau == 2.0);
    CHECK(rc.dim() == 1);
    CHECK(rc.error.family == ErrorFamily::ShiftedPoisson);
    CHECK(rc.error.params[0] == 0.7);
    CHECK(rc.fit.grid == 40);
    CHECK(rc.fit.radius == 9.0);
    CHECK(rc.alpha == 0.1);
    CHECK(rc.seed == 42u);
    CHECK(rc.inference.variance_scale == 4.0);
    CHECK(rc.weight().support_end() == doctest::Approx(1.6));
    CHECK(rc.true_model().lambda0.cells() == 40);

    auto [code, msg] = failure([] { RunConfig::from(ConfigFile::parse("model.tau = 1\nerror.sgima = 0.3\n")); });
    CHECK(code == ErrorCode::Parse);
    CHECK(msg.find("error.sgima") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(failure([] { RunConfig::from(ConfigFile::parse("error.sigma = -1\n")); }).second.find("error.sigma") !=
          std::string::npos);
    CHECK(failure([] { RunConfig::from(ConfigFile::parse("error.family = laplace\n")); }).second.find(
              "error.family") != std::string::npos);
    CHECK(failure([] { RunConfig::from(ConfigFile::parse("inference.alpha = 1.5\n")); }).first == ErrorCode::Parse);
    CHECK(failure([] { RunConfig::from(ConfigFile::parse("model.beta0 = 1, 2, 3\nerror.halfwidths = 1, 2\n"
                                                         "error.family = uniform\n")); })
              .second.find("error.halfwidths") != std::string::npos);
    CHECK(failure([] { RunConfig::load("/nonexistent/config.cfg"); }).first == ErrorCode::Io);
  }

  TEST_CASE("numbers round-trip bit-exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 5e-324, 123456789.125, -2.5e17, 0.0,
                     std::numeric_limits<double>::max(), std::nextafter(1.0, 2.0)}) {
      const std::string s = format_number(v);
      CHECK(same_bits(std::strtod(s.c_str(), nullptr), v));
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  }

  TEST_CASE("dataset CSV round trip with and without truth") {
    const TrueModel model = testing::default_model(ErrorModel::gaussian(2, 0.3));
    const Dataset d = draw_dataset(model, 300, 3);
    std::stringstream plain, full;
    write_dataset(plain, d, false);
    write_dataset(full, d, true);
    CHECK(plain.str().substr(0, plain.str().find('\n')) == "y,delta,w1,w2");
    CHECK(full.str().substr(0, full.str().find('\n')) == "y,delta,w1,w2,x1,x2,t,c");

    const Dataset a = read_dataset(plain, 1.0);
    const Dataset b = read_dataset(full, 1.0);
    REQUIRE(a.size() == d.size());
    CHECK(!a.hidden.has_value());
    REQUIRE(b.hidden.has_value());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(same_bits(a.records[i].y, d.records[i].y));
      CHECK(a.records[i].delta == d.records[i].delta);
      CHECK(same_bits(a.records[i].w[1], d.records[i].w[1]));
      CHECK(same_bits((*b.hidden)[i].t, (*d.hidden)[i].t));
      CHECK(same_bits((*b.hidden)[i].x[0], (*d.hidden)[i].x[0]));
    }
    std::stringstream again;
    write_dataset(again, b, true);
    CHECK(again.str() == full.str());
  }

  TEST_CASE("malformed data is rejected with its line number") {
    const auto read = [](const std::string& text) {
      std::istringstream in(text);
      return read_dataset(in, 1.0);
    };
    auto [code, msg] = failure([&] { read("y,delta,w1\n0.5,1,0.2\n0.7,2,0.1\n"); });
    CHECK(code == ErrorCode::Parse);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(failure([&] { read("y,delta,w1\n1.5,1,0.2\n"); }).second.find("line 2") != std::string::npos);
    CHECK(failure([&] { read("y,delta,w1\n0.5,1\n"); }).first == ErrorCode::Parse);
    CHECK(failure([&] { read("y,delta,w1\n0.5,1,abc\n"); }).first == ErrorCode::Parse);
    CHECK(failure([&] { read("y,d,w1\n0.5,1,0\n"); }).first == ErrorCode::Parse);
    CHECK(failure([&] { read("y,delta,w1\n"); }).first == ErrorCode::Parse);
    CHECK(read("y,delta,w1\r\n0.25,0,-1\r\n").records[0].y == 0.25);
  }
}

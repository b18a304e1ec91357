#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

// Scratch directory removed when the test process exits.
struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("coxerr_cli_" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

const fs::path& workdir() {
  static const Scratch scratch;
  return scratch.dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

// Runs the CLI with stderr captured to `err`; returns the exit status.
int run(const std::string& args, std::string* err = nullptr) {
  const std::string err_path = path("stderr.txt");
  const std::string cmd = std::string(COXERR_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(err_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    *err = buf.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const char* kSmall =
    "grid.size = 20\n"
    "model.beta0 = 0.5, -0.5\n"
    "error.family = gaussian\n"
    "error.sigma = 0.3\n"
    "run.n = 300\n";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate is deterministic and can include the truth") {
    write(path("small.cfg"), kSmall);
    const std::string cfg = " --config " + path("small.cfg");
    REQUIRE(run("simulate" + cfg + " --n 10 --seed 7 --out " + path("a.csv")) == 0);
    REQUIRE(run("simulate" + cfg + " --n 10 --seed 7 --out " + path("b.csv")) == 0);
    const std::string a = slurp(path("a.csv"));
    CHECK(count_lines(a) == 11);
    CHECK(a == slurp(path("b.csv")));
    CHECK(a.substr(0, a.find('\n')) == "y,delta,w1,w2");
    REQUIRE(run("simulate" + cfg + " --n 10 --seed 8 --out " + path("c.csv")) == 0);
    CHECK(a != slurp(path("c.csv")));

    REQUIRE(run("simulate" + cfg + " --n 10 --seed 7 --with-truth --out " + path("t.csv")) == 0);
    const std::string t = slurp(path("t.csv"));
    CHECK(t.substr(0, t.find('\n')) == "y,delta,w1,w2,x1,x2,t,c");
  }

  TEST_CASE("fit, inference and plot outputs") {
    write(path("small.cfg"), kSmall);
    const std::string cfg = " --config " + path("small.cfg");
    REQUIRE(run("simulate" + cfg + " --seed 3 --out " + path("d.csv")) == 0);
    const std::string data = " --data " + path("d.csv");

    REQUIRE(run("fit" + cfg + data + " --out " + path("fit.txt")) == 0);
    const std::string fit = slurp(path("fit.txt"));
    CHECK(fit.find("modified.beta_hat = ") != std::string::npos);
    CHECK(fit.find("corrected.objective = ") != std::string::npos);
    CHECK(count_lines(slurp(path("fit.txt.lambda.csv"))) == 22);

    REQUIRE(run("infer-beta" + cfg + data + " --alpha 0.1 --out " + path("beta.txt")) == 0);
    const std::string beta = slurp(path("beta.txt"));
    CHECK(beta.find("alpha = 0.1\n") != std::string::npos);
    CHECK(beta.find("shape.row2 = ") != std::string::npos);
    CHECK(beta.find("radius2 = ") != std::string::npos);

    REQUIRE(run("infer-functional" + cfg + data + " --out " + path("fun.txt")) == 0);
    const std::string fun = slurp(path("fun.txt"));
    CHECK(fun.find("lo = ") != std::string::npos);
    CHECK(fun.find("hi = ") != std::string::npos);
    CHECK(fun.find("support_end = 0.8\n") != std::string::npos);
    CHECK(count_lines(slurp(path("fun.txt.phi.csv"))) == 22);

    REQUIRE(run("plot" + cfg + data + " --out " + path("plot.csv")) == 0);
    const std::string plot = slurp(path("plot.csv"));
    CHECK(plot.substr(0, plot.find('\n')) == "t,lambda_hat,lambda_corrected,lambda0,b_hat,a_hat1,a_hat2,gc_hat");
    CHECK(count_lines(plot) == 22);
  }

  TEST_CASE("coverage with a single replicate") {
    write(path("small.cfg"), kSmall);
    REQUIRE(run("coverage --config " + path("small.cfg") + " --replicates 1 --seed 5 --out " + path("cov.csv")) == 0);
    CHECK(count_lines(slurp(path("cov.csv"))) == 2);
    const std::string summary = slurp(path("stdout.txt"));
    CHECK(summary.find("replicates = 1") != std::string::npos);
  }

  TEST_CASE("errors map to distinct exit codes with diagnostics") {
    std::string err;
    write(path("bad.cfg"), "model.tau = 1\nerror.sigmaa = 0.3\n");
    CHECK(run("simulate --config " + path("bad.cfg") + " --out " + path("x.csv"), &err) == 2);
    CHECK(err.find("error.sigmaa") != std::string::npos);

    write(path("badval.cfg"), "grid.size = zero\n");
    CHECK(run("simulate --config " + path("badval.cfg") + " --out " + path("x.csv"), &err) == 2);
    CHECK(err.find("grid.size") != std::string::npos);

    write(path("cens.csv"), "y,delta,w1,w2\n0.2,0,0.1,0.3\n0.5,0,-0.2,0.4\n");
    write(path("small.cfg"), kSmall);
    CHECK(run("fit --config " + path("small.cfg") + " --data " + path("cens.csv") + " --out " + path("f.txt"),
              &err) == 3);
    CHECK(err.find("NoEvents") != std::string::npos);

    write(path("broken.csv"), "y,delta,w1,w2\n0.2,1,0.1\n");
    CHECK(run("fit --config " + path("small.cfg") + " --data " + path("broken.csv") + " --out " + path("f.txt"),
              &err) == 2);
    CHECK(err.find("line 2") != std::string::npos);

    CHECK(run("fit --out " + path("f.txt")) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("simulate --out /nonexistent/dir/x.csv") == 14);
  }
}

#include "slowfast/experiment.hpp"

#include "slowfast/csv.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("slowfast_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name,
                      const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallValidate = R"(
[experiment]
kind = gaussian-validate
plots = false
[multiscale]
epsilon = 0.1
delta = 0.01
particles = 1
horizon = 200
seed = 42
burn_in = 2000
thinning = 2
[data]
values = 1, 3
)";

}  // namespace

TEST_CASE("config round trip through the canonical form") {
  const fs::path dir = temp_dir("roundtrip");
  const fs::path p = write_config(dir, "cfg.txt", kSmallValidate);
  ExperimentConfig cfg = ExperimentConfig::load(p);
  CHECK(cfg.kind == ExperimentKind::GaussianValidate);
  CHECK(cfg.ms.epsilon == 0.1);
  CHECK(cfg.data.values == std::vector<double>{1.0, 3.0});

  const std::string canon = cfg.serialize();
  const fs::path p2 = write_config(dir, "canon.txt", canon);
  ExperimentConfig cfg2 = ExperimentConfig::load(p2);
  CHECK(cfg2.serialize() == canon);
  fs::remove_all(dir);
}

TEST_CASE("strict parsing rejects malformed input") {
  const fs::path dir = temp_dir("strict");
  SUBCASE("unknown key") {
    const auto p = write_config(dir, "a.txt",
                                std::string(kSmallValidate) + "typo_key = 3\n");
    CHECK_THROWS_AS(ExperimentConfig::load(p), ConfigError);
  }
  SUBCASE("unknown section") {
    const auto p = write_config(
        dir, "b.txt", std::string(kSmallValidate) + "[train]\nblur = 0.1\n");
    CHECK_THROWS_AS(ExperimentConfig::load(p), ConfigError);
  }
  SUBCASE("duplicate key") {
    const auto p = write_config(
        dir, "c.txt", std::string(kSmallValidate) + "[extra]\nk = 1\nk = 2\n");
    CHECK_THROWS_AS(ExperimentConfig::load(p), ConfigError);
  }
  SUBCASE("negative epsilon") {
    std::string text = kSmallValidate;
    const auto pos = text.find("epsilon = 0.1");
    text.replace(pos, 13, "epsilon = -1 ");
    const auto p = write_config(dir, "d.txt", text);
    CHECK_THROWS_AS(ExperimentConfig::load(p), ConfigError);
  }
  SUBCASE("missing value line") {
    const auto p = write_config(dir, "e.txt",
                                std::string(kSmallValidate) + "dangling\n");
    CHECK_THROWS_AS(ExperimentConfig::load(p), ConfigError);
  }
  fs::remove_all(dir);
}

TEST_CASE("malformed config leaves no outputs and exits with the config code") {
  const fs::path dir = temp_dir("noout");
  std::string text = kSmallValidate;
  const auto pos = text.find("epsilon = 0.1");
  text.replace(pos, 13, "epsilon = -1 ");
  const auto p = write_config(dir, "bad.txt", text);
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", true}, log);
  CHECK(status == kExitConfigError);
  CHECK_FALSE(fs::exists(dir / "out" / "metrics.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.txt"));
  fs::remove_all(dir);
}

TEST_CASE("validate experiment writes metrics, manifest and verdicts") {
  const fs::path dir = temp_dir("validate");
  const auto p = write_config(dir, "cfg.txt", kSmallValidate);
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", false}, log);
  CHECK(status == kExitOk);

  const CsvTable t = CsvTable::read(dir / "out" / "metrics.csv");
  REQUIRE(t.columns.size() == 10);
  CHECK(t.column("theta_mean") >= 0);
  CHECK(t.column("oracle_var") >= 0);
  REQUIRE(!t.rows.empty());
  const auto& last = t.rows.back();
  CHECK(last[t.column("mean_ok")] == "1");
  CHECK(last[t.column("var_ok")] == "1");
  CHECK(t.number(t.rows.size() - 1, t.column("oracle_var")) ==
        doctest::Approx(1.2));

  const std::string manifest = read_file(dir / "out" / "manifest.txt");
  CHECK(manifest.find("[run]") != std::string::npos);
  CHECK(manifest.find("status = ok") != std::string::npos);

  SUBCASE("re-running the manifest reproduces metrics byte for byte") {
    const std::string first = read_file(dir / "out" / "metrics.csv");
    std::ostringstream log2;
    const int status2 = run_experiment(dir / "out" / "manifest.txt",
                                       {{}, dir / "out2", false}, log2);
    CHECK(status2 == kExitOk);
    CHECK(read_file(dir / "out2" / "metrics.csv") == first);
  }
  SUBCASE("plots are emitted from the metrics file") {
    std::string text = kSmallValidate;
    const auto pos = text.find("plots = false");
    text.replace(pos, 13, "plots = true ");
    const auto with_plots = write_config(dir, "plots.txt", text);
    std::ostringstream log3;
    CHECK(run_experiment(with_plots, {{}, dir / "plotted", false}, log3) ==
          kExitOk);
    CHECK(fs::exists(dir / "plotted" / "theta_mean.svg"));
    CHECK(fs::exists(dir / "plotted" / "theta_var.svg"));
    const std::string svg = read_file(dir / "plotted" / "theta_mean.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
  }
  SUBCASE("excessive burn-in is rejected up front") {
    std::string text = kSmallValidate;
    const auto pos = text.find("burn_in = 2000");
    text.replace(pos, 14, "burn_in = 99999");
    const auto bad = write_config(dir, "burn.txt", text);
    CHECK_THROWS_AS(ExperimentConfig::load(bad), ConfigError);
  }
  fs::remove_all(dir);
}

TEST_CASE("seed override changes the run, repeated seed does not") {
  const fs::path dir = temp_dir("seed");
  const auto p = write_config(dir, "cfg.txt", kSmallValidate);
  std::ostringstream log;
  run_experiment(p, {std::uint64_t{1}, dir / "a", true}, log);
  run_experiment(p, {std::uint64_t{1}, dir / "b", true}, log);
  run_experiment(p, {std::uint64_t{2}, dir / "c", true}, log);
  CHECK(read_file(dir / "a" / "metrics.csv") ==
        read_file(dir / "b" / "metrics.csv"));
  CHECK(read_file(dir / "a" / "metrics.csv") !=
        read_file(dir / "c" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST_CASE("threaded scan output is independent of the worker count") {
  const fs::path dir = temp_dir("threads");
  const auto p = write_config(dir, "cfg.txt", R"(
[experiment]
kind = order-scan
plots = false
[multiscale]
epsilon = 0.5
seed = 9
[data]
values = 1, 3
[scan]
deltas = 4e-3, 2e-3, 1e-3
replicas = 20000
t_final = 0.5
observable = theta2
integrator = em
theta0 = 0
x0 = 3
)");
  std::ostringstream log;
  setenv("SLOWFAST_THREADS", "1", 1);
  run_experiment(p, {{}, dir / "one", true}, log);
  setenv("SLOWFAST_THREADS", "4", 1);
  run_experiment(p, {{}, dir / "four", true}, log);
  unsetenv("SLOWFAST_THREADS");
  CHECK(read_file(dir / "one" / "metrics.csv") ==
        read_file(dir / "four" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST_CASE("stability scan experiment") {
  const fs::path dir = temp_dir("stability");
  const auto p = write_config(dir, "cfg.txt", R"(
[experiment]
kind = stability-scan
plots = false
[multiscale]
epsilon = 1e-3
[scan]
integrators = em, srock:2
steps = 4000
)");
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", true}, log);
  CHECK(status == kExitOk);
  const CsvTable t = CsvTable::read(dir / "out" / "metrics.csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.number(0, t.column("theory")) == doctest::Approx(2.0));
  CHECK(t.number(1, t.column("theory")) == doctest::Approx(8.0));
  CHECK(t.rows[0][t.column("ok")] == "1");
  CHECK(t.rows[1][t.column("ok")] == "1");
  fs::remove_all(dir);
}

TEST_CASE("degenerate single-component training recovers the data mean") {
  const fs::path dir = temp_dir("train1d");
  const auto p = write_config(dir, "cfg.txt", R"(
[experiment]
kind = banana-train
integrator = srock
plots = false
[multiscale]
epsilon = 0.1
delta = 2e-3
particles = 64
stages = 3
horizon = 6
seed = 31
[model]
kind = mog
dim = 1
components = 1
scale = 1.0
[data]
source = inline
values = 1.4, 2.6, 2.0, 1.0, 3.0
[train]
checkpoint_interval = 500
blur = 0.2
init_spread = 1.5
target_ratio = 0.95
min_monotone_frac = 0.0
)");
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", false}, log);
  CHECK(status == kExitOk);
  // the final mean snapshot sits near the data mean; the averaged flow is
  // (ybar - theta)/c^2 with stationary spread 2/(N c^2) around it
  const CsvTable t = CsvTable::read(dir / "out" / "theta_003000.csv");
  REQUIRE(t.rows.size() == 1);
  // the averaged flow is OU around ybar = 2 with sd c/sqrt(N) = 0.125
  CHECK(std::abs(t.number(0, 0) - 2.0) < 0.4);
  fs::remove_all(dir);
}

TEST_CASE("divergent training aborts with the divergence status") {
  const fs::path dir = temp_dir("diverge");
  const auto p = write_config(dir, "cfg.txt", R"(
[experiment]
kind = banana-train
integrator = em
plots = false
[multiscale]
epsilon = 1e-4
delta = 0.05
particles = 16
horizon = 5
seed = 3
[model]
kind = mog
dim = 2
components = 2
scale = 0.5
[data]
source = banana
count = 32
holdout = 32
[train]
checkpoint_interval = 10
)");
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", true}, log);
  CHECK(status == kExitDivergence);
  // checkpoint trail preserved
  CHECK(fs::exists(dir / "out" / "samples_000000.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.txt"));
  const std::string manifest = read_file(dir / "out" / "manifest.txt");
  CHECK(manifest.find("status = diverged") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("output root environment variable anchors relative out_dirs") {
  const fs::path dir = temp_dir("outroot");
  const auto p = write_config(dir, "cfg.txt", kSmallValidate);
  setenv("SLOWFAST_OUT_ROOT", dir.c_str(), 1);
  std::ostringstream log;
  const int status = run_experiment(p, {{}, {}, true}, log);
  unsetenv("SLOWFAST_OUT_ROOT");
  CHECK(status == kExitOk);
  CHECK(fs::exists(dir / "runs" / "gaussian-validate" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST_CASE("csv data source feeds a run") {
  const fs::path dir = temp_dir("csvdata");
  {
    std::ofstream pts(dir / "points.csv");
    pts << "y\n1\n3\n";
  }
  std::string text = kSmallValidate;
  const auto pos = text.find("values = 1, 3");
  text.replace(pos, 13,
               "source = csv\npath = " + (dir / "points.csv").string());
  const auto p = write_config(dir, "cfg.txt", text);
  std::ostringstream log;
  const int status = run_experiment(p, {{}, dir / "out", true}, log);
  CHECK(status == kExitOk);
  const CsvTable t = CsvTable::read(dir / "out" / "metrics.csv");
  CHECK(t.number(t.rows.size() - 1, t.column("oracle_mean")) ==
        doctest::Approx(2.0));
  fs::remove_all(dir);
}

TEST_CASE("csv formatting round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 2e17, -0.0, 1.2}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include "helpers.hpp"
#include "slowfast/core.hpp"
#include "slowfast/csv.hpp"
#include "slowfast/diagnostics.hpp"
#include "slowfast/experiment.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/models.hpp"
#include "slowfast/oracle.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

int g_failures = 0;

void run_criterion(int id, const std::string& name,
                   const std::function<void(Check&)>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Check check;
  try {
    fn(check);
  } catch (const std::exception& e) {
    check.pass = false;
    check.note(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!check.pass) ++g_failures;
  std::printf("[%s] criterion %2d: %-38s (%6.1f s)%s%s\n",
              check.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              check.detail.empty() ? "" : " -- ", check.detail.c_str());
  std::fflush(stdout);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("slowfast_acc_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

char fmt_buf[256];
std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  std::snprintf(fmt_buf, sizeof(fmt_buf), pattern, a, b, c);
  return fmt_buf;
}

// --------------------------------------------------------------------------

void gaussian_stationary_moments(Check& check) {
  GaussianMeanModel model(1);
  const Dataset data = Dataset::from_scalars({1.0, 3.0});
  MultiscaleConfig cfg;
  cfg.epsilon = 0.1;
  cfg.delta = 1e-3;
  cfg.n_particles = 1;
  cfg.horizon = 2000.0;
  cfg.seed = 20240601;
  cfg.burn_in = 200000;  // first 200 time units
  cfg.thinning = 10;
  SystemState state{Vec::Constant(1, 2.0), Vec::Constant(1, 2.0), 1, 0.0};
  const TrajectoryRecord rec =
      run_trajectory(Integrator::EulerMaruyama, state, model, data, cfg);
  check.require(!rec.diverged, "trajectory diverged");
  std::vector<double> series(rec.thetas.size());
  for (std::size_t i = 0; i < series.size(); ++i) series[i] = rec.thetas[i][0];
  const double mean = sample_mean(series);
  const double var = sample_variance(series);
  const double mean_se = batch_means_stderr(series);
  const double var_se = batch_variance_stderr(series);
  check.require(std::abs(mean - 2.0) <= 3.0 * mean_se,
                fmt("mean %.4f vs 2 (se %.4f)", mean, mean_se));
  check.require(std::abs(var - 1.2) <= 3.0 * var_se,
                fmt("var %.4f vs 1.2 (se %.4f)", var, var_se));
  check.note(fmt("mean %.4f+-%.4f", mean, mean_se));
  check.note(fmt("var %.4f+-%.4f", var, var_se));
}

void oracle_regression(Check& check) {
  for (double eps : {1.0, 0.5, 0.1, 0.01}) {
    const LinearOracle oracle(eps, 1, 0.3);
    const Mat s = oracle.stationary_cov();
    Mat expected(2, 2);
    expected << eps * 2.0 + 1.0, 1.0, 1.0, 2.0;
    check.require((s - expected).cwiseAbs().maxCoeff() < 1e-10,
                  fmt("closed form mismatch at eps %.2f", eps));
    for (int n = 1; n <= 8; ++n) {
      const LinearOracle o(eps, n, -0.7);
      const Mat cov = o.stationary_cov();
      const double res = (o.drift_matrix() * cov +
                          cov * o.drift_matrix().transpose() - o.diffusion())
                             .norm();
      check.require(res < 1e-10, fmt("residual %.2e at N %.0f", res, n));
    }
  }
}

void averaging_gap(Check& check) {
  AveragingGapSpec spec;
  spec.eps_list = {0.4, 0.2, 0.1};
  spec.n_particles = 1;
  spec.stages = 3;
  spec.delta = 5e-3;
  spec.horizon = 2000.0;
  spec.burn_in_time = 50.0;
  spec.replicas = 32;
  spec.seed = 1129;
  const Dataset data = Dataset::from_scalars({1.0, 3.0});
  const AveragingGapResult res = averaging_gap_scan(data, spec);
  check.require(std::abs(res.oracle_estimate.slope - 1.0) <= 1e-6,
                fmt("oracle slope %.8f", res.oracle_estimate.slope));
  for (const auto& pt : res.points) {
    check.require(std::abs(pt.sim_gap - pt.oracle_gap) <= 3.0 * pt.sim_se,
                  fmt("eps %.2f sim gap %.4f vs oracle %.4f", pt.epsilon,
                      pt.sim_gap, pt.oracle_gap));
  }
  check.note(fmt("oracle slope %.8f", res.oracle_estimate.slope));
}

void weak_order(Check& check) {
  // Free parameters (data scale, start point, replica count) are pinned so
  // the O(delta) bias at the finest step clears the Monte Carlo noise by
  // about nine standard errors under the shared Brownian paths.
  WeakOrderSpec spec;
  spec.integrator = Integrator::EulerMaruyama;
  spec.observable = Observable::ThetaSquared;
  spec.t_final = 1.0;
  spec.deltas = {4e-3, 2e-3, 1e-3, 5e-4};
  spec.replicas = 200000;
  spec.epsilon = 0.5;
  spec.n_particles = 1;
  spec.theta0 = 0.0;
  spec.x0 = 600.0;
  spec.seed = 417;
  const Dataset data = Dataset::from_scalars({100.0, 300.0});
  const WeakOrderResult res = weak_order_scan(data, spec);
  check.require(res.estimate.slope >= 0.8 && res.estimate.slope <= 1.2,
                fmt("slope %.3f outside [0.8, 1.2]", res.estimate.slope));
  check.note(fmt("slope %.3f +- %.3f", res.estimate.slope,
                 res.estimate.slope_halfwidth));
  check.note(fmt("smallest error %.2e (se %.1e)", res.points.back().error,
                 res.points.back().std_error));
}

void stability_boundaries(Check& check) {
  {
    StabilitySpec spec;
    spec.integrator = Integrator::EulerMaruyama;
    const double b = stability_scan(spec);
    check.require(std::abs(b - 2.0) <= 0.2, fmt("em boundary %.3f", b));
    check.note(fmt("em %.2f", b));
  }
  double prev = 0.0;
  for (int m : {2, 3, 5}) {
    StabilitySpec spec;
    spec.integrator = Integrator::SRock;
    spec.stages = m;
    const double b = stability_scan(spec);
    const double theory = 2.0 * m * m;
    check.require(std::abs(b - theory) <= 0.1 * theory,
                  fmt("m %.0f boundary %.2f vs %.0f", m, b, theory));
    check.require(b > prev, "boundary not increasing in m");
    prev = b;
    check.note(fmt("m=%.0f: %.1f", m, b));
  }
  // amplification factor against the stage recursion itself
  NoiseStream stream(88, 0);
  Vec draws(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    stream.fill_uniforms(trial, 0, draws);
    const int m = 2 + static_cast<int>(draws[0] * 9.0);
    const double p = draws[1] * 2.0 * m * m;
    const double delta = 0.21;
    Vec u = Vec::Constant(1, 1.0), k_prev, k_cur, g;
    const double lambda = p / delta;
    chebyshev_stage_recursion(
        m, delta, [lambda](const Vec& v, Vec& out) { out = -lambda * v; },
        Vec::Zero(1), u, k_prev, k_cur, g);
    worst = std::max(worst, std::abs(u[0] - chebyshev_amplification(m, p)));
  }
  check.require(worst < 1e-12, fmt("recursion mismatch %.2e", worst));
}

void noise_calibration(Check& check) {
  test::ZeroEnergyModel flat(1, 1);
  const Dataset data = Dataset::from_scalars({0.0});
  MultiscaleConfig cfg;
  cfg.epsilon = 0.05;
  cfg.delta = 0.01;
  cfg.n_particles = 1;
  cfg.stages = 3;
  NoiseStream stream(2024, 0);
  NoiseDraw noise{Vec(1), Vec(1)};
  StepWorkspace ws;
  ScalarMoments dtheta, dz;
  const std::int64_t draws = 1000000;
  SystemState state{Vec::Zero(1), Vec::Zero(1), 1, 0.0};
  for (std::int64_t i = 0; i < draws; ++i) {
    draw_noise(stream, static_cast<std::uint64_t>(i), noise);
    SystemState s = state;
    srock_step(s, flat, data, cfg, noise, ws);
    dtheta.add(s.theta[0]);
    dz.add(s.z[0]);
  }
  const double var_theta = dtheta.variance();
  const double var_z = dz.variance();
  const double expect_theta = 2.0 * cfg.delta / cfg.n_particles;
  const double expect_z = 2.0 * cfg.delta / cfg.epsilon;
  const double se_theta = expect_theta * std::sqrt(2.0 / draws);
  const double se_z = expect_z * std::sqrt(2.0 / draws);
  check.require(std::abs(var_theta - expect_theta) <= 4.0 * se_theta,
                fmt("theta one-step var %.6f vs %.6f", var_theta, expect_theta));
  check.require(std::abs(var_z - expect_z) <= 4.0 * se_z,
                fmt("z one-step var %.4f vs %.4f", var_z, expect_z));
  check.note(fmt("theta var %.5f (want %.5f)", var_theta, expect_theta));
}

void moment_audit_criterion(Check& check) {
  GaussianMeanModel model(1);
  const std::vector<double> theta_values{0.0, 2.0, 5.0};
  std::vector<Vec> theta_grid;
  for (double t : theta_values) theta_grid.push_back(Vec::Constant(1, t));
  const auto probe =
      probe_dissipativity(model, theta_grid, grid_1d(-12.0, 12.0, 961));
  const int idx = probe.candidate_index(0.5);
  check.require(idx >= 0 && probe.admissible[idx], "probe rejected r = 0.5");
  for (std::size_t t = 0; t < theta_values.size(); ++t) {
    const double b_expected = 0.5 * theta_values[t] * theta_values[t];
    check.require(std::abs(probe.b_curve[idx][static_cast<Eigen::Index>(t)] -
                           b_expected) < 1e-9,
                  fmt("probe b at theta %.0f", theta_values[t]));
  }
  const int n_particles = 4;
  for (std::size_t t = 0; t < theta_values.size(); ++t) {
    FrozenEnsembleSpec spec;
    spec.theta = theta_grid[t];
    spec.z0 = Vec::Zero(n_particles);
    spec.n_particles = n_particles;
    spec.delta = 0.01;
    spec.horizon = 20.0;
    spec.replicas = 10000;
    spec.checkpoints = 40;
    spec.seed = 555 + t;
    const FrozenMomentSeries series = frozen_moment_ensemble(model, spec);
    const double b_tilde = probe.b_curve[idx][static_cast<Eigen::Index>(t)];
    for (int k : {2, 4}) {
      const MomentAudit audit = moment_bound_audit(series, k, 0.5, b_tilde);
      check.require(audit.pass, fmt("violated at theta %.0f k %.0f (margin %.3g)",
                                    theta_values[t], k, audit.worst_margin));
    }
  }
}

void gradient_integrity(Check& check) {
  NoiseStream stream(606, 0);
  const Dataset data2(BananaDistribution::sample(6, stream, 5000));
  double worst = 0.0;
  auto probe_model = [&](const EnergyModel& model, std::uint64_t salt) {
    for (int probe = 0; probe < 100; ++probe) {
      const Vec theta =
          test::random_vec(stream, salt + probe, model.theta_dim(), 2.0);
      const Vec x =
          test::random_vec(stream, salt + 500 + probe, model.sample_dim(), 2.0);
      Vec gt(model.theta_dim()), gx(model.sample_dim());
      model.grad_theta(theta, x, gt);
      model.grad_x(theta, x, gx);
      const Vec fd_t = test::fd_gradient(
          [&](const Vec& v) { return model.energy(v, x); }, theta);
      const Vec fd_x = test::fd_gradient(
          [&](const Vec& v) { return model.energy(theta, v); }, x);
      worst = std::max({worst, test::rel_error(gt, fd_t),
                        test::rel_error(gx, fd_x)});
    }
  };
  GaussianMeanModel gauss(2);
  probe_model(gauss, 1000);
  for (int k : {1, 2, 8}) {
    MoGModel mog(k, 2, 0.7);
    probe_model(mog, 2000 + 1000 * static_cast<std::uint64_t>(k));
    // averaged drift against the likelihood gradient
    for (int probe = 0; probe < 20; ++probe) {
      const Vec theta =
          test::random_vec(stream, 9000 + 100 * k + probe, mog.theta_dim(), 1.5);
      Vec drift(mog.theta_dim());
      mog.averaged_drift(theta, data2, drift);
      const Vec fd = test::fd_gradient(
          [&](const Vec& v) { return neg_log_likelihood(mog, data2, v); },
          theta);
      worst = std::max(worst, test::rel_error(drift, Vec(-fd)));
    }
  }
  check.require(worst < 1e-6, fmt("worst relative error %.2e", worst));
  check.note(fmt("worst rel err %.2e", worst));
}

void banana_training(Check& check) {
  const fs::path dir = fresh_dir("banana");
  const fs::path cfg_path = dir / "banana.cfg";
  std::ofstream(cfg_path) << R"(
[experiment]
kind = banana-train
integrator = srock
plots = true
[multiscale]
epsilon = 0.1
delta = 1e-3
particles = 1000
stages = 3
horizon = 2
seed = 7117
[model]
kind = mog
dim = 2
components = 8
scale = 0.5
[data]
source = banana
count = 1000
holdout = 1000
[train]
blur = 0.05
sinkhorn_max_iter = 80
)";
  std::ostringstream log;
  const int status = run_experiment(cfg_path, {{}, dir / "out", false}, log);
  check.require(status == kExitOk, "runner status " + std::to_string(status));
  if (status != kExitOk) return;
  const CsvTable t = CsvTable::read(dir / "out" / "metrics.csv");
  const int col = t.column("sinkhorn");
  std::vector<double> series(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) series[r] = t.number(r, col);
  const double initial = series.front();
  const double final_value = series.back();
  int monotone = 0;
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i] <= series[i - 1]) ++monotone;
  const double frac = static_cast<double>(monotone) /
                      (static_cast<double>(series.size()) - 1.0);
  check.require(final_value < 0.5 * initial,
                fmt("final %.4f vs half of initial %.4f", final_value, initial));
  check.require(frac >= 0.8, fmt("monotone fraction %.2f", frac));
  check.note(fmt("sinkhorn %.4f -> %.4f, monotone %.2f", initial, final_value,
                 frac));
  fs::remove_all(dir);
}

void determinism(Check& check) {
  const fs::path dir = fresh_dir("determinism");
  std::ofstream(dir / "scan.cfg") << R"(
[experiment]
kind = order-scan
plots = false
[multiscale]
epsilon = 0.5
seed = 12
[data]
values = 1, 3
[scan]
deltas = 4e-3, 2e-3, 1e-3
replicas = 30000
t_final = 0.5
observable = theta2
integrator = em
x0 = 4
)";
  std::ostringstream log;
  setenv("SLOWFAST_THREADS", "1", 1);
  int status = run_experiment(dir / "scan.cfg", {{}, dir / "a", true}, log);
  check.require(status == kExitOk || status == kExitAcceptanceFailure,
                "scan failed");
  setenv("SLOWFAST_THREADS", "4", 1);
  status = run_experiment(dir / "a" / "manifest.txt", {{}, dir / "b", true}, log);
  check.require(status == kExitOk || status == kExitAcceptanceFailure,
                "manifest re-run failed");
  unsetenv("SLOWFAST_THREADS");
  check.require(read_file(dir / "a" / "metrics.csv") ==
                    read_file(dir / "b" / "metrics.csv"),
                "order-scan metrics differ across thread counts");

  std::ofstream(dir / "train.cfg") << R"(
[experiment]
kind = banana-train
integrator = srock
plots = false
[multiscale]
epsilon = 0.1
delta = 1e-3
particles = 100
stages = 3
horizon = 0.2
seed = 5
[model]
kind = mog
dim = 2
components = 4
scale = 0.5
[data]
source = banana
count = 100
holdout = 100
[train]
checkpoint_interval = 50
target_ratio = 10
min_monotone_frac = 0
)";
  setenv("SLOWFAST_THREADS", "3", 1);
  status = run_experiment(dir / "train.cfg", {{}, dir / "t1", true}, log);
  check.require(status == kExitOk, "training run failed");
  setenv("SLOWFAST_THREADS", "1", 1);
  status = run_experiment(dir / "t1" / "manifest.txt", {{}, dir / "t2", true},
                          log);
  check.require(status == kExitOk, "training manifest re-run failed");
  unsetenv("SLOWFAST_THREADS");
  check.require(read_file(dir / "t1" / "metrics.csv") ==
                    read_file(dir / "t2" / "metrics.csv"),
                "training metrics differ across thread counts");
  check.require(read_file(dir / "t1" / "samples_000000.csv") ==
                    read_file(dir / "t2" / "samples_000000.csv"),
                "sample snapshots differ");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion(1, "Gaussian stationary moments", gaussian_stationary_moments);
  run_criterion(2, "oracle closed form and residuals", oracle_regression);
  run_criterion(3, "O(eps) averaging gap", averaging_gap);
  run_criterion(4, "explicit-scheme weak order one", weak_order);
  run_criterion(5, "stability boundaries", stability_boundaries);
  run_criterion(6, "stabilised-scheme noise calibration", noise_calibration);
  run_criterion(7, "frozen-process moment audit", moment_audit_criterion);
  run_criterion(8, "gradient integrity", gradient_integrity);
  run_criterion(9, "banana training improvement", banana_training);
  run_criterion(10, "byte-identical reruns", determinism);
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}

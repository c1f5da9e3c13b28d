#pragma once

#include "slowfast/config.hpp"
#include "slowfast/diagnostics.hpp"
#include "slowfast/types.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace slowfast {

enum class ExperimentKind {
  GaussianValidate,
  StabilityScan,
  OrderScan,
  ErgodicScan,
  MomentAudit,
  BananaTrain,
  AveragingGap,
};

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ModelSpec {
  std::string kind = "gaussian";  // gaussian | mog
  int dim = 1;
  int components = 8;  // mog only
  double scale = 0.5;  // mog only
};

struct DataSpec {
  std::string source = "inline";  // inline | banana | csv
  std::vector<double> values;     // inline, d = 1
  int count = 1000;               // banana sample size M
  int holdout = 1000;             // banana held-out evaluation size
  std::string path;               // csv source
};

struct ScanSpec {
  std::vector<double> deltas;
  std::vector<double> epsilons;
  std::int64_t replicas = 0;
  double t_final = 1.0;
  double scan_horizon = 400.0;
  double burn_in_time = 40.0;
  std::string observable = "theta2";  // theta | theta2
  std::string integrator = "em";      // em | srock
  std::vector<std::string> integrators;  // stability scan entries em | srock:m
  std::int64_t steps = 10000;
  double theta0 = 0.0;
  double x0 = 0.0;
};

struct AuditSpec {
  std::vector<double> thetas{0.0, 2.0, 5.0};
  std::vector<std::int64_t> orders{2, 4};
  std::int64_t replicas = 10000;
  int checkpoints = 40;
};

struct TrainSpec {
  std::int64_t checkpoint_interval = 0;  // 0: every 5% of the horizon
  double blur = 0.05;
  int sinkhorn_max_iter = 500;
  double sinkhorn_tol = 1e-6;
  double init_spread = 0.25;
  double target_ratio = 0.5;
  double min_monotone_frac = 0.8;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::GaussianValidate;
  MultiscaleConfig ms;
  ModelSpec model;
  DataSpec data;
  ScanSpec scan;
  AuditSpec audit;
  TrainSpec train;
  std::string integrator = "em";  // gaussian-validate / banana-train driver
  std::filesystem::path out_dir;
  bool plots = true;

  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
  std::string serialize() const;  // canonical resolved form
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  bool no_plots = false;
};

// Exit statuses of the experiment runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitAcceptanceFailure = 4;

// Loads, validates and executes a config; writes metrics.csv, a manifest and
// optional plots under the output directory. Nothing is written when the
// config is rejected. Returns one of the exit statuses above.
int run_experiment(const std::filesystem::path& config_path,
                   const RunOverrides& overrides, std::ostream& log);

}  // namespace slowfast

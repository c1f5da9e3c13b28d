#include "slowfast/experiment.hpp"

#include "slowfast/csv.hpp"
#include "slowfast/svg.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef SLOWFAST_VERSION
#define SLOWFAST_VERSION "0.0.0"
#endif

namespace slowfast {

namespace {

namespace fs = std::filesystem;

// replica ids reserved for non-trajectory streams
constexpr std::uint64_t kDataReplica = 1000000;
constexpr std::uint64_t kHoldoutReplica = 1000001;
constexpr std::uint64_t kInitReplica = 1000002;
constexpr std::uint64_t kEvalReplica = 1000003;
constexpr std::uint64_t kParticleInitReplica = 1000004;

struct IntegratorChoice {
  Integrator integrator = Integrator::EulerMaruyama;
  int stages = 0;  // 0: take from MultiscaleConfig
};

IntegratorChoice parse_integrator(const std::string& text) {
  if (text == "em") return {Integrator::EulerMaruyama, 0};
  if (text == "srock") return {Integrator::SRock, 0};
  if (text.rfind("srock:", 0) == 0) {
    const int m = std::atoi(text.c_str() + 6);
    if (m < 2) throw ConfigError("bad stage count in integrator '" + text + "'");
    return {Integrator::SRock, m};
  }
  throw ConfigError("unknown integrator '" + text + "' (use em, srock, srock:m)");
}

Observable parse_observable(const std::string& text) {
  if (text == "theta") return Observable::Theta;
  if (text == "theta2") return Observable::ThetaSquared;
  throw ConfigError("unknown observable '" + text + "' (use theta, theta2)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Dataset make_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.source == "inline") {
    return Dataset::from_scalars(cfg.data.values);
  }
  if (cfg.data.source == "banana") {
    NoiseStream stream(cfg.ms.seed, kDataReplica);
    return Dataset(BananaDistribution::sample(cfg.data.count, stream));
  }
  if (cfg.data.source == "csv") {
    const CsvTable t = CsvTable::read(cfg.data.path);
    if (t.rows.empty()) throw ConfigError("csv data file has no rows");
    Mat pts(t.columns.size(), t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      for (std::size_t c = 0; c < t.columns.size(); ++c)
        pts(c, r) = t.number(r, static_cast<int>(c));
    return Dataset(std::move(pts));
  }
  throw ConfigError("unknown data source '" + cfg.data.source + "'");
}

}  // namespace

ExperimentKind parse_kind(const std::string& name) {
  if (name == "gaussian-validate") return ExperimentKind::GaussianValidate;
  if (name == "stability-scan") return ExperimentKind::StabilityScan;
  if (name == "order-scan") return ExperimentKind::OrderScan;
  if (name == "ergodic-scan") return ExperimentKind::ErgodicScan;
  if (name == "moment-audit") return ExperimentKind::MomentAudit;
  if (name == "banana-train") return ExperimentKind::BananaTrain;
  if (name == "averaging-gap") return ExperimentKind::AveragingGap;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::GaussianValidate: return "gaussian-validate";
    case ExperimentKind::StabilityScan: return "stability-scan";
    case ExperimentKind::OrderScan: return "order-scan";
    case ExperimentKind::ErgodicScan: return "ergodic-scan";
    case ExperimentKind::MomentAudit: return "moment-audit";
    case ExperimentKind::BananaTrain: return "banana-train";
    case ExperimentKind::AveragingGap: return "averaging-gap";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  ConfigFile file = ConfigFile::parse_file(path);
  ExperimentConfig cfg;
  cfg.kind = parse_kind(file.get_string("experiment", "kind"));
  cfg.out_dir = file.get_string("experiment", "out_dir",
                                "runs/" + kind_name(cfg.kind));
  cfg.plots = file.get_bool("experiment", "plots", true);
  cfg.integrator = file.get_string("experiment", "integrator", "em");

  if (!file.has_section("multiscale"))
    throw ConfigError("missing [multiscale] section");
  cfg.ms.epsilon = file.get_double("multiscale", "epsilon", 0.1);
  cfg.ms.delta = file.get_double("multiscale", "delta", 1e-3);
  cfg.ms.n_particles =
      static_cast<int>(file.get_int("multiscale", "particles", 1));
  cfg.ms.stages = static_cast<int>(file.get_int("multiscale", "stages", 3));
  cfg.ms.horizon = file.get_double("multiscale", "horizon", 1.0);
  cfg.ms.seed = file.get_uint64("multiscale", "seed", 0);
  cfg.ms.burn_in = file.get_int("multiscale", "burn_in", 0);
  cfg.ms.thinning = file.get_int("multiscale", "thinning", 1);

  std::set<std::string> allowed{"experiment", "multiscale"};

  const bool wants_model = cfg.kind == ExperimentKind::GaussianValidate ||
                           cfg.kind == ExperimentKind::MomentAudit ||
                           cfg.kind == ExperimentKind::BananaTrain;
  if (wants_model && file.has_section("model")) {
    cfg.model.kind = file.get_string("model", "kind", "gaussian");
    cfg.model.dim = static_cast<int>(file.get_int("model", "dim", 1));
    cfg.model.components =
        static_cast<int>(file.get_int("model", "components", 8));
    cfg.model.scale = file.get_double("model", "scale", 0.5);
  }
  if (wants_model) allowed.insert("model");

  const bool wants_data = cfg.kind != ExperimentKind::StabilityScan &&
                          cfg.kind != ExperimentKind::MomentAudit;
  if (wants_data) {
    if (!file.has_section("data")) throw ConfigError("missing [data] section");
    cfg.data.source = file.get_string("data", "source", "inline");
    if (cfg.data.source == "inline")
      cfg.data.values = file.get_double_list("data", "values");
    if (cfg.data.source == "banana") {
      cfg.data.count = static_cast<int>(file.get_int("data", "count", 1000));
      cfg.data.holdout =
          static_cast<int>(file.get_int("data", "holdout", 1000));
    }
    if (cfg.data.source == "csv") cfg.data.path = file.get_string("data", "path");
    allowed.insert("data");
  }

  const bool wants_scan = cfg.kind == ExperimentKind::StabilityScan ||
                          cfg.kind == ExperimentKind::OrderScan ||
                          cfg.kind == ExperimentKind::ErgodicScan ||
                          cfg.kind == ExperimentKind::AveragingGap;
  if (wants_scan) {
    if (!file.has_section("scan")) throw ConfigError("missing [scan] section");
    allowed.insert("scan");
    switch (cfg.kind) {
      case ExperimentKind::AveragingGap:
        cfg.scan.epsilons = file.get_double_list("scan", "epsilons");
        cfg.scan.replicas = file.get_int("scan", "replicas", 32);
        cfg.scan.burn_in_time = file.get_double("scan", "burn_in_time", 50.0);
        break;
      case ExperimentKind::OrderScan:
        cfg.scan.deltas = file.get_double_list("scan", "deltas");
        cfg.scan.replicas = file.get_int("scan", "replicas");
        cfg.scan.t_final = file.get_double("scan", "t_final", 1.0);
        cfg.scan.observable = file.get_string("scan", "observable", "theta2");
        cfg.scan.integrator = file.get_string("scan", "integrator", "em");
        cfg.scan.theta0 = file.get_double("scan", "theta0", 0.0);
        cfg.scan.x0 = file.get_double("scan", "x0", 0.0);
        break;
      case ExperimentKind::ErgodicScan:
        cfg.scan.deltas = file.get_double_list("scan", "deltas");
        cfg.scan.replicas = file.get_int("scan", "replicas", 32);
        cfg.scan.scan_horizon = file.get_double("scan", "horizon", 400.0);
        cfg.scan.burn_in_time = file.get_double("scan", "burn_in_time", 40.0);
        cfg.scan.observable = file.get_string("scan", "observable", "theta2");
        cfg.scan.integrator = file.get_string("scan", "integrator", "srock");
        break;
      case ExperimentKind::StabilityScan:
        cfg.scan.integrators =
            split_list(file.get_string("scan", "integrators"));
        cfg.scan.steps = file.get_int("scan", "steps", 10000);
        break;
      default:
        break;
    }
  }

  if (cfg.kind == ExperimentKind::MomentAudit) {
    allowed.insert("audit");
    if (file.has_section("audit")) {
      if (file.has_key("audit", "thetas"))
        cfg.audit.thetas = file.get_double_list("audit", "thetas");
      if (file.has_key("audit", "orders")) {
        cfg.audit.orders.clear();
        for (double v : file.get_double_list("audit", "orders"))
          cfg.audit.orders.push_back(static_cast<std::int64_t>(v));
      }
      cfg.audit.replicas = file.get_int("audit", "replicas", 10000);
      cfg.audit.checkpoints =
          static_cast<int>(file.get_int("audit", "checkpoints", 40));
    }
  }

  if (cfg.kind == ExperimentKind::BananaTrain) {
    allowed.insert("train");
    if (file.has_section("train")) {
      cfg.train.checkpoint_interval =
          file.get_int("train", "checkpoint_interval", 0);
      cfg.train.blur = file.get_double("train", "blur", 0.05);
      cfg.train.sinkhorn_max_iter =
          static_cast<int>(file.get_int("train", "sinkhorn_max_iter", 500));
      cfg.train.sinkhorn_tol = file.get_double("train", "sinkhorn_tol", 1e-6);
      cfg.train.init_spread = file.get_double("train", "init_spread", 0.25);
      cfg.train.target_ratio = file.get_double("train", "target_ratio", 0.5);
      cfg.train.min_monotone_frac =
          file.get_double("train", "min_monotone_frac", 0.8);
    }
  }

  file.finish(allowed);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    ms.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[multiscale] ") + e.what());
  }
  if (model.kind != "gaussian" && model.kind != "mog")
    throw ConfigError("unknown model kind '" + model.kind + "'");
  if (model.dim < 1) throw ConfigError("[model] dim must be >= 1");
  if (model.kind == "mog" && model.components < 1)
    throw ConfigError("[model] components must be >= 1");
  if (model.kind == "mog" && !(model.scale > 0.0))
    throw ConfigError("[model] scale must be > 0");
  parse_integrator(integrator);

  switch (kind) {
    case ExperimentKind::GaussianValidate:
      if (model.kind != "gaussian" || model.dim != 1)
        throw ConfigError("gaussian-validate needs the scalar gaussian model");
      if (ms.burn_in >= ms.steps())
        throw ConfigError("burn-in must end before the horizon");
      break;
    case ExperimentKind::MomentAudit:
      if (model.kind != "gaussian" || model.dim != 1)
        throw ConfigError("moment-audit needs the scalar gaussian model");
      for (auto k : audit.orders)
        if (k != 2 && k != 4)
          throw ConfigError("[audit] orders must be drawn from {2, 4}");
      if (audit.replicas < 2) throw ConfigError("[audit] replicas must be >= 2");
      break;
    case ExperimentKind::BananaTrain:
      if (model.kind != "mog")
        throw ConfigError("banana-train needs the mog model");
      if (data.source == "banana" && model.dim != 2)
        throw ConfigError("banana data is 2-D; set [model] dim = 2");
      if (!(train.blur > 0.0)) throw ConfigError("[train] blur must be > 0");
      if (!(train.sinkhorn_tol > 0.0))
        throw ConfigError("[train] sinkhorn_tol must be > 0");
      if (train.checkpoint_interval < 0)
        throw ConfigError("[train] checkpoint_interval must be >= 0");
      break;
    case ExperimentKind::OrderScan:
      if (scan.deltas.size() < 3)
        throw ConfigError("[scan] deltas needs >= 3 values");
      if (scan.replicas < 2) throw ConfigError("[scan] replicas must be >= 2");
      if (!(scan.t_final > 0.0)) throw ConfigError("[scan] t_final must be > 0");
      parse_observable(scan.observable);
      parse_integrator(scan.integrator);
      break;
    case ExperimentKind::ErgodicScan:
      if (scan.deltas.size() < 3)
        throw ConfigError("[scan] deltas needs >= 3 values");
      if (!(scan.scan_horizon > 0.0))
        throw ConfigError("[scan] horizon must be > 0");
      parse_observable(scan.observable);
      parse_integrator(scan.integrator);
      break;
    case ExperimentKind::AveragingGap:
      if (scan.epsilons.size() < 3)
        throw ConfigError("[scan] epsilons needs >= 3 values");
      for (double e : scan.epsilons)
        if (!(e > 0.0)) throw ConfigError("[scan] epsilons must be positive");
      break;
    case ExperimentKind::StabilityScan:
      if (scan.integrators.empty())
        throw ConfigError("[scan] integrators must name at least one scheme");
      for (const auto& name : scan.integrators) parse_integrator(name);
      if (scan.steps < 100) throw ConfigError("[scan] steps must be >= 100");
      break;
  }
  if (kind != ExperimentKind::StabilityScan &&
      kind != ExperimentKind::MomentAudit) {
    if (data.source != "inline" && data.source != "banana" &&
        data.source != "csv")
      throw ConfigError("unknown data source '" + data.source + "'");
    if (data.source == "inline" && data.values.empty())
      throw ConfigError("[data] values must be non-empty");
    if (data.source == "banana" && (data.count < 1 || data.holdout < 1))
      throw ConfigError("[data] count/holdout must be >= 1");
  }
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "kind = " << kind_name(kind) << "\n";
  out << "out_dir = " << out_dir.string() << "\n";
  out << "plots = " << (plots ? "true" : "false") << "\n";
  out << "integrator = " << integrator << "\n";
  out << "\n[multiscale]\n";
  out << "epsilon = " << format_double(ms.epsilon) << "\n";
  out << "delta = " << format_double(ms.delta) << "\n";
  out << "particles = " << ms.n_particles << "\n";
  out << "stages = " << ms.stages << "\n";
  out << "horizon = " << format_double(ms.horizon) << "\n";
  out << "seed = " << ms.seed << "\n";
  out << "burn_in = " << ms.burn_in << "\n";
  out << "thinning = " << ms.thinning << "\n";

  const bool wants_model = kind == ExperimentKind::GaussianValidate ||
                           kind == ExperimentKind::MomentAudit ||
                           kind == ExperimentKind::BananaTrain;
  if (wants_model) {
    out << "\n[model]\n";
    out << "kind = " << model.kind << "\n";
    out << "dim = " << model.dim << "\n";
    if (model.kind == "mog") {
      out << "components = " << model.components << "\n";
      out << "scale = " << format_double(model.scale) << "\n";
    }
  }
  const bool wants_data = kind != ExperimentKind::StabilityScan &&
                          kind != ExperimentKind::MomentAudit;
  if (wants_data) {
    out << "\n[data]\n";
    out << "source = " << data.source << "\n";
    if (data.source == "inline") {
      out << "values = ";
      for (std::size_t i = 0; i < data.values.size(); ++i)
        out << (i ? "," : "") << format_double(data.values[i]);
      out << "\n";
    } else if (data.source == "banana") {
      out << "count = " << data.count << "\n";
      out << "holdout = " << data.holdout << "\n";
    } else {
      out << "path = " << data.path << "\n";
    }
  }
  auto write_list = [&](const char* key, const std::vector<double>& vs) {
    out << key << " = ";
    for (std::size_t i = 0; i < vs.size(); ++i)
      out << (i ? "," : "") << format_double(vs[i]);
    out << "\n";
  };
  switch (kind) {
    case ExperimentKind::AveragingGap:
      out << "\n[scan]\n";
      write_list("epsilons", scan.epsilons);
      out << "replicas = " << scan.replicas << "\n";
      out << "burn_in_time = " << format_double(scan.burn_in_time) << "\n";
      break;
    case ExperimentKind::OrderScan:
      out << "\n[scan]\n";
      write_list("deltas", scan.deltas);
      out << "replicas = " << scan.replicas << "\n";
      out << "t_final = " << format_double(scan.t_final) << "\n";
      out << "observable = " << scan.observable << "\n";
      out << "integrator = " << scan.integrator << "\n";
      out << "theta0 = " << format_double(scan.theta0) << "\n";
      out << "x0 = " << format_double(scan.x0) << "\n";
      break;
    case ExperimentKind::ErgodicScan:
      out << "\n[scan]\n";
      write_list("deltas", scan.deltas);
      out << "replicas = " << scan.replicas << "\n";
      out << "horizon = " << format_double(scan.scan_horizon) << "\n";
      out << "burn_in_time = " << format_double(scan.burn_in_time) << "\n";
      out << "observable = " << scan.observable << "\n";
      out << "integrator = " << scan.integrator << "\n";
      break;
    case ExperimentKind::StabilityScan: {
      out << "\n[scan]\n";
      out << "integrators = ";
      for (std::size_t i = 0; i < scan.integrators.size(); ++i)
        out << (i ? "," : "") << scan.integrators[i];
      out << "\n";
      out << "steps = " << scan.steps << "\n";
      break;
    }
    case ExperimentKind::MomentAudit: {
      out << "\n[audit]\n";
      write_list("thetas", audit.thetas);
      out << "orders = ";
      for (std::size_t i = 0; i < audit.orders.size(); ++i)
        out << (i ? "," : "") << audit.orders[i];
      out << "\n";
      out << "replicas = " << audit.replicas << "\n";
      out << "checkpoints = " << audit.checkpoints << "\n";
      break;
    }
    case ExperimentKind::BananaTrain:
      out << "\n[train]\n";
      out << "checkpoint_interval = " << train.checkpoint_interval << "\n";
      out << "blur = " << format_double(train.blur) << "\n";
      out << "sinkhorn_max_iter = " << train.sinkhorn_max_iter << "\n";
      out << "sinkhorn_tol = " << format_double(train.sinkhorn_tol) << "\n";
      out << "init_spread = " << format_double(train.init_spread) << "\n";
      out << "target_ratio = " << format_double(train.target_ratio) << "\n";
      out << "min_monotone_frac = " << format_double(train.min_monotone_frac)
          << "\n";
      break;
    default:
      break;
  }
  return out.str();
}

namespace {

struct RunOutcome {
  int status = kExitOk;
  std::string note;
};

RunOutcome run_gaussian_validate(const ExperimentConfig& cfg,
                                 const fs::path& out_dir, std::ostream& log) {
  const Dataset data = make_dataset(cfg);
  if (data.dim() != 1) throw ConfigError("gaussian-validate needs 1-D data");
  GaussianMeanModel model(1);
  const double ybar = data.mean()[0];

  LinearOracle oracle(cfg.ms.epsilon, cfg.ms.n_particles, ybar);
  const double oracle_var = oracle.stationary_cov()(0, 0);

  const auto choice = parse_integrator(cfg.integrator);
  MultiscaleConfig ms = cfg.ms;
  if (choice.stages > 0) ms.stages = choice.stages;

  SystemState state{Vec::Constant(1, ybar),
                    Vec::Constant(cfg.ms.n_particles, ybar), 1, 0.0};
  TrajectoryOptions opts;
  opts.record_samples = true;
  const TrajectoryRecord rec =
      run_trajectory(choice.integrator, state, model, data, ms, 0, opts);
  log << "trajectory: " << rec.thetas.size() << " recorded samples\n";

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"step", "time", "theta_mean", "theta_mean_se", "theta_var",
              "theta_var_se", "oracle_mean", "oracle_var", "mean_ok",
              "var_ok"});
  if (rec.diverged) return {kExitDivergence, "trajectory diverged"};

  std::vector<double> series(rec.thetas.size());
  for (std::size_t i = 0; i < rec.thetas.size(); ++i) series[i] = rec.thetas[i][0];

  bool final_ok = false;
  const int n_check = 20;
  for (int c = 1; c <= n_check; ++c) {
    const std::size_t upto = series.size() * c / n_check;
    std::vector<double> prefix(series.begin(), series.begin() + upto);
    if (prefix.size() < 8) continue;
    const double mean = sample_mean(prefix);
    const double var = sample_variance(prefix);
    const double mean_se = batch_means_stderr(prefix);
    const double var_se = batch_variance_stderr(prefix);
    const bool mean_ok = std::abs(mean - ybar) <= 3.0 * mean_se;
    const bool var_ok = std::abs(var - oracle_var) <= 3.0 * var_se;
    const std::int64_t step = cfg.ms.burn_in + static_cast<std::int64_t>(upto) *
                                                   cfg.ms.thinning;
    csv.row({step, step * cfg.ms.delta, mean, mean_se, var, var_se, ybar,
             oracle_var, mean_ok, var_ok});
    if (c == n_check) final_ok = mean_ok && var_ok;
  }
  if (cfg.plots) {
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "theta_mean.svg",
                     "time", {"theta_mean", "oracle_mean"},
                     {"stationary mean", "t", "theta mean", false, false});
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "theta_var.svg", "time",
                     {"theta_var", "oracle_var"},
                     {"stationary variance", "t", "theta variance", false,
                      false});
  }
  if (!final_ok) return {kExitAcceptanceFailure, "moments outside 3 SE"};
  return {};
}

RunOutcome run_averaging_gap(const ExperimentConfig& cfg,
                             const fs::path& out_dir, std::ostream& log) {
  const Dataset data = make_dataset(cfg);
  AveragingGapSpec spec;
  spec.eps_list = cfg.scan.epsilons;
  spec.n_particles = cfg.ms.n_particles;
  spec.stages = cfg.ms.stages;
  spec.delta = cfg.ms.delta;
  spec.horizon = cfg.ms.horizon;
  spec.burn_in_time = cfg.scan.burn_in_time;
  spec.replicas = cfg.scan.replicas;
  spec.seed = cfg.ms.seed;
  const AveragingGapResult res = averaging_gap_scan(data, spec);
  log << "oracle slope " << res.oracle_estimate.slope << "\n";

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"epsilon", "oracle_gap", "sim_gap", "sim_se", "agree", "slope",
              "slope_halfwidth"});
  for (const auto& pt : res.points) {
    const bool agree =
        std::abs(pt.sim_gap - pt.oracle_gap) <= 3.0 * pt.sim_se;
    csv.row({pt.epsilon, pt.oracle_gap, pt.sim_gap, pt.sim_se, agree,
             res.oracle_estimate.slope, res.oracle_estimate.slope_halfwidth});
  }
  if (cfg.plots)
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "gap.svg", "epsilon",
                     {"oracle_gap", "sim_gap"},
                     {"averaging gap", "epsilon", "gap", true, true});
  const bool slope_ok = std::abs(res.oracle_estimate.slope - 1.0) <= 1e-6;
  if (!slope_ok || !res.sim_agrees)
    return {kExitAcceptanceFailure, "gap scaling check failed"};
  return {};
}

RunOutcome run_order_scan(const ExperimentConfig& cfg, const fs::path& out_dir,
                          std::ostream& log) {
  const Dataset data = make_dataset(cfg);
  WeakOrderSpec spec;
  const auto choice = parse_integrator(cfg.scan.integrator);
  spec.integrator = choice.integrator;
  spec.stages = choice.stages > 0 ? choice.stages : cfg.ms.stages;
  spec.observable = parse_observable(cfg.scan.observable);
  spec.t_final = cfg.scan.t_final;
  spec.deltas = cfg.scan.deltas;
  spec.replicas = cfg.scan.replicas;
  spec.epsilon = cfg.ms.epsilon;
  spec.n_particles = cfg.ms.n_particles;
  spec.theta0 = cfg.scan.theta0;
  spec.x0 = cfg.scan.x0;
  spec.seed = cfg.ms.seed;
  const WeakOrderResult res = weak_order_scan(data, spec);
  log << "weak-order slope " << res.estimate.slope << " +/- "
      << res.estimate.slope_halfwidth << "\n";
  for (const auto& pt : res.points)
    if (!std::isfinite(pt.error)) return {kExitDivergence, "non-finite error"};

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"delta", "error", "std_error", "oracle_value", "slope",
              "slope_halfwidth", "slope_ok"});
  const bool slope_ok = res.estimate.slope >= 0.8 && res.estimate.slope <= 1.2;
  for (const auto& pt : res.points)
    csv.row({pt.delta, pt.error, pt.std_error, res.oracle_value,
             res.estimate.slope, res.estimate.slope_halfwidth, slope_ok});
  if (cfg.plots)
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "weak_order.svg",
                     "delta", {"error"},
                     {"weak error at fixed time", "delta", "error", true, true});
  if (!slope_ok) return {kExitAcceptanceFailure, "slope outside [0.8, 1.2]"};
  return {};
}

RunOutcome run_ergodic_scan(const ExperimentConfig& cfg,
                            const fs::path& out_dir, std::ostream& log) {
  const Dataset data = make_dataset(cfg);
  ErgodicScanSpec spec;
  const auto choice = parse_integrator(cfg.scan.integrator);
  spec.integrator = choice.integrator;
  spec.stages = choice.stages > 0 ? choice.stages : cfg.ms.stages;
  spec.observable = parse_observable(cfg.scan.observable);
  spec.deltas = cfg.scan.deltas;
  spec.horizon = cfg.scan.scan_horizon;
  spec.burn_in_time = cfg.scan.burn_in_time;
  spec.replicas = cfg.scan.replicas;
  spec.epsilon = cfg.ms.epsilon;
  spec.n_particles = cfg.ms.n_particles;
  spec.seed = cfg.ms.seed;
  const ErgodicScanResult res = ergodic_bias_scan(data, spec);
  log << "ergodic-bias slope " << res.estimate.slope
      << (res.noise_dominated ? " (noise dominated)" : "") << "\n";

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"delta", "bias", "std_error", "oracle_value", "slope",
              "slope_halfwidth", "noise_dominated"});
  for (const auto& pt : res.points)
    csv.row({pt.delta, pt.bias, pt.std_error, res.oracle_value,
             res.estimate.slope, res.estimate.slope_halfwidth,
             res.noise_dominated});
  if (cfg.plots && !res.noise_dominated)
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "ergodic_bias.svg",
                     "delta", {"bias"},
                     {"ergodic bias", "delta", "bias", true, true});
  return {};
}

RunOutcome run_stability_scan(const ExperimentConfig& cfg,
                              const fs::path& out_dir, std::ostream& log) {
  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"integrator", "stages", "boundary", "theory", "rel_err", "ok"});
  bool all_ok = true;
  std::size_t n_rows = 0;
  for (const auto& name : cfg.scan.integrators) {
    const auto choice = parse_integrator(name);
    StabilitySpec spec;
    spec.integrator = choice.integrator;
    spec.stages = choice.stages > 0 ? choice.stages : cfg.ms.stages;
    spec.epsilon = cfg.ms.epsilon;
    spec.steps = cfg.scan.steps;
    const double boundary = stability_scan(spec);
    const double theory = choice.integrator == Integrator::EulerMaruyama
                              ? 2.0
                              : 2.0 * spec.stages * spec.stages;
    const double rel = std::abs(boundary - theory) / theory;
    const bool ok = rel <= 0.10;
    all_ok = all_ok && ok;
    log << name << ": boundary " << boundary << " vs " << theory << "\n";
    csv.row({name,
             choice.integrator == Integrator::EulerMaruyama ? 0 : spec.stages,
             boundary, theory, rel, ok});
    ++n_rows;
  }
  if (cfg.plots && n_rows > 1)
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "stability.svg",
                     "theory", {"boundary", "theory"},
                     {"stability boundary", "theoretical boundary",
                      "measured boundary", true, true, true});
  if (!all_ok) return {kExitAcceptanceFailure, "boundary outside 10%"};
  return {};
}

RunOutcome run_moment_audit(const ExperimentConfig& cfg,
                            const fs::path& out_dir, std::ostream& log) {
  GaussianMeanModel model(1);
  std::vector<Vec> theta_grid;
  for (double t : cfg.audit.thetas) theta_grid.push_back(Vec::Constant(1, t));
  const auto x_grid = grid_1d(-12.0, 12.0, 961);
  const DissipativityProbe probe =
      probe_dissipativity(model, theta_grid, x_grid);
  const int idx = probe.candidate_index(0.5);
  if (idx < 0 || !probe.admissible[idx])
    return {kExitAcceptanceFailure, "probe rejected r = 0.5"};
  const double r_tilde = probe.candidates[idx];

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"theta", "k", "r_tilde", "b_tilde", "alpha_k", "gamma_k",
              "worst_margin", "pass"});
  bool all_pass = true;
  for (std::size_t t = 0; t < cfg.audit.thetas.size(); ++t) {
    FrozenEnsembleSpec spec;
    spec.theta = theta_grid[t];
    spec.z0 = Vec::Zero(cfg.ms.n_particles);
    spec.n_particles = cfg.ms.n_particles;
    spec.delta = cfg.ms.delta;
    spec.horizon = cfg.ms.horizon;
    spec.replicas = cfg.audit.replicas;
    spec.checkpoints = cfg.audit.checkpoints;
    spec.seed = cfg.ms.seed + t;
    const FrozenMomentSeries series = frozen_moment_ensemble(model, spec);
    const double b_tilde = probe.b_curve[idx][static_cast<Eigen::Index>(t)];
    for (auto k : cfg.audit.orders) {
      const MomentAudit audit =
          moment_bound_audit(series, static_cast<int>(k), r_tilde, b_tilde);
      all_pass = all_pass && audit.pass;
      log << "theta " << cfg.audit.thetas[t] << " k " << k << " margin "
          << audit.worst_margin << "\n";
      csv.row({cfg.audit.thetas[t], static_cast<int>(k), r_tilde, b_tilde,
               audit.alpha_k, audit.gamma_k, audit.worst_margin, audit.pass});
    }
  }
  if (!all_pass) return {kExitAcceptanceFailure, "moment bound violated"};
  return {};
}

RunOutcome run_banana_train(const ExperimentConfig& cfg,
                            const fs::path& out_dir, std::ostream& log) {
  const Dataset data = make_dataset(cfg);
  MoGModel model(cfg.model.components, cfg.model.dim, cfg.model.scale);
  if (data.dim() != model.sample_dim())
    throw ConfigError("data dimension does not match the model");

  // held-out reference points for the transport metric
  Mat holdout;
  if (cfg.data.source == "banana") {
    NoiseStream stream(cfg.ms.seed, kHoldoutReplica);
    holdout = BananaDistribution::sample(cfg.data.holdout, stream);
  } else {
    holdout = data.points();
  }

  // deterministic initialisation: means scattered around the data mean
  const Vec data_mean = data.mean();
  Vec theta0(model.theta_dim());
  {
    NoiseStream stream(cfg.ms.seed, kInitReplica);
    Vec g(model.theta_dim());
    stream.fill_normals(0, 0, g);
    for (int i = 0; i < cfg.model.components; ++i)
      theta0.segment(i * cfg.model.dim, cfg.model.dim) =
          data_mean + cfg.train.init_spread *
                          g.segment(i * cfg.model.dim, cfg.model.dim);
  }
  const NoiseStream eval_stream(cfg.ms.seed, kEvalReplica);
  SystemState state{theta0,
                    Vec(cfg.ms.n_particles * model.sample_dim()),
                    model.sample_dim(), 0.0};
  {
    const NoiseStream init_stream(cfg.ms.seed, kParticleInitReplica);
    const Mat z0 = model.sample(theta0, cfg.ms.n_particles, init_stream, 0);
    for (int i = 0; i < cfg.ms.n_particles; ++i) state.particle(i) = z0.col(i);
  }

  const std::int64_t n_steps = cfg.ms.steps();
  const std::int64_t interval = cfg.train.checkpoint_interval > 0
                                    ? cfg.train.checkpoint_interval
                                    : std::max<std::int64_t>(1, n_steps / 20);
  SinkhornConfig sink;
  sink.blur = cfg.train.blur;
  sink.max_iter = cfg.train.sinkhorn_max_iter;
  sink.tol = cfg.train.sinkhorn_tol;

  CsvWriter csv(out_dir / "metrics.csv");
  csv.header({"step", "time", "sinkhorn", "sinkhorn_converged",
              "initial_sinkhorn", "ratio"});

  const auto choice = parse_integrator(cfg.integrator);
  MultiscaleConfig ms = cfg.ms;
  if (choice.stages > 0) ms.stages = choice.stages;
  NoiseStream stream(cfg.ms.seed, 0);
  NoiseDraw noise{Vec(model.theta_dim()), Vec(state.z.size())};
  StepWorkspace ws;

  double initial = -1.0;
  std::vector<double> series;
  std::int64_t checkpoint_ordinal = 0;
  SinkhornEvaluator evaluator(holdout, sink);
  auto checkpoint = [&](std::int64_t step) {
    // fixed stream addresses: snapshot point i moves continuously with
    // theta, so checkpoint-to-checkpoint comparisons share their draw noise
    const Mat generated = model.sample(
        state.theta, static_cast<int>(holdout.cols()), eval_stream, 0);
    const SinkhornResult res = evaluator.evaluate(generated);
    if (initial < 0.0) initial = res.value;
    series.push_back(res.value);
    csv.row({step, state.time, res.value, res.converged, initial,
             initial > 0.0 ? res.value / initial : 1.0});
    char name[64];
    std::snprintf(name, sizeof(name), "samples_%06lld.csv",
                  static_cast<long long>(step));
    CsvWriter samples(out_dir / name);
    std::vector<std::string> cols(model.sample_dim());
    for (int d = 0; d < model.sample_dim(); ++d) cols[d] = "x" + std::to_string(d + 1);
    samples.header(cols);
    std::vector<std::string> cells(model.sample_dim());
    for (Eigen::Index c = 0; c < generated.cols(); ++c) {
      for (int d = 0; d < model.sample_dim(); ++d)
        cells[d] = format_double(generated(d, c));
      samples.row(cells);
    }
    std::snprintf(name, sizeof(name), "theta_%06lld.csv",
                  static_cast<long long>(step));
    CsvWriter theta_csv(out_dir / name);
    std::vector<std::string> tcols(model.theta_dim());
    for (int d = 0; d < model.theta_dim(); ++d) tcols[d] = "t" + std::to_string(d);
    theta_csv.header(tcols);
    std::vector<std::string> tcells(model.theta_dim());
    for (int d = 0; d < model.theta_dim(); ++d)
      tcells[d] = format_double(state.theta[d]);
    theta_csv.row(tcells);
    log << "step " << step << " sinkhorn " << res.value << "\n";
    ++checkpoint_ordinal;
  };

  checkpoint(0);
  for (std::int64_t step = 0; step < n_steps; ++step) {
    draw_noise(stream, static_cast<std::uint64_t>(step), noise);
    if (choice.integrator == Integrator::EulerMaruyama)
      em_step(state, model, data, ms, noise, ws);
    else
      srock_step(state, model, data, ms, noise, ws);
    if (state_diverged(state))
      return {kExitDivergence,
              "diverged at step " + std::to_string(step + 1)};
    if ((step + 1) % interval == 0 || step + 1 == n_steps) checkpoint(step + 1);
  }

  if (cfg.plots)
    plot_csv_columns(out_dir / "metrics.csv", out_dir / "sinkhorn.svg", "step",
                     {"sinkhorn"},
                     {"transport divergence to held-out data", "step",
                      "sinkhorn divergence", false, false});

  const double final_value = series.back();
  int monotone = 0;
  for (std::size_t i = 1; i < series.size(); ++i)
    if (series[i] <= series[i - 1]) ++monotone;
  const double frac =
      series.size() > 1
          ? static_cast<double>(monotone) / (static_cast<double>(series.size()) - 1.0)
          : 1.0;
  log << "initial " << initial << " final " << final_value << " monotone "
      << frac << "\n";
  if (final_value >= cfg.train.target_ratio * initial ||
      frac < cfg.train.min_monotone_frac)
    return {kExitAcceptanceFailure, "transport divergence did not improve"};
  return {};
}

}  // namespace

int run_experiment(const fs::path& config_path, const RunOverrides& overrides,
                   std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::load(config_path);
    if (overrides.seed) cfg.ms.seed = *overrides.seed;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.no_plots) cfg.plots = false;
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  fs::path out_dir = cfg.out_dir;
  if (out_dir.is_relative()) {
    if (const char* root = std::getenv("SLOWFAST_OUT_ROOT"))
      out_dir = fs::path(root) / out_dir;
  }
  cfg.out_dir = out_dir;

  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome outcome;
  try {
    fs::create_directories(out_dir);
    switch (cfg.kind) {
      case ExperimentKind::GaussianValidate:
        outcome = run_gaussian_validate(cfg, out_dir, log);
        break;
      case ExperimentKind::AveragingGap:
        outcome = run_averaging_gap(cfg, out_dir, log);
        break;
      case ExperimentKind::OrderScan:
        outcome = run_order_scan(cfg, out_dir, log);
        break;
      case ExperimentKind::ErgodicScan:
        outcome = run_ergodic_scan(cfg, out_dir, log);
        break;
      case ExperimentKind::StabilityScan:
        outcome = run_stability_scan(cfg, out_dir, log);
        break;
      case ExperimentKind::MomentAudit:
        outcome = run_moment_audit(cfg, out_dir, log);
        break;
      case ExperimentKind::BananaTrain:
        outcome = run_banana_train(cfg, out_dir, log);
        break;
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome = {kExitDivergence, e.what()};
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::ofstream manifest(out_dir / "manifest.txt");
  manifest << "[run]\n";
  manifest << "version = " << SLOWFAST_VERSION << "\n";
  manifest << "status = "
           << (outcome.status == kExitOk
                   ? "ok"
                   : outcome.status == kExitDivergence ? "diverged"
                                                       : "failed-acceptance")
           << "\n";
  if (!outcome.note.empty()) manifest << "note = " << outcome.note << "\n";
  manifest << "wall_seconds = " << format_double(wall) << "\n\n";
  manifest << cfg.serialize();

  if (outcome.status != kExitOk)
    log << "run finished with status " << outcome.status << " (" << outcome.note
        << ")\n";
  return outcome.status;
}

}  // namespace slowfast

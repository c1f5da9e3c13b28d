#include "slowfast/diagnostics.hpp"

#include "slowfast/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

namespace {

// ---------------------------------------------------------------------------
// log-domain Sinkhorn with epsilon scaling

Mat pairwise_sq_dist(const Mat& x, const Mat& y) {
  const Eigen::Index n = x.cols(), m = y.cols();
  Mat c(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      c(i, j) = (x.col(i) - y.col(j)).squaredNorm();
  return c;
}

// log sum_j exp((pot_j - col_j) / eps) over one contiguous cost column
double lse_column(const Vec& pot, const Mat& cost, Eigen::Index col,
                  double eps) {
  thread_local Vec buf;
  buf = (pot - cost.col(col)) / eps;
  const double best = buf.maxCoeff();
  if (!std::isfinite(best)) return best;
  return best + std::log((buf.array() - best).exp().sum());
}

// over-relaxation factor for the polish phase; plain updates are kept while
// annealing
constexpr double kSinkhornOmega = 1.8;

struct DualSolve {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// OT_eps between uniform clouds: value = mean(f) + mean(g) at the converged
// potentials. Anneals eps from the cost scale down to the target; both cost
// orientations are kept so every update reads contiguous columns. When
// `warm` is set the passed potentials are used as-is and annealing is
// skipped.
DualSolve solve_asymmetric(const Mat& cost, double eps_target, int max_iter,
                           double tol, Vec& f, Vec& g, bool warm) {
  const Eigen::Index n = cost.rows(), m = cost.cols();
  const Mat cost_t = cost.transpose();
  const double log_n = std::log(static_cast<double>(n));
  const double log_m = std::log(static_cast<double>(m));
  if (!warm) {
    f = Vec::Zero(n);
    g = Vec::Zero(m);
  }
  Vec f_old(n);

  auto update = [&](double eps, double omega) {
    f_old = f;
    parallel_for(n, [&](std::int64_t i) {
      const double cand = -eps * (lse_column(g, cost_t, i, eps) - log_m);
      f[i] = (1.0 - omega) * f[i] + omega * cand;
    });
    parallel_for(m, [&](std::int64_t j) {
      const double cand = -eps * (lse_column(f, cost, j, eps) - log_n);
      g[j] = (1.0 - omega) * g[j] + omega * cand;
    });
    return (f - f_old).cwiseAbs().maxCoeff();
  };

  DualSolve out;
  if (!warm) {
    double eps = std::max(cost.maxCoeff(), eps_target);
    while (eps > eps_target) {
      update(eps, 1.0);
      ++out.iterations;
      eps = std::max(0.5 * eps, eps_target);
    }
  }
  for (int it = 0; it < max_iter; ++it) {
    const double change = update(eps_target, kSinkhornOmega);
    ++out.iterations;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  out.value = f.mean() + g.mean();
  return out;
}

DualSolve solve_asymmetric(const Mat& cost, double eps_target, int max_iter,
                           double tol) {
  Vec f, g;
  return solve_asymmetric(cost, eps_target, max_iter, tol, f, g, false);
}

// Symmetric self-term OT_eps(a, a) via the averaged fixed-point iteration
// (the cost matrix is symmetric, so column access covers both orientations).
DualSolve solve_symmetric(const Mat& cost, double eps_target, int max_iter,
                          double tol) {
  const Eigen::Index n = cost.rows();
  const double log_n = std::log(static_cast<double>(n));
  Vec p = Vec::Zero(n), p_new(n);

  auto update = [&](double eps) {
    parallel_for(n, [&](std::int64_t i) {
      p_new[i] = 0.5 * (p[i] - eps * (lse_column(p, cost, i, eps) - log_n));
    });
    const double change = (p_new - p).cwiseAbs().maxCoeff();
    p.swap(p_new);
    return change;
  };

  double eps = std::max(cost.maxCoeff(), eps_target);
  DualSolve out;
  while (eps > eps_target) {
    update(eps);
    ++out.iterations;
    eps = std::max(0.5 * eps, eps_target);
  }
  for (int it = 0; it < max_iter; ++it) {
    const double change = update(eps_target);
    ++out.iterations;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  out.value = 2.0 * p.mean();
  return out;
}

SelfCost self_cost(const Mat& pts, const SinkhornConfig& cfg) {
  const DualSolve s = solve_symmetric(pairwise_sq_dist(pts, pts),
                                      cfg.blur * cfg.blur, cfg.max_iter,
                                      cfg.tol);
  return {s.value, s.converged, s.iterations};
}

}  // namespace

SelfCost entropic_self_cost(const Mat& pts, const SinkhornConfig& cfg) {
  cfg.validate();
  if (pts.cols() == 0)
    throw std::invalid_argument("point set must be non-empty");
  return self_cost(pts, cfg);
}

SinkhornResult sinkhorn_divergence(const Mat& x, const Mat& y,
                                   const SinkhornConfig& cfg) {
  SelfCost cached{0.0, true, 0};
  const SelfCost* self_y = nullptr;
  if (cfg.debiased) {
    cfg.validate();
    if (y.cols() == 0)
      throw std::invalid_argument("point sets must be non-empty");
    cached = self_cost(y, cfg);
    self_y = &cached;
  }
  return sinkhorn_divergence(x, y, cfg, self_y);
}

SinkhornResult sinkhorn_divergence(const Mat& x, const Mat& y,
                                   const SinkhornConfig& cfg,
                                   const SelfCost* self_y) {
  cfg.validate();
  if (x.cols() == 0 || y.cols() == 0)
    throw std::invalid_argument("point sets must be non-empty");
  if (x.rows() != y.rows())
    throw std::invalid_argument("point sets must share a dimension");
  const double eps = cfg.blur * cfg.blur;

  const DualSolve cross =
      solve_asymmetric(pairwise_sq_dist(x, y), eps, cfg.max_iter, cfg.tol);
  SinkhornResult res;
  res.converged = cross.converged;
  res.iterations = cross.iterations;
  if (!cfg.debiased) {
    res.value = cross.value;
    return res;
  }
  const SelfCost sx = self_cost(x, cfg);
  SelfCost sy{0.0, true, 0};
  if (!self_y) {
    sy = self_cost(y, cfg);
    self_y = &sy;
  }
  res.converged = cross.converged && sx.converged && self_y->converged;
  res.iterations =
      std::max({cross.iterations, sx.iterations, self_y->iterations});
  res.value =
      std::max(0.0, cross.value - 0.5 * sx.value - 0.5 * self_y->value);
  return res;
}

SinkhornEvaluator::SinkhornEvaluator(Mat reference, SinkhornConfig cfg)
    : ref_(std::move(reference)), cfg_(cfg) {
  cfg_.validate();
  if (ref_.cols() == 0)
    throw std::invalid_argument("reference set must be non-empty");
  self_ref_ = self_cost(ref_, cfg_);
}

SinkhornResult SinkhornEvaluator::evaluate(const Mat& generated) {
  if (generated.rows() != ref_.rows())
    throw std::invalid_argument("point sets must share a dimension");
  const double eps = cfg_.blur * cfg_.blur;
  const bool warm = warm_ && f_.size() == generated.cols();
  const DualSolve cross =
      solve_asymmetric(pairwise_sq_dist(generated, ref_), eps, cfg_.max_iter,
                       cfg_.tol, f_, g_, warm);
  warm_ = true;
  const SelfCost sx = self_cost(generated, cfg_);
  SinkhornResult res;
  res.converged = cross.converged && sx.converged && self_ref_.converged;
  res.iterations = std::max(cross.iterations, sx.iterations);
  res.value =
      std::max(0.0, cross.value - 0.5 * sx.value - 0.5 * self_ref_.value);
  return res;
}

// ---------------------------------------------------------------------------

FrozenMomentSeries frozen_moment_ensemble(const EnergyModel& model,
                                          const FrozenEnsembleSpec& spec) {
  if (spec.replicas < 2) throw std::invalid_argument("need >= 2 replicas");
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  const int dx = model.sample_dim();
  if (spec.z0.size() != static_cast<Eigen::Index>(spec.n_particles) * dx)
    throw std::invalid_argument("z0 size mismatch");

  const auto n_steps = static_cast<std::int64_t>(
      std::llround(spec.horizon / spec.delta));
  const int n_check = std::max(2, spec.checkpoints);
  std::vector<std::int64_t> check_steps(n_check);
  for (int c = 0; c < n_check; ++c)
    check_steps[c] = n_steps * c / (n_check - 1);

  FrozenMomentSeries series;
  series.z0_norm = spec.z0.norm();
  series.n_particles = spec.n_particles;
  series.d_x = dx;
  series.times.resize(n_check);
  for (int c = 0; c < n_check; ++c)
    series.times[c] = check_steps[c] * spec.delta;

  const std::int64_t r_total = spec.replicas;
  std::vector<double> v2(r_total * n_check), v4(r_total * n_check);

  MultiscaleConfig cfg;
  cfg.delta = spec.delta;
  cfg.n_particles = spec.n_particles;
  cfg.horizon = spec.horizon;
  cfg.seed = spec.seed;

  parallel_for(r_total, [&](std::int64_t r) {
    NoiseStream stream(spec.seed, static_cast<std::uint64_t>(r));
    SystemState state{spec.theta, spec.z0, dx, 0.0};
    NoiseDraw noise{Vec(), Vec(state.z.size())};
    StepWorkspace ws;
    int next_check = 0;
    for (std::int64_t step = 0; step <= n_steps; ++step) {
      while (next_check < n_check && check_steps[next_check] == step) {
        const double n2 = state.z.squaredNorm();
        v2[r * n_check + next_check] = n2;
        v4[r * n_check + next_check] = n2 * n2;
        ++next_check;
      }
      if (step == n_steps) break;
      stream.fill_normals(static_cast<std::uint64_t>(step), kZSubsystem,
                          noise.z_noise);
      frozen_step(state, model, cfg, noise, ws);
    }
  });

  series.m2.resize(n_check);
  series.m2_se.resize(n_check);
  series.m4.resize(n_check);
  series.m4_se.resize(n_check);
  for (int c = 0; c < n_check; ++c) {
    double s2 = 0, s22 = 0, s4 = 0, s44 = 0;
    for (std::int64_t r = 0; r < r_total; ++r) {
      s2 += v2[r * n_check + c];
      s22 += v2[r * n_check + c] * v2[r * n_check + c];
      s4 += v4[r * n_check + c];
      s44 += v4[r * n_check + c] * v4[r * n_check + c];
    }
    const double m2 = s2 / r_total, m4 = s4 / r_total;
    series.m2[c] = m2;
    series.m4[c] = m4;
    series.m2_se[c] =
        std::sqrt(std::max(0.0, s22 / r_total - m2 * m2) / r_total);
    series.m4_se[c] =
        std::sqrt(std::max(0.0, s44 / r_total - m4 * m4) / r_total);
  }
  return series;
}

MomentAudit moment_bound_audit(const FrozenMomentSeries& series, int k,
                               double r_tilde, double b_tilde) {
  if (k < 2 || k % 2 != 0)
    throw std::invalid_argument("moment order must be even and >= 2");
  if (k != 2 && k != 4)
    throw std::invalid_argument("ensemble carries orders 2 and 4 only");
  if (!(r_tilde > 0.0)) throw std::invalid_argument("r_tilde must be > 0");
  const int d_z = series.n_particles * series.d_x;

  MomentAudit audit;
  audit.k = k;
  audit.alpha_k = 0.5 * k * r_tilde;
  audit.gamma_k = std::pow(
      2.0 * (series.n_particles * b_tilde + d_z + k - 2) / r_tilde, 0.5 * k);

  const auto& est = (k == 2) ? series.m2 : series.m4;
  const auto& se = (k == 2) ? series.m2_se : series.m4_se;
  const double z0k = std::pow(series.z0_norm, k);

  audit.pass = true;
  audit.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < series.times.size(); ++c) {
    const double bound =
        std::exp(-audit.alpha_k * series.times[c]) * z0k + audit.gamma_k;
    const double margin = bound + 4.0 * se[c] - est[c];
    if (margin < audit.worst_margin) {
      audit.worst_margin = margin;
      audit.worst_index = static_cast<int>(c);
    }
    if (margin < 0.0) audit.pass = false;
  }
  return audit;
}

// ---------------------------------------------------------------------------

AveragingGapResult averaging_gap_scan(const Dataset& data,
                                      const AveragingGapSpec& spec) {
  if (spec.eps_list.size() < 3)
    throw std::invalid_argument("need >= 3 epsilon values");
  if (!is_geometric(spec.eps_list))
    throw std::invalid_argument("epsilon grid must be geometric");
  if (data.dim() != 1)
    throw std::invalid_argument("gap scan is built for scalar components");
  if (!(spec.burn_in_time < spec.horizon))
    throw std::invalid_argument("burn-in must end before the horizon");

  const double ybar = data.mean()[0];
  const int n = spec.n_particles;
  const double averaged_var = 1.0 / n;

  AveragingGapResult result;
  std::vector<double> oracle_gaps;
  for (double eps : spec.eps_list) {
    LinearOracle oracle(eps, n, ybar);
    const double gap = std::abs(oracle.stationary_cov()(0, 0) - averaged_var);
    oracle_gaps.push_back(gap);
    result.points.push_back({eps, gap, 0.0, 0.0});
  }
  result.oracle_estimate = fit_order(spec.eps_list, oracle_gaps);

  GaussianMeanModel model(1);
  for (std::size_t e = 0; e < spec.eps_list.size(); ++e) {
    MultiscaleConfig cfg;
    cfg.epsilon = spec.eps_list[e];
    cfg.delta = spec.delta;
    cfg.n_particles = n;
    cfg.stages = spec.stages;
    cfg.horizon = spec.horizon;
    cfg.seed = spec.seed + e;
    cfg.validate();
    const std::int64_t burn =
        static_cast<std::int64_t>(std::llround(spec.burn_in_time / spec.delta));
    const std::int64_t n_steps = cfg.steps();

    std::vector<double> rep_var(spec.replicas);
    parallel_for(spec.replicas, [&](std::int64_t r) {
      NoiseStream stream(cfg.seed, static_cast<std::uint64_t>(r));
      SystemState state{Vec::Constant(1, ybar), Vec::Constant(n, ybar), 1, 0.0};
      NoiseDraw noise{Vec(1), Vec(n)};
      StepWorkspace ws;
      ScalarMoments acc;
      for (std::int64_t step = 0; step < n_steps; ++step) {
        draw_noise(stream, static_cast<std::uint64_t>(step), noise);
        if (spec.integrator == Integrator::EulerMaruyama)
          em_step(state, model, data, cfg, noise, ws);
        else
          srock_step(state, model, data, cfg, noise, ws);
        if (step >= burn) acc.add(state.theta[0]);
      }
      rep_var[r] = acc.variance();
    });
    const double var_mean = sample_mean(rep_var);
    const double var_se =
        std::sqrt(sample_variance(rep_var) / spec.replicas);
    result.points[e].sim_gap = std::abs(var_mean - averaged_var);
    result.points[e].sim_se = var_se;
    LinearOracle oracle(spec.eps_list[e], n, ybar);
    const double oracle_var = oracle.stationary_cov()(0, 0);
    if (std::abs(var_mean - oracle_var) > 3.0 * var_se)
      result.sim_agrees = false;
  }
  return result;
}

// ---------------------------------------------------------------------------

WeakOrderResult weak_order_scan(const Dataset& data, const WeakOrderSpec& spec) {
  if (spec.deltas.size() < 3)
    throw std::invalid_argument("need >= 3 delta values");
  if (data.dim() != 1)
    throw std::invalid_argument("weak-order scan is built for d = 1");
  const double d_min = *std::min_element(spec.deltas.begin(), spec.deltas.end());
  const std::size_t n_levels = spec.deltas.size();
  std::vector<std::int64_t> strides(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) {
    const double ratio = spec.deltas[k] / d_min;
    strides[k] = static_cast<std::int64_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(strides[k])) > 1e-9)
      throw std::invalid_argument(
          "deltas must be integer multiples of the finest for common noise");
  }
  const auto fine_steps =
      static_cast<std::int64_t>(std::llround(spec.t_final / d_min));

  GaussianMeanModel model(1);
  const int n = spec.n_particles;

  // oracle value at t_final from the transient moment system
  LinearOracle oracle(spec.epsilon, n, data.mean()[0]);
  Vec m0 = Vec::Constant(1 + n, spec.x0);
  m0[0] = spec.theta0;
  const auto [mt, st] =
      oracle.transient_moments(m0, Mat::Zero(1 + n, 1 + n), spec.t_final);
  const double oracle_value = spec.observable == Observable::Theta
                                  ? mt[0]
                                  : mt[0] * mt[0] + st(0, 0);

  // per-block partial sums keep the reduction order fixed regardless of the
  // thread count
  const std::int64_t block_size = 4096;
  const std::int64_t n_blocks = (spec.replicas + block_size - 1) / block_size;
  std::vector<double> block_sum(n_blocks * n_levels, 0.0);
  std::vector<double> block_sumsq(n_blocks * n_levels, 0.0);

  parallel_for(n_blocks, [&](std::int64_t blk) {
    const std::int64_t r_lo = blk * block_size;
    const std::int64_t r_hi = std::min(spec.replicas, r_lo + block_size);
    std::vector<SystemState> states(n_levels);
    std::vector<MultiscaleConfig> cfgs(n_levels);
    std::vector<Vec> pending_theta(n_levels), pending_z(n_levels);
    for (std::size_t k = 0; k < n_levels; ++k) {
      cfgs[k].epsilon = spec.epsilon;
      cfgs[k].delta = spec.deltas[k];
      cfgs[k].n_particles = n;
      cfgs[k].stages = spec.stages;
    }
    NoiseDraw fine{Vec(1), Vec(n)};
    NoiseDraw coarse{Vec(1), Vec(n)};
    StepWorkspace ws;
    for (std::int64_t r = r_lo; r < r_hi; ++r) {
      NoiseStream stream(spec.seed, static_cast<std::uint64_t>(r));
      for (std::size_t k = 0; k < n_levels; ++k) {
        states[k] =
            SystemState{Vec::Constant(1, spec.theta0), Vec::Constant(n, spec.x0),
                        1, 0.0};
        pending_theta[k] = Vec::Zero(1);
        pending_z[k] = Vec::Zero(n);
      }
      for (std::int64_t s = 0; s < fine_steps; ++s) {
        draw_noise(stream, static_cast<std::uint64_t>(s), fine);
        for (std::size_t k = 0; k < n_levels; ++k) {
          pending_theta[k] += fine.theta_noise;
          pending_z[k] += fine.z_noise;
          if ((s + 1) % strides[k] == 0) {
            const double norm = std::sqrt(static_cast<double>(strides[k]));
            coarse.theta_noise = pending_theta[k] / norm;
            coarse.z_noise = pending_z[k] / norm;
            if (spec.integrator == Integrator::EulerMaruyama)
              em_step(states[k], model, data, cfgs[k], coarse, ws);
            else
              srock_step(states[k], model, data, cfgs[k], coarse, ws);
            pending_theta[k].setZero();
            pending_z[k].setZero();
          }
        }
      }
      for (std::size_t k = 0; k < n_levels; ++k) {
        const double th = states[k].theta[0];
        const double phi = spec.observable == Observable::Theta ? th : th * th;
        block_sum[blk * n_levels + k] += phi;
        block_sumsq[blk * n_levels + k] += phi * phi;
      }
    }
  });

  WeakOrderResult result;
  result.oracle_value = oracle_value;
  std::vector<double> errors;
  for (std::size_t k = 0; k < n_levels; ++k) {
    double s = 0.0, ss = 0.0;
    for (std::int64_t blk = 0; blk < n_blocks; ++blk) {
      s += block_sum[blk * n_levels + k];
      ss += block_sumsq[blk * n_levels + k];
    }
    const double mean = s / spec.replicas;
    const double var = std::max(0.0, ss / spec.replicas - mean * mean);
    WeakOrderPoint pt;
    pt.delta = spec.deltas[k];
    pt.error = std::abs(mean - oracle_value);
    pt.std_error = std::sqrt(var / spec.replicas);
    result.points.push_back(pt);
    errors.push_back(pt.error);
  }
  // a zero horizon leaves every level at the initial state and all errors
  // vanish up to accumulation rounding; there is no order to fit
  const double floor = 1e-13 * std::max(1.0, std::abs(oracle_value));
  if (*std::min_element(errors.begin(), errors.end()) > floor) {
    result.estimate = fit_order(spec.deltas, errors);
  } else {
    result.estimate.grid = spec.deltas;
    result.estimate.errors = errors;
    result.estimate.noise_dominated = true;
  }
  return result;
}

// ---------------------------------------------------------------------------

ErgodicScanResult ergodic_bias_scan(const Dataset& data,
                                    const ErgodicScanSpec& spec) {
  if (!(spec.horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
  if (spec.horizon < 200.0)
    throw std::invalid_argument("ergodic scan needs a horizon >= 200");
  if (spec.deltas.size() < 3)
    throw std::invalid_argument("need >= 3 delta values");
  if (!is_geometric(spec.deltas))
    throw std::invalid_argument("delta grid must be geometric");
  if (data.dim() != 1)
    throw std::invalid_argument("ergodic scan is built for d = 1");
  if (!(spec.burn_in_time < spec.horizon))
    throw std::invalid_argument("burn-in must end before the horizon");

  const double ybar = data.mean()[0];
  const int n = spec.n_particles;
  LinearOracle oracle(spec.epsilon, n, ybar);
  const double oracle_value =
      spec.observable == Observable::Theta
          ? ybar
          : ybar * ybar + oracle.stationary_cov()(0, 0);

  GaussianMeanModel model(1);
  ErgodicScanResult result;
  result.oracle_value = oracle_value;
  std::vector<double> biases;
  for (std::size_t k = 0; k < spec.deltas.size(); ++k) {
    MultiscaleConfig cfg;
    cfg.epsilon = spec.epsilon;
    cfg.delta = spec.deltas[k];
    cfg.n_particles = n;
    cfg.stages = spec.stages;
    cfg.horizon = spec.horizon;
    cfg.seed = spec.seed + k;
    cfg.validate();
    const std::int64_t burn =
        static_cast<std::int64_t>(std::llround(spec.burn_in_time / cfg.delta));
    const std::int64_t n_steps = cfg.steps();

    std::vector<double> rep_avg(spec.replicas);
    parallel_for(spec.replicas, [&](std::int64_t r) {
      NoiseStream stream(cfg.seed, static_cast<std::uint64_t>(r));
      SystemState state{Vec::Constant(1, ybar), Vec::Constant(n, ybar), 1, 0.0};
      NoiseDraw noise{Vec(1), Vec(n)};
      StepWorkspace ws;
      double acc = 0.0;
      std::int64_t count = 0;
      for (std::int64_t step = 0; step < n_steps; ++step) {
        draw_noise(stream, static_cast<std::uint64_t>(step), noise);
        if (spec.integrator == Integrator::EulerMaruyama)
          em_step(state, model, data, cfg, noise, ws);
        else
          srock_step(state, model, data, cfg, noise, ws);
        if (step >= burn) {
          const double th = state.theta[0];
          acc += spec.observable == Observable::Theta ? th : th * th;
          ++count;
        }
      }
      rep_avg[r] = acc / static_cast<double>(count);
    });
    ErgodicScanPoint pt;
    pt.delta = cfg.delta;
    pt.bias = std::abs(sample_mean(rep_avg) - oracle_value);
    pt.std_error = std::sqrt(sample_variance(rep_avg) / spec.replicas);
    result.points.push_back(pt);
    biases.push_back(pt.bias);
  }

  const double min_bias = *std::min_element(biases.begin(), biases.end());
  double max_se = 0.0;
  for (const auto& pt : result.points) max_se = std::max(max_se, pt.std_error);
  result.noise_dominated = max_se > 0.5 * min_bias;
  if (min_bias > 0.0) {
    result.estimate = fit_order(spec.deltas, biases);
    result.estimate.noise_dominated = result.noise_dominated;
  } else {
    result.estimate.grid = spec.deltas;
    result.estimate.errors = biases;
    result.estimate.noise_dominated = result.noise_dominated = true;
  }
  return result;
}

// ---------------------------------------------------------------------------

double stability_scan(const StabilitySpec& spec) {
  GaussianMeanModel model(1);
  const Dataset data = Dataset::from_scalars({0.0});

  auto survives = [&](double delta_over_eps) {
    MultiscaleConfig cfg;
    cfg.epsilon = spec.epsilon;
    cfg.delta = delta_over_eps * spec.epsilon;
    cfg.stages = spec.stages;
    cfg.n_particles = 1;
    SystemState state{Vec::Constant(1, 1.0), Vec::Constant(1, -1.0), 1, 0.0};
    NoiseDraw zero{Vec::Zero(1), Vec::Zero(1)};
    StepWorkspace ws;
    for (std::int64_t step = 0; step < spec.steps; ++step) {
      if (spec.integrator == Integrator::EulerMaruyama)
        em_step(state, model, data, cfg, zero, ws);
      else
        srock_step(state, model, data, cfg, zero, ws);
      if (state_diverged(state)) return false;
    }
    return true;
  };

  double lo = 0.25;
  if (!survives(lo)) return 0.0;
  const double theory = spec.integrator == Integrator::EulerMaruyama
                            ? 2.0
                            : 2.0 * spec.stages * spec.stages;
  double hi = 1.5 * theory;
  while (survives(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 64.0 * theory)
      throw std::runtime_error("no stability boundary found");
  }
  while ((hi - lo) > spec.tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (survives(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace slowfast

#include "slowfast/integrators.hpp"

#include <chrono>
#include <cmath>

namespace slowfast {

void multiscale_drift(const EnergyModel& model, const Dataset& data,
                      const MultiscaleConfig& cfg, ConstVecRef theta,
                      ConstVecRef z, VecRef dtheta, VecRef dz) {
  StepWorkspace ws;
  multiscale_drift(model, data, cfg, theta, z, dtheta, dz, ws);
}

void multiscale_drift(const EnergyModel& model, const Dataset& data,
                      const MultiscaleConfig& cfg, ConstVecRef theta,
                      ConstVecRef z, VecRef dtheta, VecRef dz,
                      StepWorkspace& ws) {
  bar_e_grad_theta(model, data, theta, z, dtheta, ws.grad_scratch,
                   ws.data_term);
  dtheta /= cfg.n_particles;
  bar_e_grad_z(model, data, theta, z, dz);
  dz *= -1.0 / cfg.epsilon;
}

void em_step(SystemState& state, const EnergyModel& model, const Dataset& data,
             const MultiscaleConfig& cfg, const NoiseDraw& noise,
             StepWorkspace& ws) {
  ws.dtheta.resize(state.theta.size());
  ws.dz.resize(state.z.size());
  multiscale_drift(model, data, cfg, state.theta, state.z, ws.dtheta, ws.dz,
                   ws);
  state.theta += cfg.delta * ws.dtheta +
                 std::sqrt(2.0 * cfg.delta / cfg.n_particles) * noise.theta_noise;
  state.z += cfg.delta * ws.dz +
             std::sqrt(2.0 * cfg.delta / cfg.epsilon) * noise.z_noise;
  state.time += cfg.delta;
}

SystemState em_step(const SystemState& state, const EnergyModel& model,
                    const Dataset& data, const MultiscaleConfig& cfg,
                    const NoiseDraw& noise) {
  SystemState out = state;
  StepWorkspace ws;
  em_step(out, model, data, cfg, noise, ws);
  return out;
}

void srock_step(SystemState& state, const EnergyModel& model,
                const Dataset& data, const MultiscaleConfig& cfg,
                const NoiseDraw& noise, StepWorkspace& ws) {
  if (cfg.stages < 2) throw std::invalid_argument("stage count must be >= 2");
  const Eigen::Index dth = state.theta.size();
  const Eigen::Index dz = state.z.size();
  ws.u.resize(dth + dz);
  ws.noise.resize(dth + dz);
  ws.g.resize(dth + dz);
  ws.u.head(dth) = state.theta;
  ws.u.tail(dz) = state.z;
  // injected once at stage m-1, doubled by the final update to give one-step
  // noise sqrt(2 delta / N), sqrt(2 delta / eps)
  ws.noise.head(dth) =
      std::sqrt(cfg.delta / (2.0 * cfg.n_particles)) * noise.theta_noise;
  ws.noise.tail(dz) =
      std::sqrt(cfg.delta / (2.0 * cfg.epsilon)) * noise.z_noise;

  auto drift = [&](const Vec& v, Vec& g) {
    multiscale_drift(model, data, cfg, v.head(dth), v.tail(dz), g.head(dth),
                     g.tail(dz), ws);
  };
  chebyshev_stage_recursion(cfg.stages, cfg.delta, drift, ws.noise, ws.u,
                            ws.k_prev, ws.k_cur, ws.g);
  state.theta = ws.u.head(dth);
  state.z = ws.u.tail(dz);
  state.time += cfg.delta;
}

SystemState srock_step(const SystemState& state, const EnergyModel& model,
                       const Dataset& data, const MultiscaleConfig& cfg,
                       const NoiseDraw& noise) {
  SystemState out = state;
  StepWorkspace ws;
  srock_step(out, model, data, cfg, noise, ws);
  return out;
}

double chebyshev_amplification(int m, double p) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (p < 0.0) throw std::invalid_argument("p must be >= 0");
  const double x = 1.0 - p / (static_cast<double>(m) * m);
  double t_prev = 1.0;
  double t_cur = x;
  for (int l = 2; l <= m; ++l) {
    const double t_next = 2.0 * x * t_cur - t_prev;
    t_prev = t_cur;
    t_cur = t_next;
  }
  return t_cur;
}

void averaged_step(Vec& theta, const EnergyModel& model, const Dataset& data,
                   const MultiscaleConfig& cfg, ConstVecRef theta_noise) {
  if (!model.has_averaged_drift())
    throw std::invalid_argument("model has no analytic averaged drift");
  Vec drift(theta.size());
  model.averaged_drift(theta, data, drift);
  theta += cfg.delta * drift +
           std::sqrt(2.0 * cfg.delta / cfg.n_particles) * theta_noise;
}

void frozen_step(SystemState& state, const EnergyModel& model,
                 const MultiscaleConfig& cfg, const NoiseDraw& noise,
                 StepWorkspace& ws) {
  ws.dz.resize(state.z.size());
  const int dx = model.sample_dim();
  const int n = static_cast<int>(state.z.size()) / dx;
  for (int i = 0; i < n; ++i)
    model.grad_x(state.theta, state.z.segment(i * dx, dx),
                 ws.dz.segment(i * dx, dx));
  state.z += -cfg.delta * ws.dz + std::sqrt(2.0 * cfg.delta) * noise.z_noise;
  state.time += cfg.delta;
}

bool state_diverged(const SystemState& state) {
  if (!state.theta.allFinite() || !state.z.allFinite()) return true;
  if (state.theta.size() &&
      state.theta.cwiseAbs().maxCoeff() > kDivergenceThreshold)
    return true;
  if (state.z.size() && state.z.cwiseAbs().maxCoeff() > kDivergenceThreshold)
    return true;
  return false;
}

TrajectoryRecord run_trajectory(Integrator integrator, SystemState state,
                                const EnergyModel& model, const Dataset& data,
                                const MultiscaleConfig& cfg,
                                std::uint64_t replica,
                                const TrajectoryOptions& options) {
  cfg.validate();
  if (state.theta.size() != model.theta_dim())
    throw std::invalid_argument("theta dimension mismatch");
  if (state.z.size() != static_cast<Eigen::Index>(cfg.n_particles) *
                            model.sample_dim())
    throw std::invalid_argument("particle count does not match configuration");

  const auto t0 = std::chrono::steady_clock::now();
  TrajectoryRecord rec;
  rec.theta_moments.init(state.theta.size());

  NoiseStream stream(cfg.seed, replica);
  NoiseDraw noise{Vec(state.theta.size()), Vec(state.z.size())};
  StepWorkspace ws;

  auto record = [&](std::int64_t step) {
    rec.theta_moments.add(state.theta);
    const double zn = state.z.norm();
    rec.z_norm_moments.add(zn);
    if (options.record_samples) {
      rec.times.push_back(state.time);
      rec.thetas.push_back(state.theta);
      rec.z_norms.push_back(zn);
    }
    for (const auto& obs : options.observers) obs(step, state);
  };

  const std::int64_t n_steps = cfg.steps();
  if (n_steps == 0) record(0);
  for (std::int64_t step = 0; step < n_steps; ++step) {
    draw_noise(stream, static_cast<std::uint64_t>(step), noise);
    if (integrator == Integrator::EulerMaruyama)
      em_step(state, model, data, cfg, noise, ws);
    else
      srock_step(state, model, data, cfg, noise, ws);
    if (state_diverged(state)) {
      rec.diverged = true;
      rec.divergence_step = step;
      break;
    }
    const std::int64_t done = step + 1;
    if (done > cfg.burn_in && (done - cfg.burn_in) % cfg.thinning == 0)
      record(done);
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

}  // namespace slowfast

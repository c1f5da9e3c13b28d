#pragma once

#include "slowfast/core.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/stats.hpp"
#include "slowfast/types.hpp"

#include <functional>
#include <vector>

namespace slowfast {

enum class Integrator { EulerMaruyama, SRock };

// Scratch buffers reused across steps of one trajectory.
struct StepWorkspace {
  Vec dtheta, dz;                  // drift blocks
  Vec u, k_prev, k_cur, g, noise;  // stage recursion buffers
  Vec grad_scratch, data_term;     // model-evaluation scratch
};

// Drift of the joint system: dtheta/dt = (1/N) grad_theta Ebar,
// dz/dt = -(1/eps) grad_z Ebar.
void multiscale_drift(const EnergyModel& model, const Dataset& data,
                      const MultiscaleConfig& cfg, ConstVecRef theta,
                      ConstVecRef z, VecRef dtheta, VecRef dz);
void multiscale_drift(const EnergyModel& model, const Dataset& data,
                      const MultiscaleConfig& cfg, ConstVecRef theta,
                      ConstVecRef z, VecRef dtheta, VecRef dz,
                      StepWorkspace& ws);

// One Euler-Maruyama step; gradients are evaluated at the pre-update state:
//   theta' = theta + (delta/N) grad_theta Ebar + sqrt(2 delta / N) xi_theta
//   z'     = z - (delta/eps) grad_z Ebar + sqrt(2 delta / eps) xi_z
void em_step(SystemState& state, const EnergyModel& model, const Dataset& data,
             const MultiscaleConfig& cfg, const NoiseDraw& noise,
             StepWorkspace& ws);
SystemState em_step(const SystemState& state, const EnergyModel& model,
                    const Dataset& data, const MultiscaleConfig& cfg,
                    const NoiseDraw& noise);

// m-stage Chebyshev-type stage recursion shared by the stabilised scheme and
// its linear-test harness.  K_0 = u, K_1 = K_0 + (delta/m^2) f(K_0),
// K_l = (2 delta/m^2) f(K_{l-1}) + 2 K_{l-1} - K_{l-2}; the noise vector is
// added once at stage m-1 (stage 1 when m = 2) and is doubled by the final
// three-term update, so it must carry half the intended one-step amplitude.
template <class DriftFn>
void chebyshev_stage_recursion(int m, double delta, DriftFn&& drift,
                               const Vec& noise, Vec& u, Vec& k_prev,
                               Vec& k_cur, Vec& g) {
  if (m < 2) throw std::invalid_argument("stage count must be >= 2");
  const double w = delta / (static_cast<double>(m) * m);
  k_prev = u;
  drift(k_prev, g);
  k_cur = k_prev + w * g;
  if (m == 2) k_cur += noise;
  for (int l = 2; l <= m; ++l) {
    drift(k_cur, g);
    k_prev = 2.0 * w * g + 2.0 * k_cur - k_prev;
    if (l == m - 1) k_prev += noise;
    k_prev.swap(k_cur);
  }
  u = k_cur;
}

// One step of the m-stage stabilised scheme. Theta- and z-stages advance in
// lockstep: stage l of either block consumes stage l-1 of both. Costs m
// gradient evaluations of Ebar per step.
void srock_step(SystemState& state, const EnergyModel& model,
                const Dataset& data, const MultiscaleConfig& cfg,
                const NoiseDraw& noise, StepWorkspace& ws);
SystemState srock_step(const SystemState& state, const EnergyModel& model,
                       const Dataset& data, const MultiscaleConfig& cfg,
                       const NoiseDraw& noise);

// Deterministic amplification of the m-stage recursion on the linear test
// problem f(u) = -lambda u with p = delta * lambda: returns T_m(1 - p/m^2)
// by the three-term recursion. |result| <= 1 iff p in [0, 2 m^2].
double chebyshev_amplification(int m, double p);

// Euler-Maruyama step of the averaged parameter dynamics,
//   theta' = theta + delta * drift(theta) + sqrt(2 delta / N) xi.
// Requires a model with an analytic averaged drift.
void averaged_step(Vec& theta, const EnergyModel& model, const Dataset& data,
                   const MultiscaleConfig& cfg, ConstVecRef theta_noise);

// Particle dynamics with theta frozen, on the unit timescale:
//   z' = z - delta * grad_z Ebar + sqrt(2 delta) xi_z.
void frozen_step(SystemState& state, const EnergyModel& model,
                 const MultiscaleConfig& cfg, const NoiseDraw& noise,
                 StepWorkspace& ws);

// Called on every recorded (post-burn-in, thinned) sample.
using TrajectoryObserver =
    std::function<void(std::int64_t step, const SystemState&)>;

struct TrajectoryRecord {
  std::vector<double> times;       // thinned sample times
  std::vector<Vec> thetas;         // thinned theta samples
  std::vector<double> z_norms;     // thinned ||z||
  VecMoments theta_moments;        // k = 1, 2, 4 accumulators
  ScalarMoments z_norm_moments;
  bool diverged = false;
  std::int64_t divergence_step = -1;
  double wall_seconds = 0.0;
};

struct TrajectoryOptions {
  bool record_samples = true;
  std::vector<TrajectoryObserver> observers;
};

// Drives one trajectory to cfg.steps(), feeding counter-addressed noise;
// identical (seed, replica, cfg) give bitwise-identical records. Aborts and
// flags when any state component exceeds the divergence threshold or turns
// non-finite.
TrajectoryRecord run_trajectory(Integrator integrator, SystemState state,
                                const EnergyModel& model, const Dataset& data,
                                const MultiscaleConfig& cfg,
                                std::uint64_t replica = 0,
                                const TrajectoryOptions& options = {});

bool state_diverged(const SystemState& state);

}  // namespace slowfast

#pragma once

#include "slowfast/integrators.hpp"
#include "slowfast/models.hpp"
#include "slowfast/oracle.hpp"
#include "slowfast/stats.hpp"
#include "slowfast/types.hpp"

#include <vector>

namespace slowfast {

// ---------------------------------------------------------------------------
// Entropic optimal transport

struct SinkhornConfig {
  double blur = 0.05;   // regularisation scale in distance units (eps = blur^2)
  int max_iter = 500;
  double tol = 1e-9;    // sup-norm change of the dual potentials
  bool debiased = true;

  void validate() const {
    if (!(blur > 0.0)) throw std::invalid_argument("blur must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  }
};

struct SinkhornResult {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
};

// Entropic self-cost OT_eps(a, a) of one cloud; reusable across repeated
// divergence evaluations against a fixed reference set.
struct SelfCost {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
};
SelfCost entropic_self_cost(const Mat& pts, const SinkhornConfig& cfg);

// Entropic OT discrepancy between two uniform point clouds (one point per
// column) with squared-Euclidean ground cost, computed by log-domain
// Sinkhorn iterations. With cfg.debiased the symmetric self-terms are
// subtracted and the result clamped at zero, giving a nonnegative, definite
// divergence. Non-convergence within max_iter is flagged, the last iterate
// is still returned.
SinkhornResult sinkhorn_divergence(const Mat& x, const Mat& y,
                                   const SinkhornConfig& cfg);
// Variant reusing a precomputed self-cost of y.
SinkhornResult sinkhorn_divergence(const Mat& x, const Mat& y,
                                   const SinkhornConfig& cfg,
                                   const SelfCost* self_y);

// Repeated divergence evaluations against one fixed reference cloud: the
// reference self-term is computed once and the dual potentials of the cross
// problem warm-start from the previous call, which cuts the iteration count
// sharply when successive inputs move slowly (checkpointed training).
class SinkhornEvaluator {
 public:
  SinkhornEvaluator(Mat reference, SinkhornConfig cfg);
  SinkhornResult evaluate(const Mat& generated);
  const SelfCost& reference_self_cost() const { return self_ref_; }

 private:
  Mat ref_;
  SinkhornConfig cfg_;
  SelfCost self_ref_;
  Vec f_, g_;
  bool warm_ = false;
};

// ---------------------------------------------------------------------------
// Frozen-process moment audit

struct FrozenEnsembleSpec {
  Vec theta;
  Vec z0;               // common initial particle block
  int n_particles = 4;
  double delta = 0.01;
  double horizon = 20.0;
  std::int64_t replicas = 10000;
  int checkpoints = 40;
  std::uint64_t seed = 0;
};

// Ensemble estimates of E||Z_t||^k, k in {2, 4}, under the frozen dynamics.
struct FrozenMomentSeries {
  std::vector<double> times;
  std::vector<double> m2, m2_se;
  std::vector<double> m4, m4_se;
  double z0_norm = 0.0;
  int n_particles = 0;
  int d_x = 0;
};

FrozenMomentSeries frozen_moment_ensemble(const EnergyModel& model,
                                          const FrozenEnsembleSpec& spec);

// Checks the ensemble against the drift-condition moment bound
//   E||Z_t||^k <= exp(-alpha_k t) ||z0||^k + gamma_k + 4 SE,
// alpha_k = k r / 2, gamma_k = (2 (N b + d_z + k - 2) / r)^{k/2}.
struct MomentAudit {
  bool pass = false;
  int k = 0;
  double alpha_k = 0.0;
  double gamma_k = 0.0;
  double worst_margin = 0.0;  // min over t of (bound + 4 SE - estimate)
  int worst_index = -1;
};

MomentAudit moment_bound_audit(const FrozenMomentSeries& series, int k,
                               double r_tilde, double b_tilde);

// ---------------------------------------------------------------------------
// Averaging gap in epsilon

struct AveragingGapSpec {
  std::vector<double> eps_list;  // geometric, >= 3 values
  int n_particles = 1;
  // simulated side
  Integrator integrator = Integrator::SRock;
  int stages = 3;
  double delta = 5e-3;
  double horizon = 2000.0;
  double burn_in_time = 50.0;
  std::int64_t replicas = 32;
  std::uint64_t seed = 0;
};

struct AveragingGapPoint {
  double epsilon = 0.0;
  double oracle_gap = 0.0;
  double sim_gap = 0.0;
  double sim_se = 0.0;
};

struct AveragingGapResult {
  OrderEstimate oracle_estimate;
  std::vector<AveragingGapPoint> points;
  bool sim_agrees = true;  // |sim - oracle| <= 3 SE at every epsilon
};

// Oracle gap |Sigma_thetatheta(eps) - 1/N| from the Lyapunov solve, plus
// simulated gaps from long stabilised runs at each epsilon.
AveragingGapResult averaging_gap_scan(const Dataset& data,
                                      const AveragingGapSpec& spec);

// ---------------------------------------------------------------------------
// Weak order in delta at fixed time

enum class Observable { Theta, ThetaSquared };

struct WeakOrderSpec {
  Integrator integrator = Integrator::EulerMaruyama;
  int stages = 3;
  Observable observable = Observable::ThetaSquared;
  double t_final = 1.0;
  std::vector<double> deltas;  // >= 3 values, integer multiples of the finest
  std::int64_t replicas = 100000;
  double epsilon = 0.5;
  int n_particles = 1;
  double theta0 = 0.0;
  double x0 = 0.0;  // every particle starts here
  std::uint64_t seed = 0;
};

struct WeakOrderPoint {
  double delta = 0.0;
  double error = 0.0;       // |ensemble mean - oracle|
  double std_error = 0.0;   // Monte Carlo SE of the ensemble mean
};

struct WeakOrderResult {
  OrderEstimate estimate;
  std::vector<WeakOrderPoint> points;
  double oracle_value = 0.0;
};

// Ensemble error of E[phi(theta_T)] against the transient oracle. All delta
// levels of one replica share one Brownian path (coarse increments are sums
// of fine ones), so the Monte Carlo fluctuation is common across the grid.
WeakOrderResult weak_order_scan(const Dataset& data, const WeakOrderSpec& spec);

// ---------------------------------------------------------------------------
// Ergodic bias in delta

struct ErgodicScanSpec {
  Integrator integrator = Integrator::SRock;
  int stages = 3;
  Observable observable = Observable::ThetaSquared;
  std::vector<double> deltas;
  double horizon = 400.0;      // per replica, >= 200 required
  double burn_in_time = 40.0;
  std::int64_t replicas = 32;
  double epsilon = 0.1;
  int n_particles = 1;
  std::uint64_t seed = 0;
};

struct ErgodicScanPoint {
  double delta = 0.0;
  double bias = 0.0;
  double std_error = 0.0;
};

struct ErgodicScanResult {
  OrderEstimate estimate;
  std::vector<ErgodicScanPoint> points;
  double oracle_value = 0.0;
  bool noise_dominated = false;  // max SE > half the smallest bias
};

// Time-average of the observable over post-burn-in steps against the exact
// stationary expectation of the continuous system.
ErgodicScanResult ergodic_bias_scan(const Dataset& data,
                                    const ErgodicScanSpec& spec);

// ---------------------------------------------------------------------------
// Linear stability boundary

struct StabilitySpec {
  Integrator integrator = Integrator::EulerMaruyama;
  int stages = 3;          // stabilised scheme only
  double epsilon = 1e-3;   // stiff eigenvalue ~ 1/eps
  std::int64_t steps = 10000;
  double tol = 1e-3;       // relative bisection width
};

// Largest delta/eps whose drift-only trajectory stays below the divergence
// threshold over `steps` iterations, found by bisection on the Gaussian
// model.
double stability_scan(const StabilitySpec& spec);

}  // namespace slowfast

#pragma once

#include "slowfast/rng.hpp"
#include "slowfast/types.hpp"

#include <optional>
#include <vector>

namespace slowfast {

// E(theta, x) = 0.5 ||theta - x||^2 with d_theta = d_x = d.
// Z_theta = (2 pi)^{d/2}, constant in theta.
class GaussianMeanModel final : public EnergyModel {
 public:
  explicit GaussianMeanModel(int dim);

  int theta_dim() const override { return dim_; }
  int sample_dim() const override { return dim_; }
  double energy(ConstVecRef theta, ConstVecRef x) const override;
  void grad_theta(ConstVecRef theta, ConstVecRef x, VecRef out) const override;
  void grad_x(ConstVecRef theta, ConstVecRef x, VecRef out) const override;
  double log_partition(ConstVecRef theta) const override;

  bool has_averaged_drift() const override { return true; }
  // -grad V(theta) = mean(y) - theta
  void averaged_drift(ConstVecRef theta, const Dataset& data,
                      VecRef out) const override;

 private:
  int dim_;
};

// Isotropic mixture of Gaussians with learnable component means.
// theta stacks the K means (each in R^d); weights w_i and scales c_i are
// fixed. E(theta, x) = -log sum_i w_i exp(-||theta_i - x||^2 / (2 c_i^2)).
class MoGModel final : public EnergyModel {
 public:
  MoGModel(int n_components, int dim, Vec weights, Vec scales);
  // Equal weights, shared scale.
  MoGModel(int n_components, int dim, double scale);

  int n_components() const { return k_; }
  int component_dim() const { return dim_; }
  const Vec& weights() const { return weights_; }
  const Vec& scales() const { return scales_; }

  int theta_dim() const override { return k_ * dim_; }
  int sample_dim() const override { return dim_; }
  double energy(ConstVecRef theta, ConstVecRef x) const override;
  void grad_theta(ConstVecRef theta, ConstVecRef x, VecRef out) const override;
  void grad_x(ConstVecRef theta, ConstVecRef x, VecRef out) const override;
  double log_partition(ConstVecRef theta) const override;

  bool has_averaged_drift() const override { return true; }
  // block i: -(1/M) sum_j (theta_i - y_j) / c_i^2 * lambda_i(theta, y_j)
  void averaged_drift(ConstVecRef theta, const Dataset& data,
                      VecRef out) const override;

  // Component responsibilities lambda_i(theta, x); computed in log space so
  // distant components underflow gracefully. Sums to one.
  Vec responsibilities(ConstVecRef theta, ConstVecRef x) const;

  // Exact draws from p_theta: pick a component by its mass share, then a
  // Gaussian around its mean. One point per column.
  Mat sample(ConstVecRef theta, int n, const NoiseStream& stream,
             std::uint64_t step0 = 0) const;

 private:
  // log responsibilities and their log-sum; shared kernel of all evaluations
  void log_terms(ConstVecRef theta, ConstVecRef x, Vec& scratch,
                 double& lse) const;

  int k_;
  int dim_;
  Vec weights_;
  Vec scales_;
};

// Fixed 2-D target with unnormalised log-density
//   -0.5 (x1^2 + (2 x2 - x1^2)^2).
// Exact sampler: X1 = Y1, X2 = (Y2 + Y1^2) / 2 for Y1, Y2 iid N(0,1).
struct BananaDistribution {
  static double log_density(double x1, double x2);
  static double log_density(ConstVecRef x);
  // n draws, one point per column; addresses (step0 + i) in the stream.
  static Mat sample(int n, const NoiseStream& stream, std::uint64_t step0 = 0);
};

// Empirical check of the particle-drift dissipativity inequality
//   <grad_x E(theta, x), x>  >=  r ||x||^2 - b(theta)
// over finite grids. For each candidate r on a fixed lattice the smallest
// admissible b(theta) is the grid maximum of r||x||^2 - <grad_x E, x>,
// clamped at zero. A candidate is accepted only if, for every theta, that
// maximum is attained strictly inside the x-grid (a boundary maximum means
// the bound is a grid artifact and would keep growing with the radius).
struct DissipativityProbe {
  Vec candidates;                 // r lattice, ascending
  std::vector<Vec> b_curve;       // per candidate: b(theta) over the theta grid
  std::vector<bool> admissible;   // per candidate
  int best = -1;                  // largest admissible candidate, -1 if none

  bool failed() const { return best < 0; }
  double r_tilde() const { return best >= 0 ? candidates[best] : 0.0; }
  // Index of a lattice value (exact match within 1e-12), -1 if absent.
  int candidate_index(double r) const;
};

DissipativityProbe probe_dissipativity(const EnergyModel& model,
                                       const std::vector<Vec>& theta_grid,
                                       const std::vector<Vec>& x_grid);

// Uniform 1-D grid helper for probe inputs.
std::vector<Vec> grid_1d(double lo, double hi, int n);
// d-dimensional product grid of a 1-D lattice (small d only).
std::vector<Vec> grid_product(double lo, double hi, int n_per_axis, int dim);

}  // namespace slowfast

#pragma once

#include "slowfast/types.hpp"

#include <utility>

namespace slowfast {

// Exact moments of the coupled linear system arising from the Gaussian
// mean model with scalar components:
//   dU = -A U dt + b dt + S dW,   U = (theta, x^1, ..., x^N)
// with A(0,0) = 0, A(0,i) = 1/N, A(i,0) = -1/eps, A(i,i) = 1/eps,
// b = (ybar, 0, ..., 0) and Q = S S^T = diag(2/N, 2/eps, ..., 2/eps).
// For N = 1 this reduces exactly to the 2x2 system of the parametrised-mean
// example. Dimensions d > 1 separate componentwise, so the oracle is built
// per scalar component.
class LinearOracle {
 public:
  LinearOracle(double epsilon, int n_particles, double data_mean);

  const Mat& drift_matrix() const { return a_; }   // A
  const Vec& offset() const { return b_; }         // b
  const Mat& diffusion() const { return q_; }      // Q = S S^T
  double epsilon() const { return epsilon_; }
  int n_particles() const { return n_; }
  double data_mean() const { return ybar_; }

  // A^{-1} b; equals (ybar, ..., ybar).
  Vec stationary_mean() const;

  // Solves A S + S A^T = Q by dense vectorisation; the residual is checked
  // against 1e-10 in Frobenius norm.
  Mat stationary_cov() const;

  // Integrates dM/dt = -A M + b, dS/dt = -A S - S A^T + Q with classical
  // RK4 at step <= min(eps, 1)/50.
  std::pair<Vec, Mat> transient_moments(const Vec& mean0, const Mat& cov0,
                                        double t) const;

 private:
  double epsilon_;
  int n_;
  double ybar_;
  Mat a_;
  Vec b_;
  Mat q_;
};

}  // namespace slowfast

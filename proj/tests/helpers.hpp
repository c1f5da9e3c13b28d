#pragma once

#include "slowfast/rng.hpp"
#include "slowfast/types.hpp"

#include <functional>

namespace slowfast::test {

// Central finite difference of f at x; step scaled per coordinate.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    xm[i] = x[i] - step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

inline double rel_error(const Vec& approx, const Vec& exact) {
  const double scale = std::max(1.0, exact.norm());
  return (approx - exact).norm() / scale;
}

// Deterministic pseudo-random probe points.
inline Vec random_vec(const NoiseStream& stream, std::uint64_t step,
                      Eigen::Index dim, double scale = 1.0) {
  Vec v(dim);
  stream.fill_normals(step, 7, v);
  return scale * v;
}

// Energy that is constant in both arguments; every gradient vanishes.
class ZeroEnergyModel final : public EnergyModel {
 public:
  ZeroEnergyModel(int d_theta, int d_x) : d_theta_(d_theta), d_x_(d_x) {}
  int theta_dim() const override { return d_theta_; }
  int sample_dim() const override { return d_x_; }
  double energy(ConstVecRef, ConstVecRef) const override { return 1.0; }
  void grad_theta(ConstVecRef, ConstVecRef, VecRef out) const override {
    out.setZero();
  }
  void grad_x(ConstVecRef, ConstVecRef, VecRef out) const override {
    out.setZero();
  }
  double log_partition(ConstVecRef) const override { return 0.0; }

 private:
  int d_theta_, d_x_;
};

}  // namespace slowfast::test

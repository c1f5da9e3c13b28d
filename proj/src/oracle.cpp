#include "slowfast/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace slowfast {

LinearOracle::LinearOracle(double epsilon, int n_particles, double data_mean)
    : epsilon_(epsilon), n_(n_particles), ybar_(data_mean) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
  const int d = 1 + n_;
  a_ = Mat::Zero(d, d);
  for (int i = 1; i <= n_; ++i) {
    a_(0, i) = 1.0 / n_;
    a_(i, 0) = -1.0 / epsilon_;
    a_(i, i) = 1.0 / epsilon_;
  }
  b_ = Vec::Zero(d);
  b_[0] = ybar_;
  q_ = Mat::Zero(d, d);
  q_(0, 0) = 2.0 / n_;
  for (int i = 1; i <= n_; ++i) q_(i, i) = 2.0 / epsilon_;
}

Vec LinearOracle::stationary_mean() const {
  Eigen::FullPivLU<Mat> lu(a_);
  if (!lu.isInvertible())
    throw std::runtime_error("drift matrix is singular");  // cannot happen for eps > 0
  return lu.solve(b_);
}

Mat LinearOracle::stationary_cov() const {
  const int d = 1 + n_;
  // (I (x) A + A (x) I) vec(S) = vec(Q), column-major vec
  Mat k = Mat::Zero(d * d, d * d);
  const Mat id = Mat::Identity(d, d);
  // vec(A S) = (I (x) A) vec(S): block-diagonal copies of A
  for (int j = 0; j < d; ++j) k.block(j * d, j * d, d, d) += a_;
  // vec(S A^T) = (A (x) I) vec(S)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) k.block(j * d, i * d, d, d) += a_(j, i) * id;
  Vec vec_q(d * d);
  for (int j = 0; j < d; ++j) vec_q.segment(j * d, d) = q_.col(j);
  const Vec vec_s = k.partialPivLu().solve(vec_q);
  Mat s(d, d);
  for (int j = 0; j < d; ++j) s.col(j) = vec_s.segment(j * d, d);
  s = 0.5 * (s + s.transpose());
  const double residual = (a_ * s + s * a_.transpose() - q_).norm();
  if (!(residual < 1e-10))
    throw std::runtime_error("Lyapunov solve residual too large");
  return s;
}

std::pair<Vec, Mat> LinearOracle::transient_moments(const Vec& mean0,
                                                    const Mat& cov0,
                                                    double t) const {
  if (t < 0.0) throw std::invalid_argument("t must be >= 0");
  const int d = 1 + n_;
  if (mean0.size() != d || cov0.rows() != d || cov0.cols() != d)
    throw std::invalid_argument("moment dimensions mismatch");
  Vec m = mean0;
  Mat s = cov0;
  if (t == 0.0) return {m, s};

  const double h_max = std::min(epsilon_, 1.0) / 50.0;
  const auto n_sub = static_cast<std::int64_t>(std::ceil(t / h_max));
  const double h = t / static_cast<double>(n_sub);

  const auto f_mean = [&](const Vec& v) { return Vec(-a_ * v + b_); };
  const auto f_cov = [&](const Mat& c) {
    return Mat(-a_ * c - c * a_.transpose() + q_);
  };
  for (std::int64_t k = 0; k < n_sub; ++k) {
    const Vec k1m = f_mean(m);
    const Mat k1s = f_cov(s);
    const Vec k2m = f_mean(m + 0.5 * h * k1m);
    const Mat k2s = f_cov(s + 0.5 * h * k1s);
    const Vec k3m = f_mean(m + 0.5 * h * k2m);
    const Mat k3s = f_cov(s + 0.5 * h * k2s);
    const Vec k4m = f_mean(m + h * k3m);
    const Mat k4s = f_cov(s + h * k3s);
    m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    if (!m.allFinite() || !s.allFinite())
      throw std::runtime_error("moment integration left the finite range");
  }
  return {m, s};
}

}  // namespace slowfast

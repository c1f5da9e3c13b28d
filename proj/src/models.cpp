#include "slowfast/models.hpp"

#include <cmath>
#include <limits>

namespace slowfast {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

GaussianMeanModel::GaussianMeanModel(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
}

double GaussianMeanModel::energy(ConstVecRef theta, ConstVecRef x) const {
  return 0.5 * (theta - x).squaredNorm();
}

void GaussianMeanModel::grad_theta(ConstVecRef theta, ConstVecRef x,
                                   VecRef out) const {
  out = theta - x;
}

void GaussianMeanModel::grad_x(ConstVecRef theta, ConstVecRef x,
                               VecRef out) const {
  out = x - theta;
}

double GaussianMeanModel::log_partition(ConstVecRef) const {
  return 0.5 * dim_ * kLogTwoPi;
}

void GaussianMeanModel::averaged_drift(ConstVecRef theta, const Dataset& data,
                                       VecRef out) const {
  out = data.mean() - theta;
}

MoGModel::MoGModel(int n_components, int dim, Vec weights, Vec scales)
    : k_(n_components), dim_(dim), weights_(std::move(weights)),
      scales_(std::move(scales)) {
  if (k_ < 1) throw std::invalid_argument("n_components must be >= 1");
  if (dim_ < 1) throw std::invalid_argument("dim must be >= 1");
  if (weights_.size() != k_ || scales_.size() != k_)
    throw std::invalid_argument("weights/scales must have K entries");
  if ((weights_.array() <= 0.0).any())
    throw std::invalid_argument("weights must be positive");
  if ((scales_.array() <= 0.0).any())
    throw std::invalid_argument("scales must be positive");
}

MoGModel::MoGModel(int n_components, int dim, double scale)
    : MoGModel(n_components, dim, Vec::Ones(n_components),
               Vec::Constant(n_components, scale)) {}

void MoGModel::log_terms(ConstVecRef theta, ConstVecRef x, Vec& s,
                         double& lse) const {
  s.resize(k_);
  for (int i = 0; i < k_; ++i) {
    const double d2 = (theta.segment(i * dim_, dim_) - x).squaredNorm();
    s[i] = std::log(weights_[i]) - d2 / (2.0 * scales_[i] * scales_[i]);
  }
  const double smax = s.maxCoeff();
  lse = smax + std::log((s.array() - smax).exp().sum());
}

double MoGModel::energy(ConstVecRef theta, ConstVecRef x) const {
  Vec s;
  double lse;
  log_terms(theta, x, s, lse);
  return -lse;
}

Vec MoGModel::responsibilities(ConstVecRef theta, ConstVecRef x) const {
  Vec s;
  double lse;
  log_terms(theta, x, s, lse);
  return (s.array() - lse).exp();
}

void MoGModel::grad_theta(ConstVecRef theta, ConstVecRef x, VecRef out) const {
  const Vec lambda = responsibilities(theta, x);
  for (int i = 0; i < k_; ++i) {
    const double inv_c2 = 1.0 / (scales_[i] * scales_[i]);
    out.segment(i * dim_, dim_) =
        lambda[i] * inv_c2 * (theta.segment(i * dim_, dim_) - x);
  }
}

void MoGModel::grad_x(ConstVecRef theta, ConstVecRef x, VecRef out) const {
  const Vec lambda = responsibilities(theta, x);
  out.setZero();
  for (int i = 0; i < k_; ++i) {
    const double inv_c2 = 1.0 / (scales_[i] * scales_[i]);
    out += lambda[i] * inv_c2 * (x - theta.segment(i * dim_, dim_));
  }
}

double MoGModel::log_partition(ConstVecRef) const {
  // log sum_i w_i (2 pi c_i^2)^{d/2}, independent of theta
  Vec s(k_);
  for (int i = 0; i < k_; ++i)
    s[i] = std::log(weights_[i]) +
           0.5 * dim_ * (kLogTwoPi + 2.0 * std::log(scales_[i]));
  const double smax = s.maxCoeff();
  return smax + std::log((s.array() - smax).exp().sum());
}

void MoGModel::averaged_drift(ConstVecRef theta, const Dataset& data,
                              VecRef out) const {
  out.setZero();
  for (int j = 0; j < data.size(); ++j) {
    const Vec lambda = responsibilities(theta, data.point(j));
    for (int i = 0; i < k_; ++i) {
      const double inv_c2 = 1.0 / (scales_[i] * scales_[i]);
      out.segment(i * dim_, dim_) -=
          lambda[i] * inv_c2 * (theta.segment(i * dim_, dim_) - data.point(j));
    }
  }
  out /= data.size();
}

Mat MoGModel::sample(ConstVecRef theta, int n, const NoiseStream& stream,
                     std::uint64_t step0) const {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  // component mass shares pi_i proportional to w_i (2 pi c_i^2)^{d/2}
  Vec logmass(k_);
  for (int i = 0; i < k_; ++i)
    logmass[i] = std::log(weights_[i]) +
                 0.5 * dim_ * (kLogTwoPi + 2.0 * std::log(scales_[i]));
  const double lse = logmass.maxCoeff() +
                     std::log((logmass.array() - logmass.maxCoeff()).exp().sum());
  Vec cdf(k_);
  double acc = 0.0;
  for (int i = 0; i < k_; ++i) {
    acc += std::exp(logmass[i] - lse);
    cdf[i] = acc;
  }
  cdf[k_ - 1] = 1.0;

  Mat out(dim_, n);
  Vec u(1), g(dim_);
  for (int s = 0; s < n; ++s) {
    stream.fill_uniforms(step0 + s, 2, u);
    int comp = 0;
    while (comp < k_ - 1 && u[0] > cdf[comp]) ++comp;
    stream.fill_normals(step0 + s, 3, g);
    out.col(s) = theta.segment(comp * dim_, dim_) + scales_[comp] * g;
  }
  return out;
}

double BananaDistribution::log_density(double x1, double x2) {
  const double w = 2.0 * x2 - x1 * x1;
  return -0.5 * (x1 * x1 + w * w);
}

double BananaDistribution::log_density(ConstVecRef x) {
  if (x.size() != 2) throw std::invalid_argument("banana density is 2-D");
  return log_density(x[0], x[1]);
}

Mat BananaDistribution::sample(int n, const NoiseStream& stream,
                               std::uint64_t step0) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Mat out(2, n);
  Vec y(2);
  for (int s = 0; s < n; ++s) {
    stream.fill_normals(step0 + s, 0, y);
    out(0, s) = y[0];
    out(1, s) = 0.5 * (y[1] + y[0] * y[0]);
  }
  return out;
}

int DissipativityProbe::candidate_index(double r) const {
  for (int i = 0; i < candidates.size(); ++i)
    if (std::abs(candidates[i] - r) < 1e-12) return i;
  return -1;
}

DissipativityProbe probe_dissipativity(const EnergyModel& model,
                                       const std::vector<Vec>& theta_grid,
                                       const std::vector<Vec>& x_grid) {
  if (theta_grid.empty() || x_grid.empty())
    throw std::invalid_argument("probe grids must be non-empty");
  double max_norm = 0.0;
  for (const auto& x : x_grid) max_norm = std::max(max_norm, x.norm());
  if (max_norm < 10.0)
    throw std::invalid_argument("x grid must cover a ball of radius >= 10");
  const double interior = 0.9 * max_norm;

  DissipativityProbe probe;
  const int n_cand = 20;  // 0.05, 0.10, ..., 1.00
  probe.candidates.resize(n_cand);
  for (int c = 0; c < n_cand; ++c) probe.candidates[c] = 0.05 * (c + 1);
  probe.b_curve.assign(n_cand, Vec::Zero(theta_grid.size()));
  probe.admissible.assign(n_cand, true);

  // one pass of gradient evaluations, reused for every candidate
  Vec g;
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    const Vec& theta = theta_grid[t];
    g.resize(model.sample_dim());
    std::vector<double> inner(x_grid.size()), norm2(x_grid.size());
    for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
      model.grad_x(theta, x_grid[ix], g);
      inner[ix] = g.dot(x_grid[ix]);
      norm2[ix] = x_grid[ix].squaredNorm();
    }
    for (int c = 0; c < n_cand; ++c) {
      const double r = probe.candidates[c];
      double worst = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
        const double slack = r * norm2[ix] - inner[ix];
        if (slack > worst) {
          worst = slack;
          arg = ix;
        }
      }
      if (worst <= 0.0) {
        probe.b_curve[c][static_cast<Eigen::Index>(t)] = 0.0;
        continue;  // inequality holds with b = 0
      }
      probe.b_curve[c][static_cast<Eigen::Index>(t)] = worst;
      if (x_grid[arg].norm() > interior) probe.admissible[c] = false;
    }
  }
  for (int c = n_cand - 1; c >= 0; --c) {
    if (probe.admissible[c]) {
      probe.best = c;
      break;
    }
  }
  return probe;
}

std::vector<Vec> grid_1d(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
  std::vector<Vec> grid(n);
  for (int i = 0; i < n; ++i) {
    Vec v(1);
    v[0] = lo + (hi - lo) * i / (n - 1);
    grid[i] = v;
  }
  return grid;
}

std::vector<Vec> grid_product(double lo, double hi, int n_per_axis, int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim must be 1..3");
  std::vector<double> axis(n_per_axis);
  for (int i = 0; i < n_per_axis; ++i)
    axis[i] = lo + (hi - lo) * i / (n_per_axis - 1);
  std::vector<Vec> grid;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec v(dim);
    for (int d = 0; d < dim; ++d) v[d] = axis[idx[d]];
    grid.push_back(v);
    int d = 0;
    while (d < dim && ++idx[d] == n_per_axis) idx[d++] = 0;
    if (d == dim) break;
  }
  return grid;
}

}  // namespace slowfast

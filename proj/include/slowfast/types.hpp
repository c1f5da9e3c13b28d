#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>

namespace slowfast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecRef = Eigen::Ref<Eigen::VectorXd>;

// Parameters of the two-timescale system and its discretisation.
struct MultiscaleConfig {
  double epsilon = 0.1;   // timescale separation of the particle block
  double delta = 1e-3;    // integrator step size
  int n_particles = 1;    // N
  int stages = 3;         // m, stabilised scheme only
  double horizon = 1.0;   // simulated time; steps() = round(horizon/delta)
  std::uint64_t seed = 0;
  std::int64_t burn_in = 0;   // steps discarded before recording
  std::int64_t thinning = 1;  // record every k-th step after burn-in

  std::int64_t steps() const {
    return static_cast<std::int64_t>(std::llround(horizon / delta));
  }

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
    if (stages < 2) throw std::invalid_argument("stages must be >= 2");
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
    if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  }
};

// Observations y_1..y_M, stored one point per column.
class Dataset {
 public:
  explicit Dataset(Mat points) : points_(std::move(points)) {
    if (points_.cols() < 1)
      throw std::invalid_argument("dataset needs at least one observation");
  }

  static Dataset from_scalars(const std::vector<double>& values) {
    Mat m(1, static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(0, j) = values[j];
    return Dataset(std::move(m));
  }

  int size() const { return static_cast<int>(points_.cols()); }  // M
  int dim() const { return static_cast<int>(points_.rows()); }   // d_x
  auto point(int j) const { return points_.col(j); }
  const Mat& points() const { return points_; }
  Vec mean() const { return points_.rowwise().mean(); }

 private:
  Mat points_;
};

// Joint state: slow parameter theta and the flattened particle block
// z = (x^1, ..., x^N).
struct SystemState {
  Vec theta;
  Vec z;
  int particle_dim = 1;  // d_x
  double time = 0.0;

  int n_particles() const {
    return particle_dim > 0 ? static_cast<int>(z.size()) / particle_dim : 0;
  }
  auto particle(int i) { return z.segment(i * particle_dim, particle_dim); }
  auto particle(int i) const {
    return z.segment(i * particle_dim, particle_dim);
  }
};

// Energy model E(theta, x) with analytic gradients and log-partition.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual int theta_dim() const = 0;
  virtual int sample_dim() const = 0;

  virtual double energy(ConstVecRef theta, ConstVecRef x) const = 0;
  virtual void grad_theta(ConstVecRef theta, ConstVecRef x, VecRef out) const = 0;
  virtual void grad_x(ConstVecRef theta, ConstVecRef x, VecRef out) const = 0;

  // log Z_theta; analytic for all bundled models.
  virtual double log_partition(ConstVecRef theta) const = 0;

  // Analytic averaged drift -grad V(theta), where available.
  virtual bool has_averaged_drift() const { return false; }
  virtual void averaged_drift(ConstVecRef /*theta*/, const Dataset& /*data*/,
                              VecRef /*out*/) const {
    throw std::logic_error("model has no analytic averaged drift");
  }
};

inline constexpr double kDivergenceThreshold = 1e8;

}  // namespace slowfast

#pragma once

#include "slowfast/types.hpp"

#include <vector>

namespace slowfast {

// Running sums of x, x^2, x^4 for a scalar stream.
struct ScalarMoments {
  std::int64_t n = 0;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;

  void add(double x) {
    const double x2 = x * x;
    ++n;
    s1 += x;
    s2 += x2;
    s4 += x2 * x2;
  }
  double mean() const { return n ? s1 / n : 0.0; }
  double raw2() const { return n ? s2 / n : 0.0; }
  double raw4() const { return n ? s4 / n : 0.0; }
  double variance() const {
    const double m = mean();
    return n ? raw2() - m * m : 0.0;
  }
};

// Componentwise running sums for a vector stream.
struct VecMoments {
  std::int64_t n = 0;
  Eigen::ArrayXd s1, s2, s4;

  void init(Eigen::Index dim) {
    n = 0;
    s1 = Eigen::ArrayXd::Zero(dim);
    s2 = Eigen::ArrayXd::Zero(dim);
    s4 = Eigen::ArrayXd::Zero(dim);
  }
  void add(ConstVecRef x) {
    const Eigen::ArrayXd a = x.array();
    const Eigen::ArrayXd a2 = a * a;
    ++n;
    s1 += a;
    s2 += a2;
    s4 += a2 * a2;
  }
  Vec mean() const { return n ? Vec(s1 / n) : Vec(); }
  Vec variance() const {
    if (!n) return Vec();
    const Eigen::ArrayXd m = s1 / n;
    return Vec(s2 / n - m * m);
  }
};

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);  // denominator n-1

// Standard error of the mean of an autocorrelated series, by batch means.
double batch_means_stderr(const std::vector<double>& series, int n_batches = 32);

// Standard error of the sample variance of an autocorrelated series: the
// series is cut into batches, the per-batch variances are treated as
// approximately independent estimates.
double batch_variance_stderr(const std::vector<double>& series,
                             int n_batches = 32);

// Log-log least-squares order fit.
struct OrderEstimate {
  std::vector<double> grid;    // delta or epsilon values
  std::vector<double> errors;  // positive
  double slope = 0.0;
  double slope_halfwidth = 0.0;  // 2 * SE(slope) from the fit residuals
  bool noise_dominated = false;
};

// Requires >= 3 grid points and strictly positive errors.
OrderEstimate fit_order(const std::vector<double>& grid,
                        const std::vector<double>& errors);

// True when consecutive ratios agree to 1e-9 relative.
bool is_geometric(const std::vector<double>& grid);

}  // namespace slowfast

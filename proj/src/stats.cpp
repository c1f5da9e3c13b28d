#include "slowfast/stats.hpp"

#include <cmath>
#include <numeric>

namespace slowfast {

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / (xs.size() - 1);
}

double batch_means_stderr(const std::vector<double>& series, int n_batches) {
  if (series.size() < static_cast<std::size_t>(2 * n_batches))
    n_batches = std::max(2, static_cast<int>(series.size() / 2));
  const std::size_t len = series.size() / n_batches;
  std::vector<double> means(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += series[b * len + i];
    means[b] = acc / len;
  }
  return std::sqrt(sample_variance(means) / n_batches);
}

double batch_variance_stderr(const std::vector<double>& series, int n_batches) {
  if (series.size() < static_cast<std::size_t>(4 * n_batches))
    n_batches = std::max(2, static_cast<int>(series.size() / 4));
  const std::size_t len = series.size() / n_batches;
  std::vector<double> vars(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    std::vector<double> chunk(series.begin() + b * len,
                              series.begin() + (b + 1) * len);
    vars[b] = sample_variance(chunk);
  }
  return std::sqrt(sample_variance(vars) / n_batches);
}

OrderEstimate fit_order(const std::vector<double>& grid,
                        const std::vector<double>& errors) {
  if (grid.size() != errors.size())
    throw std::invalid_argument("grid/error size mismatch");
  if (grid.size() < 3)
    throw std::invalid_argument("order fit needs at least 3 points");
  const int n = static_cast<int>(grid.size());
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(grid[i] > 0.0)) throw std::invalid_argument("grid must be positive");
    if (!(errors[i] > 0.0))
      throw std::invalid_argument("errors must be positive");
    lx[i] = std::log(grid[i]);
    ly[i] = std::log(errors[i]);
  }
  const double mx = sample_mean(lx), my = sample_mean(ly);
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ly[i] - intercept - slope * lx[i];
    rss += r * r;
  }
  OrderEstimate est;
  est.grid = grid;
  est.errors = errors;
  est.slope = slope;
  if (n > 2) est.slope_halfwidth = 2.0 * std::sqrt(rss / (n - 2) / sxx);
  return est;
}

bool is_geometric(const std::vector<double>& grid) {
  if (grid.size() < 2) return false;
  const double ratio = grid[1] / grid[0];
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double r = grid[i + 1] / grid[i];
    if (std::abs(r - ratio) > 1e-9 * std::abs(ratio)) return false;
  }
  return true;
}

}  // namespace slowfast

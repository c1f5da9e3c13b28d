#include "slowfast/core.hpp"

#include "helpers.hpp"
#include "slowfast/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace slowfast;
using test::fd_gradient;
using test::rel_error;

namespace {

Vec scalar(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_CASE("combined potential hand values") {
  GaussianMeanModel model(1);
  SUBCASE("all terms zero") {
    const Dataset data = Dataset::from_scalars({0.0});
    CHECK(bar_e_eval(model, data, scalar(0.0), scalar(0.0)) == doctest::Approx(0.0));
  }
  SUBCASE("particle and data terms cancel") {
    const Dataset data = Dataset::from_scalars({0.0});
    CHECK(bar_e_eval(model, data, scalar(1.0), scalar(0.0)) ==
          doctest::Approx(0.0));
  }
  SUBCASE("two data points") {
    const Dataset data = Dataset::from_scalars({0.0, 2.0});
    CHECK(bar_e_eval(model, data, scalar(2.0), scalar(1.0)) ==
          doctest::Approx(-0.5));
  }
}

TEST_CASE("combined potential theta gradient hand values") {
  GaussianMeanModel model(1);
  SUBCASE("theta equals particle and data") {
    const Dataset data = Dataset::from_scalars({1.0});
    CHECK(bar_e_grad_theta(model, data, scalar(1.0), scalar(1.0))[0] ==
          doctest::Approx(0.0));
  }
  SUBCASE("single particle cancellation") {
    const Dataset data = Dataset::from_scalars({0.0});
    CHECK(bar_e_grad_theta(model, data, scalar(1.0), scalar(0.0))[0] ==
          doctest::Approx(0.0));
  }
  SUBCASE("two particles") {
    const Dataset data = Dataset::from_scalars({0.0});
    Vec z(2);
    z << 1.0, 3.0;
    CHECK(bar_e_grad_theta(model, data, scalar(0.0), z)[0] ==
          doctest::Approx(-4.0));
  }
}

TEST_CASE("combined potential particle gradient") {
  GaussianMeanModel model(1);
  const Dataset data = Dataset::from_scalars({5.0});
  SUBCASE("zero at the particle optimum") {
    CHECK(bar_e_grad_z(model, data, scalar(2.0), scalar(2.0))[0] ==
          doctest::Approx(0.0));
  }
  SUBCASE("hand value") {
    CHECK(bar_e_grad_z(model, data, scalar(1.0), scalar(0.0))[0] ==
          doctest::Approx(-1.0));
  }
  SUBCASE("data independence and separability") {
    Vec z(3);
    z << 0.5, -2.0, 3.0;
    const Dataset other = Dataset::from_scalars({-7.0, 3.0});
    const Vec g1 = bar_e_grad_z(model, data, scalar(1.0), z);
    const Vec g2 = bar_e_grad_z(model, other, scalar(1.0), z);
    CHECK(g1 == g2);
    Vec z_mod = z;
    z_mod[2] = 100.0;
    const Vec g3 = bar_e_grad_z(model, data, scalar(1.0), z_mod);
    CHECK(g3[0] == g1[0]);
    CHECK(g3[1] == g1[1]);
  }
}

TEST_CASE("negative log-likelihood") {
  GaussianMeanModel model(1);
  SUBCASE("hand value at the data point") {
    const Dataset data = Dataset::from_scalars({0.0});
    CHECK(neg_log_likelihood(model, data, scalar(0.0)) ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI)));
  }
  SUBCASE("data mean minimises") {
    const Dataset data = Dataset::from_scalars({1.0, 3.0});
    const double at_mean = neg_log_likelihood(model, data, scalar(2.0));
    CHECK(at_mean < neg_log_likelihood(model, data, scalar(2.1)));
    CHECK(at_mean < neg_log_likelihood(model, data, scalar(1.9)));
    // hand value away from the minimum: (0 + 2)/2 + log(2 pi)/2
    CHECK(neg_log_likelihood(model, data, scalar(1.0)) ==
          doctest::Approx(1.0 + 0.5 * std::log(2.0 * M_PI)));
  }
  SUBCASE("differences ignore the constant") {
    const Dataset data = Dataset::from_scalars({1.0, 3.0});
    const double d1 = neg_log_likelihood(model, data, scalar(1.0), 2.0) -
                      neg_log_likelihood(model, data, scalar(0.0), 2.0);
    const double d2 = neg_log_likelihood(model, data, scalar(1.0), -5.0) -
                      neg_log_likelihood(model, data, scalar(0.0), -5.0);
    CHECK(d1 == doctest::Approx(d2));
  }
  SUBCASE("non-finite normaliser rejected") {
    const Dataset data = Dataset::from_scalars({0.0});
    CHECK_THROWS_AS(neg_log_likelihood(model, data, scalar(0.0),
                                       std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
  }
}

TEST_CASE("gradients of the combined potential match finite differences") {
  NoiseStream stream(11, 0);
  const GaussianMeanModel gauss(2);
  MoGModel mog(3, 2, 1.0);
  const Dataset data2(test::random_vec(stream, 0, 2).replicate(1, 3) +
                      Eigen::MatrixXd::Random(2, 3));
  const int n_particles = 3;
  for (const EnergyModel* model :
       {static_cast<const EnergyModel*>(&gauss),
        static_cast<const EnergyModel*>(&mog)}) {
    for (int probe = 0; probe < 100; ++probe) {
      const Vec theta =
          test::random_vec(stream, 100 + probe, model->theta_dim(), 1.5);
      const Vec z =
          test::random_vec(stream, 300 + probe, 2 * n_particles, 1.5);
      const Vec g_theta = bar_e_grad_theta(*model, data2, theta, z);
      const Vec g_z = bar_e_grad_z(*model, data2, theta, z);
      const Vec fd_theta = fd_gradient(
          [&](const Vec& t) { return bar_e_eval(*model, data2, t, z); }, theta);
      const Vec fd_z = fd_gradient(
          [&](const Vec& p) { return bar_e_eval(*model, data2, theta, p); }, z);
      CHECK(rel_error(g_theta, fd_theta) < 1e-6);
      CHECK(rel_error(g_z, fd_z) < 1e-6);
    }
  }
}

TEST_CASE("exact particle-average of the theta drift is the likelihood descent direction") {
  // (1/N) E_{z ~ p_theta^N}[grad_theta Ebar] = ybar - theta for the Gaussian
  GaussianMeanModel model(1);
  const Dataset data = Dataset::from_scalars({1.0, 3.0});
  const double theta_val = 0.7;
  const int n = 4;
  NoiseStream stream(5, 0);
  const std::int64_t draws = 200000;
  double acc = 0.0, acc2 = 0.0;
  Vec z(n);
  for (std::int64_t i = 0; i < draws; ++i) {
    stream.fill_normals(i, 0, z);
    z.array() += theta_val;  // p_theta = N(theta, 1) per particle
    const double g =
        bar_e_grad_theta(model, data, scalar(theta_val), z)[0] / n;
    acc += g;
    acc2 += g * g;
  }
  const double mean = acc / draws;
  const double se =
      std::sqrt((acc2 / draws - mean * mean) / static_cast<double>(draws));
  const double expected = 2.0 - theta_val;  // ybar - theta
  CHECK(std::abs(mean - expected) < 4.0 * se);

  // the same identity holds exactly through the analytic averaged drift
  Vec drift(1);
  model.averaged_drift(scalar(theta_val), data, drift);
  CHECK(drift[0] == doctest::Approx(expected));
}

TEST_CASE("combined potential is particle-permutation invariant") {
  MoGModel model(2, 2, 0.7);
  const Dataset data(Eigen::MatrixXd::Random(2, 4));
  NoiseStream stream(3, 0);
  const Vec theta = test::random_vec(stream, 1, 4);
  Vec z = test::random_vec(stream, 2, 6);
  const double before = bar_e_eval(model, data, theta, z);
  // rotate the three particles
  Vec rotated(6);
  rotated.segment(0, 2) = z.segment(4, 2);
  rotated.segment(2, 2) = z.segment(0, 2);
  rotated.segment(4, 2) = z.segment(2, 2);
  CHECK(bar_e_eval(model, data, theta, rotated) == doctest::Approx(before));
}

TEST_CASE("dimension mismatches are rejected") {
  GaussianMeanModel model(2);
  const Dataset data(Eigen::MatrixXd::Random(2, 3));
  const Dataset bad_data(Eigen::MatrixXd::Random(3, 3));
  Vec theta(2), z(4);
  theta.setZero();
  z.setZero();
  CHECK_THROWS_AS(bar_e_eval(model, data, Vec::Zero(3), z),
                  std::invalid_argument);
  CHECK_THROWS_AS(bar_e_eval(model, bad_data, theta, z),
                  std::invalid_argument);
  CHECK_THROWS_AS(bar_e_eval(model, data, theta, Vec::Zero(3)),
                  std::invalid_argument);
  CHECK_NOTHROW(bar_e_eval(model, data, theta, z));
}

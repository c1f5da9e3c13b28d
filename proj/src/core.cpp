#include "slowfast/core.hpp"

#include <cmath>

namespace slowfast {

namespace {

void check_dims(const EnergyModel& model, const Dataset& data,
                ConstVecRef theta, ConstVecRef z) {
  if (theta.size() != model.theta_dim())
    throw std::invalid_argument("theta dimension mismatch");
  if (data.dim() != model.sample_dim())
    throw std::invalid_argument("data dimension mismatch");
  if (z.size() % model.sample_dim() != 0 || z.size() == 0)
    throw std::invalid_argument("particle block dimension mismatch");
}

}  // namespace

double bar_e_eval(const EnergyModel& model, const Dataset& data,
                  ConstVecRef theta, ConstVecRef z) {
  check_dims(model, data, theta, z);
  const int dx = model.sample_dim();
  const int n = static_cast<int>(z.size()) / dx;
  double data_term = 0.0;
  for (int j = 0; j < data.size(); ++j)
    data_term += model.energy(theta, data.point(j));
  data_term /= data.size();
  double out = 0.0;
  for (int i = 0; i < n; ++i)
    out += model.energy(theta, z.segment(i * dx, dx)) - data_term;
  return out;
}

void bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                      ConstVecRef theta, ConstVecRef z, VecRef out) {
  Vec scratch, data_term;
  bar_e_grad_theta(model, data, theta, z, out, scratch, data_term);
}

void bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                      ConstVecRef theta, ConstVecRef z, VecRef out,
                      Vec& scratch, Vec& data_term) {
  check_dims(model, data, theta, z);
  const int dx = model.sample_dim();
  const int n = static_cast<int>(z.size()) / dx;
  scratch.resize(theta.size());
  data_term.resize(theta.size());
  data_term.setZero();
  for (int j = 0; j < data.size(); ++j) {
    model.grad_theta(theta, data.point(j), scratch);
    data_term += scratch;
  }
  data_term /= data.size();
  out.setZero();
  for (int i = 0; i < n; ++i) {
    model.grad_theta(theta, z.segment(i * dx, dx), scratch);
    out += scratch;
  }
  out -= n * data_term;
}

Vec bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                     ConstVecRef theta, ConstVecRef z) {
  Vec out(theta.size());
  bar_e_grad_theta(model, data, theta, z, out);
  return out;
}

void bar_e_grad_z(const EnergyModel& model, const Dataset& data,
                  ConstVecRef theta, ConstVecRef z, VecRef out) {
  check_dims(model, data, theta, z);
  const int dx = model.sample_dim();
  const int n = static_cast<int>(z.size()) / dx;
  for (int i = 0; i < n; ++i)
    model.grad_x(theta, z.segment(i * dx, dx), out.segment(i * dx, dx));
}

Vec bar_e_grad_z(const EnergyModel& model, const Dataset& data,
                 ConstVecRef theta, ConstVecRef z) {
  Vec out(z.size());
  bar_e_grad_z(model, data, theta, z, out);
  return out;
}

double neg_log_likelihood(const EnergyModel& model, const Dataset& data,
                          ConstVecRef theta, double log_z_theta) {
  if (!std::isfinite(log_z_theta))
    throw std::invalid_argument("log Z_theta must be finite");
  double acc = 0.0;
  for (int j = 0; j < data.size(); ++j)
    acc += model.energy(theta, data.point(j));
  return acc / data.size() + log_z_theta;
}

double neg_log_likelihood(const EnergyModel& model, const Dataset& data,
                          ConstVecRef theta) {
  return neg_log_likelihood(model, data, theta, model.log_partition(theta));
}

}  // namespace slowfast

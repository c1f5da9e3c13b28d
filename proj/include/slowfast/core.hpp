#pragma once

#include "slowfast/types.hpp"

namespace slowfast {

// Combined potential over the joint state,
//   Ebar(theta, z) = sum_i ( E(theta, x^i) - (1/M) sum_j E(theta, y_j) ).
double bar_e_eval(const EnergyModel& model, const Dataset& data,
                  ConstVecRef theta, ConstVecRef z);

// grad_theta Ebar = sum_i grad_theta E(theta, x^i)
//                   - (N/M) sum_j grad_theta E(theta, y_j).
// Dividing by N gives the drift of the slow block. The scratch overload
// avoids per-call allocation in step loops.
void bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                      ConstVecRef theta, ConstVecRef z, VecRef out);
void bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                      ConstVecRef theta, ConstVecRef z, VecRef out,
                      Vec& scratch, Vec& data_term);
Vec bar_e_grad_theta(const EnergyModel& model, const Dataset& data,
                     ConstVecRef theta, ConstVecRef z);

// grad_z Ebar: block i equals grad_x E(theta, x^i); data enters only through
// the shared interface (the value is data-independent).
void bar_e_grad_z(const EnergyModel& model, const Dataset& data,
                  ConstVecRef theta, ConstVecRef z, VecRef out);
Vec bar_e_grad_z(const EnergyModel& model, const Dataset& data,
                 ConstVecRef theta, ConstVecRef z);

// Negative empirical log-likelihood
//   V(theta) = (1/M) sum_j E(theta, y_j) + log Z_theta.
double neg_log_likelihood(const EnergyModel& model, const Dataset& data,
                          ConstVecRef theta, double log_z_theta);
// Convenience overload pulling log Z_theta from the model.
double neg_log_likelihood(const EnergyModel& model, const Dataset& data,
                          ConstVecRef theta);

}  // namespace slowfast

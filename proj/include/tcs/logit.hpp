#pragma once

#include "tcs/scenario.hpp"

#include <Eigen/Dense>

namespace tcs {

struct ModeCosts
{
    double car; // alpha*T + (tau - kappa)*p
    double pt;  // alpha*T_pt - kappa*p
};

ModeCosts mode_costs(double carTime, double ptTime, double price, const TcsParams& params);

/// Binary logit probability of driving, evaluated without overflow.
double logit_choice(double carTime, double ptTime, double price, const TcsParams& params);

/// Vectorized logit over all groups.
Eigen::VectorXd logit_choices(const Scenario& scenario, const Eigen::VectorXd& carTimes, double price,
                              const TcsParams& params);

/// Linearized decision: N x (N+1), last column is the price sensitivity.
Eigen::MatrixXd logit_gradient(const Eigen::VectorXd& psi0, const Eigen::MatrixXd& dT, const TcsParams& params);

} // namespace tcs

#include "tcs/logit.hpp"

#include <cmath>
#include <stdexcept>

namespace tcs {

ModeCosts mode_costs(double carTime, double ptTime, double price, const TcsParams& params)
{
    return {params.alpha * carTime + (params.tau - params.kappa) * price, params.alpha * ptTime - params.kappa * price};
}

double logit_choice(double carTime, double ptTime, double price, const TcsParams& params)
{
    const auto c   = mode_costs(carTime, ptTime, price, params);
    const double d = params.theta * (c.car - c.pt);
    if (d >= 0.0) {
        const double e = std::exp(-d);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(d));
}

Eigen::VectorXd logit_choices(const Scenario& scenario, const Eigen::VectorXd& carTimes, double price,
                              const TcsParams& params)
{
    const auto n = static_cast<Eigen::Index>(scenario.groups.size());
    if (carTimes.size() != n) {
        throw std::invalid_argument("logit_choices: size mismatch");
    }
    Eigen::VectorXd psi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        psi[i] = logit_choice(carTimes[i], scenario.groups[static_cast<std::size_t>(i)].pt_time, price, params);
    }
    return psi;
}

Eigen::MatrixXd logit_gradient(const Eigen::VectorXd& psi0, const Eigen::MatrixXd& dT, const TcsParams& params)
{
    const auto n = psi0.size();
    if (dT.rows() != n || dT.cols() != n) {
        throw std::invalid_argument("logit_gradient: dimension mismatch");
    }
    Eigen::MatrixXd g(n, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = psi0[i] * (psi0[i] - 1.0) * params.theta;
        g.row(i).head(n) = (s * params.alpha) * dT.row(i);
        g(i, n)          = s * params.tau;
    }
    return g;
}

} // namespace tcs

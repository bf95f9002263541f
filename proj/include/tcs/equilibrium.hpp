#pragma once

#include "tcs/gradient.hpp"
#include "tcs/logit.hpp"
#include "tcs/qp.hpp"
#include "tcs/scenario.hpp"
#include "tcs/simulator.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tcs {

struct ModalState
{
    Eigen::VectorXd x; // car shares
    double p = 0.0;    // EUR/credit
};

/// Assembles the local quadratic model around (x0, p0) for iteration k >= 1.
QpProblem build_qp(const Scenario& scenario, const Eigen::VectorXd& x0, double p0, const Eigen::VectorXd& psi0,
                   const Eigen::MatrixXd& gradPsi, const TcsParams& params, int k);

/// Aggregate credit consumption terms.
double credit_surplus(const Scenario& scenario, const Eigen::VectorXd& x, const TcsParams& params);  // sum gamma (kappa - tau x)
double cap_slack_credits(const Scenario& scenario, const Eigen::VectorXd& x, const TcsParams& params); // per the configured cap

/// Stopping measure at the current point (no step).
double equilibrium_gap(const Scenario& scenario, const ModalState& state, const Eigen::VectorXd& psi,
                       const TcsParams& params);

struct EquilibriumOptions
{
    QpOptions qp;
};

struct EquilibriumReport
{
    ModalState state;
    int iterations = 0; // QP steps taken
    bool converged = false;
    std::vector<double> j_trace;
    std::vector<double> mcc_trace;      // |p sum gamma (kappa - tau x)| / sum gamma
    std::vector<double> price_trace;    // EUR/credit at each evaluated point
    std::vector<double> residual_trace; // ||x - psi||_inf
    std::vector<double> step_trace;     // ||step||_inf
    std::vector<double> shift_trace;    // QP convexification shift
    double final_j            = 0.0;
    double fixed_point_residual = 0.0;
    double mcc_residual       = 0.0;
    double cap_slack          = 0.0; // credits, per the configured cap
    double car_users          = 0.0;
    bool qp_all_converged     = true;
    Eigen::VectorXd car_times;
    Eigen::VectorXd psi;
    Eigen::VectorXd car_cost;
    Eigen::VectorXd pt_cost;
    SimResult sim;
};

/// Linearize, solve the local QP, step; repeat until the gap is below j_goal.
/// Without convergence the best iterate is returned with converged = false.
EquilibriumReport equilibrium_solve(const Scenario& scenario, const TcsParams& params, const Eigen::VectorXd& xInit,
                                    double pInit, const EquilibriumOptions& options = {});
/// Defaults: x = 0 and p = params.p0 (0 in congestion-pricing mode).
EquilibriumReport equilibrium_solve(const Scenario& scenario, const TcsParams& params,
                                    const EquilibriumOptions& options = {});

/// Equilibrium without a scheme: congestion-pricing mode at zero price.
EquilibriumReport no_scheme_equilibrium(const Scenario& scenario, const TcsParams& params,
                                        const EquilibriumOptions& options = {});

struct MsaResult
{
    Eigen::VectorXd x;
    std::vector<double> residual_trace; // ||psi(x_k) - x_k||_inf before each update, then at the end
    double car_users  = 0.0;
    double cap_users  = 0.0; // kappa sum gamma / tau
    bool cap_violated = false;
};

/// x_{k+1} = x_k + (psi(x_k, p) - x_k) / k at a fixed price. The cap is not enforced.
MsaResult msa_solve(const Scenario& scenario, const TcsParams& params, double pFixed, int iters,
                    const Eigen::VectorXd& xInit);
MsaResult msa_solve(const Scenario& scenario, const TcsParams& params, double pFixed, int iters);

/// Structured-text export of a report.
std::string equilibrium_report_json(const EquilibriumReport& report, const TcsParams& params);

} // namespace tcs

#pragma once

#include "tcs/emission.hpp"
#include "tcs/equilibrium.hpp"

#include <string>
#include <vector>

namespace tcs {

/// Equilibrium summaries used by the charge-derivative estimates. SI units
/// unless the name says otherwise.
struct Aggregates
{
    double ttt_s   = 0.0;
    double ttt_h   = 0.0;
    double e_t     = 0.0; // tonnes CO2
    double n_c     = 0.0; // car users if every credit is consumed
    double tt_c    = 0.0; // mean car time, s
    double tt_c_w  = 0.0; // logit-weighted mean car time, s
    double tt_pt_w = 0.0; // logit-weighted mean PT time, s
    std::vector<double> w;
    double l_m   = 0.0; // mean car distance, m
    double l_m_w = 0.0; // logit-weighted mean car distance, m
    double l_tot = 0.0; // sum gamma x l, m
    double l_tot_edie = 0.0; // sum n T V, m
    double n_bar = 0.0;
    double v_bar = 0.0; // m/s
    double c     = 0.0; // -dV/dn at n_bar, (m/s)/veh
    double t_dept = 0.0;
    double car_users = 0.0;
};

double total_travel_time(const Scenario& scenario, const Eigen::VectorXd& x, const SimResult& sim); // s

Aggregates compute_aggregates(const Scenario& scenario, const TcsParams& params, const EquilibriumReport& eq,
                              const EmissionModel& model = {});

/// dTTT/dtau estimate, s per credit.
double ttt_charge_gradient(const Aggregates& agg, const Scenario& scenario, const TcsParams& params);
/// dE/dtau estimate, tonnes per credit.
double emission_charge_gradient(const Aggregates& agg, const Scenario& scenario, const TcsParams& params,
                                const EmissionModel& model = {});

enum class Objective
{
    TotalTravelTime,
    Mixed, // alpha TTT + Gamma P_carbon E
};
std::string to_string(Objective o);
Objective objective_from_string(const std::string& tag);

/// EUR for Mixed, hours for TotalTravelTime.
double objective_value(Objective o, const Aggregates& agg, const TcsParams& params);

/// True when the credit cap binds at the equilibrium (price positive, no slack).
bool cap_binding(const EquilibriumReport& eq, const Scenario& scenario, const TcsParams& params);

struct ChargeStep
{
    int tau      = 0;
    int lo       = 0; // bracket before the step
    int hi       = 0;
    bool binding = false;
    double derivative = 0.0; // objective units per credit, 0 when the cap is slack
    double objective  = 0.0;
    double price      = 0.0;
    bool converged    = false;
};

struct OptimizeResult
{
    int tau_star = 0;
    double objective = 0.0;
    int solves = 0;
    std::vector<ChargeStep> trace; // bisection steps then the final evaluation
    EquilibriumReport at_optimum;
};

struct SolveContext
{
    EquilibriumOptions eq;
    EmissionModel emission;
};

/// Integer bisection on the sign of the estimated objective derivative. A
/// slack cap moves the bracket up.
OptimizeResult optimize_charge(const Scenario& scenario, const TcsParams& params, Objective objective, int lo, int hi,
                               const SolveContext& ctx = {});

struct SweepRow
{
    double tau = 0.0;
    bool converged = false;
    int iterations = 0;
    double car_users = 0.0;
    double price = 0.0;
    double toll_equivalent = 0.0;
    double ttt_h = 0.0;
    double e_t   = 0.0;
    double e_per_km_g = 0.0;
    double final_j = 0.0;
    double fixed_point_residual = 0.0;
    double cap_slack = 0.0;
};

struct SweepResult
{
    std::vector<SweepRow> rows;
    std::vector<EquilibriumReport> reports; // same order as rows
};

/// Independent equilibria per charge, spread over `workers` threads. Row
/// order follows `taus` regardless of the pool size.
SweepResult sweep_charges(const Scenario& scenario, const TcsParams& params, const std::vector<double>& taus,
                          int workers = 1, const SolveContext& ctx = {});

std::string sweep_csv(const SweepResult& sweep, const TcsParams& params);
std::string optimize_trace_csv(const OptimizeResult& res);

struct GroupGain
{
    double trade_eur   = 0.0; // p (kappa - x tau)
    double time_gain_s = 0.0;
    double net_eur     = 0.0;
};

std::vector<GroupGain> group_gains(const EquilibriumReport& noTcs, const EquilibriumReport& tcs,
                                   const Scenario& scenario, const TcsParams& params);
std::string gains_csv(const std::vector<GroupGain>& gains);

} // namespace tcs

#include "tcs/equilibrium.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tcs {

namespace {

bool is_tcs(const TcsParams& params)
{
    return params.mode == SchemeMode::TradableCredits;
}

Eigen::VectorXd gammas(const Scenario& scenario)
{
    Eigen::VectorXd g(static_cast<Eigen::Index>(scenario.groups.size()));
    for (std::size_t i = 0; i < scenario.groups.size(); ++i) {
        g[static_cast<Eigen::Index>(i)] = scenario.groups[i].gamma;
    }
    return g;
}

} // namespace

double credit_surplus(const Scenario& scenario, const Eigen::VectorXd& x, const TcsParams& params)
{
    const Eigen::VectorXd g = gammas(scenario);
    return params.kappa * g.sum() - params.tau * g.dot(x);
}

double cap_slack_credits(const Scenario& scenario, const Eigen::VectorXd& x, const TcsParams& params)
{
    if (params.cap == CapConstraint::AsPrinted) {
        return params.kappa * static_cast<double>(x.size()) - params.tau * x.sum();
    }
    return credit_surplus(scenario, x, params);
}

double equilibrium_gap(const Scenario& scenario, const ModalState& state, const Eigen::VectorXd& psi,
                       const TcsParams& params)
{
    double j = 0.5 * (psi - state.x).squaredNorm();
    if (is_tcs(params)) {
        j += params.eta * state.p * credit_surplus(scenario, state.x, params) / scenario.total_travelers();
    }
    return j;
}

QpProblem build_qp(const Scenario& scenario, const Eigen::VectorXd& x0, double p0, const Eigen::VectorXd& psi0,
                   const Eigen::MatrixXd& gradPsi, const TcsParams& params, int k)
{
    const auto n = static_cast<Eigen::Index>(scenario.groups.size());
    if (x0.size() != n || psi0.size() != n || gradPsi.rows() != n || gradPsi.cols() != n + 1) {
        throw std::invalid_argument("build_qp: dimension mismatch");
    }
    const double eps = params.epsilon(k);
    const bool tcs   = is_tcs(params);

    Eigen::MatrixXd B = gradPsi;
    B.leftCols(n).diagonal().array() -= 1.0;

    QpProblem prob;
    prob.P = B.transpose() * B;
    prob.q = B.transpose() * (psi0 - x0);

    const Eigen::VectorXd g = gammas(scenario);
    const double total      = g.sum();
    if (tcs) {
        const Eigen::VectorXd w = -(params.tau / total) * g; // off-diagonal of I_p
        prob.P.col(n).head(n) += params.eta * w;
        prob.P.row(n).head(n) += params.eta * w.transpose();
        prob.q.head(n) += params.eta * p0 * w;
        prob.q[n] += params.eta * credit_surplus(scenario, x0, params) / total;
    }

    prob.eps_x = eps;
    prob.eps_p = eps;
    prob.lower.resize(n + 1);
    prob.upper.resize(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        prob.lower[i] = std::max(-x0[i], -eps);
        prob.upper[i] = std::min(1.0 - x0[i], eps);
    }
    if (tcs) {
        prob.lower[n] = std::max(-p0, -eps);
        prob.upper[n] = eps;
    } else {
        prob.lower[n] = 0.0;
        prob.upper[n] = 0.0;
    }

    if (tcs) {
        prob.has_cap = true;
        prob.cap_row = Eigen::VectorXd::Zero(n + 1);
        if (params.cap == CapConstraint::AsPrinted) {
            prob.cap_row.head(n).setConstant(params.tau);
            prob.cap_rhs = params.kappa * static_cast<double>(n) - params.tau * x0.sum();
        } else {
            prob.cap_row.head(n) = (params.tau / total) * g;
            prob.cap_rhs         = params.kappa - params.tau * g.dot(x0) / total;
        }
        // Rounding of the previous step can leave the cap a few ulps negative.
        if (prob.cap_rhs < 0.0 && prob.cap_rhs > -1e-12 * std::max(1.0, params.kappa * static_cast<double>(n))) {
            prob.cap_rhs = 0.0;
        }
    }
    return prob;
}

namespace {

struct Evaluation
{
    SimResult sim;
    Eigen::VectorXd times;
    Eigen::VectorXd psi;
    double j = 0.0;
};

Evaluation evaluate(const Scenario& scenario, const ModalState& state, const TcsParams& params)
{
    Evaluation ev;
    ev.sim   = simulate(scenario, std::span<const double>(state.x.data(), static_cast<std::size_t>(state.x.size())));
    ev.times = Eigen::Map<const Eigen::VectorXd>(ev.sim.car_times.data(), state.x.size());
    ev.psi   = logit_choices(scenario, ev.times, state.p, params);
    ev.j     = equilibrium_gap(scenario, state, ev.psi, params);
    return ev;
}

// Pulls an initial share vector under the credit cap if it starts above it.
Eigen::VectorXd admissible_start(const Scenario& scenario, Eigen::VectorXd x, const TcsParams& params)
{
    x = x.cwiseMax(0.0).cwiseMin(1.0);
    if (!is_tcs(params)) {
        return x;
    }
    const double slack = cap_slack_credits(scenario, x, params);
    if (slack < 0.0) {
        const double cap  = params.kappa * (params.cap == CapConstraint::AsPrinted ? static_cast<double>(x.size())
                                                                                    : scenario.total_travelers());
        const double used = cap - slack;
        x *= std::max(0.0, cap / used) * (1.0 - 1e-15);
    }
    return x;
}

void fill_report(EquilibriumReport& rep, const Scenario& scenario, const ModalState& state, Evaluation ev,
                 const TcsParams& params)
{
    const auto n = state.x.size();
    rep.state    = state;
    rep.final_j  = ev.j;
    rep.fixed_point_residual = (ev.psi - state.x).lpNorm<Eigen::Infinity>();
    rep.mcc_residual = is_tcs(params)
                           ? std::abs(state.p * credit_surplus(scenario, state.x, params)) / scenario.total_travelers()
                           : 0.0;
    rep.cap_slack = is_tcs(params) ? cap_slack_credits(scenario, state.x, params)
                                   : std::numeric_limits<double>::infinity();
    rep.car_users = 0.0;
    rep.car_cost.resize(n);
    rep.pt_cost.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& grp = scenario.groups[static_cast<std::size_t>(i)];
        rep.car_users += grp.gamma * state.x[i];
        const auto c   = mode_costs(ev.times[i], grp.pt_time, state.p, params);
        rep.car_cost[i] = c.car;
        rep.pt_cost[i]  = c.pt;
    }
    rep.car_times = std::move(ev.times);
    rep.psi       = std::move(ev.psi);
    rep.sim       = std::move(ev.sim);
}

} // namespace

EquilibriumReport equilibrium_solve(const Scenario& scenario, const TcsParams& params, const Eigen::VectorXd& xInit,
                                    double pInit, const EquilibriumOptions& options)
{
    validate(params);
    const auto n = static_cast<Eigen::Index>(scenario.groups.size());
    if (xInit.size() != n) {
        throw std::invalid_argument("equilibrium_solve: initial share vector has the wrong size");
    }
    if (!(pInit >= 0.0)) {
        throw std::invalid_argument("equilibrium_solve: initial price must be non-negative");
    }
    const bool tcs = is_tcs(params);

    ModalState state{admissible_start(scenario, xInit, params), pInit};
    EquilibriumReport rep;
    ModalState best = state;
    double bestJ    = std::numeric_limits<double>::infinity();
    Evaluation bestEval;

    for (int k = 1;; ++k) {
        Evaluation ev = evaluate(scenario, state, params);
        rep.j_trace.push_back(ev.j);
        rep.residual_trace.push_back((ev.psi - state.x).lpNorm<Eigen::Infinity>());
        rep.price_trace.push_back(state.p);
        rep.mcc_trace.push_back(
            tcs ? std::abs(state.p * credit_surplus(scenario, state.x, params)) / scenario.total_travelers() : 0.0);
        if (ev.j < bestJ) {
            bestJ    = ev.j;
            best     = state;
            bestEval = ev;
        }
        if (ev.j < params.j_goal) {
            rep.converged = true;
            break;
        }
        if (k > params.max_iters) {
            break;
        }

        const GradientMatrix grad    = travel_time_gradient(scenario, ev.sim);
        const Eigen::MatrixXd gradPsi = logit_gradient(ev.psi, grad.dT, params);
        const QpProblem prob          = build_qp(scenario, state.x, state.p, ev.psi, gradPsi, params, k);
        const QpResult qp             = solve_qp(prob, options.qp);
        if (!prob.feasible(qp.z)) {
            throw std::logic_error("equilibrium_solve: QP returned an infeasible step");
        }
        rep.qp_all_converged = rep.qp_all_converged && qp.converged;
        rep.step_trace.push_back(qp.z.lpNorm<Eigen::Infinity>());
        rep.shift_trace.push_back(qp.shift);

        for (Eigen::Index i = 0; i < n; ++i) {
            state.x[i] = std::clamp(state.x[i] + qp.z[i], 0.0, 1.0);
        }
        state.p = tcs ? std::max(0.0, state.p + qp.z[n]) : state.p;
        ++rep.iterations;
    }

    fill_report(rep, scenario, best, std::move(bestEval), params);
    return rep;
}

EquilibriumReport equilibrium_solve(const Scenario& scenario, const TcsParams& params,
                                    const EquilibriumOptions& options)
{
    const double p = params.mode == SchemeMode::TradableCredits ? params.p0 : 0.0;
    return equilibrium_solve(scenario, params, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scenario.size())), p,
                             options);
}

EquilibriumReport no_scheme_equilibrium(const Scenario& scenario, const TcsParams& params,
                                        const EquilibriumOptions& options)
{
    TcsParams free = params;
    free.mode      = SchemeMode::CongestionPricing;
    return equilibrium_solve(scenario, free, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scenario.size())), 0.0,
                             options);
}

MsaResult msa_solve(const Scenario& scenario, const TcsParams& params, double pFixed, int iters,
                    const Eigen::VectorXd& xInit)
{
    if (!(pFixed >= 0.0)) {
        throw std::invalid_argument("msa_solve: price must be non-negative");
    }
    const auto n = static_cast<Eigen::Index>(scenario.size());
    if (xInit.size() != n) {
        throw std::invalid_argument("msa_solve: initial share vector has the wrong size");
    }
    MsaResult res;
    res.x = xInit.cwiseMax(0.0).cwiseMin(1.0);
    auto psi_at = [&](const Eigen::VectorXd& x) {
        const auto sim = simulate(scenario, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
        return logit_choices(scenario, Eigen::Map<const Eigen::VectorXd>(sim.car_times.data(), n), pFixed, params);
    };
    for (int k = 1; k <= iters; ++k) {
        const Eigen::VectorXd psi = psi_at(res.x);
        res.residual_trace.push_back((psi - res.x).lpNorm<Eigen::Infinity>());
        res.x += (psi - res.x) / static_cast<double>(k);
        res.x = res.x.cwiseMax(0.0).cwiseMin(1.0);
    }
    res.residual_trace.push_back((psi_at(res.x) - res.x).lpNorm<Eigen::Infinity>());

    const Eigen::VectorXd g = gammas(scenario);
    res.car_users           = g.dot(res.x);
    res.cap_users           = params.kappa * g.sum() / params.tau;
    res.cap_violated        = res.car_users > res.cap_users;
    return res;
}

MsaResult msa_solve(const Scenario& scenario, const TcsParams& params, double pFixed, int iters)
{
    return msa_solve(scenario, params, pFixed, iters, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scenario.size())));
}

std::string equilibrium_report_json(const EquilibriumReport& report, const TcsParams& params)
{
    nlohmann::ordered_json doc;
    doc["converged"]           = report.converged;
    doc["iterations"]          = report.iterations;
    doc["mode"]                = to_string(params.mode);
    doc["cap_constraint"]      = to_string(params.cap);
    doc["tau_credits"]         = params.tau;
    doc["kappa_credits"]       = params.kappa;
    doc["price_eur_per_credit"] = report.state.p;
    doc["toll_equivalent_eur"] = report.state.p * (params.tau - params.kappa);
    doc["car_users"]           = report.car_users;
    doc["final_j"]             = report.final_j;
    doc["fixed_point_residual"] = report.fixed_point_residual;
    doc["mcc_residual_credits"] = report.mcc_residual;
    doc["cap_slack_credits"]   = std::isfinite(report.cap_slack) ? nlohmann::ordered_json(report.cap_slack)
                                                                 : nlohmann::ordered_json(nullptr);
    doc["qp_all_converged"]    = report.qp_all_converged;
    doc["j_trace"]             = report.j_trace;
    doc["residual_trace"]      = report.residual_trace;
    doc["mcc_trace_credits"]   = report.mcc_trace;
    doc["price_trace_eur_per_credit"] = report.price_trace;
    doc["step_trace"]          = report.step_trace;
    doc["qp_shift_trace"]      = report.shift_trace;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < report.state.x.size(); ++i) {
        nlohmann::ordered_json g;
        g["id"]           = i;
        g["x"]            = report.state.x[i];
        g["psi"]          = report.psi[i];
        g["car_time_s"]   = report.car_times[i];
        g["car_cost_eur"] = report.car_cost[i];
        g["pt_cost_eur"]  = report.pt_cost[i];
        groups.push_back(std::move(g));
    }
    doc["groups"] = std::move(groups);
    return doc.dump(2) + "\n";
}

} // namespace tcs

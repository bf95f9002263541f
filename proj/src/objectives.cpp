#include "tcs/objectives.hpp"

#include "tcs/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tcs {

double total_travel_time(const Scenario& scenario, const Eigen::VectorXd& x, const SimResult& sim)
{
    double ttt = 0.0;
    for (std::size_t i = 0; i < scenario.groups.size(); ++i) {
        const auto& g  = scenario.groups[i];
        const double s = x[static_cast<Eigen::Index>(i)];
        ttt += g.gamma * (s * sim.car_times[i] + (1.0 - s) * g.pt_time);
    }
    return ttt;
}

Aggregates compute_aggregates(const Scenario& scenario, const TcsParams& params, const EquilibriumReport& eq,
                              const EmissionModel& model)
{
    Aggregates a;
    const auto& x = eq.state.x;
    a.ttt_s       = total_travel_time(scenario, x, eq.sim);
    a.ttt_h       = a.ttt_s / 3600.0;
    a.e_t         = total_emission(eq.sim, model);
    a.n_c         = scenario.total_travelers() * params.kappa / params.tau;
    a.t_dept      = scenario.max_depart() - scenario.min_depart();

    double gx = 0.0, gxT = 0.0, gxl = 0.0;
    double gw = 0.0, gwT = 0.0, gwPt = 0.0, gwl = 0.0;
    a.w.resize(scenario.groups.size());
    for (std::size_t i = 0; i < scenario.groups.size(); ++i) {
        const auto& g   = scenario.groups[i];
        const auto idx  = static_cast<Eigen::Index>(i);
        const double xi = x[idx];
        const double ps = eq.psi[idx];
        const double wi = params.theta * ps * (1.0 - ps);
        a.w[i]          = wi;
        gx += g.gamma * xi;
        gxT += g.gamma * xi * eq.sim.car_times[i];
        gxl += g.gamma * xi * g.trip_len;
        gw += g.gamma * wi;
        gwT += g.gamma * wi * eq.sim.car_times[i];
        gwPt += g.gamma * wi * g.pt_time;
        gwl += g.gamma * wi * g.trip_len;
    }
    a.car_users  = gx;
    a.l_tot      = gxl;
    a.l_tot_edie = edie_distance(eq.sim);
    if (gx > 0.0) {
        a.tt_c = gxT / gx;
        a.l_m  = gxl / gx;
    }
    if (gw > 0.0) {
        a.tt_c_w  = gwT / gw;
        a.tt_pt_w = gwPt / gw;
        a.l_m_w   = gwl / gw;
    }
    a.n_bar = a.t_dept > 0.0 ? a.n_c * a.tt_c / a.t_dept : 0.0;
    a.v_bar = a.tt_c > 0.0 ? a.l_m / a.tt_c : scenario.mfd.speed(0.0);
    a.c     = -scenario.mfd.dspeed(a.n_bar);
    return a;
}

double ttt_charge_gradient(const Aggregates& agg, const Scenario& scenario, const TcsParams& params)
{
    const double congestion = agg.v_bar > 0.0 ? agg.l_m * agg.c * agg.n_bar / (agg.v_bar * agg.v_bar) : 0.0;
    return (-congestion - agg.tt_c_w + agg.tt_pt_w) * scenario.total_travelers() * params.kappa /
           (params.tau * params.tau);
}

double emission_charge_gradient(const Aggregates& agg, const Scenario& scenario, const TcsParams& params,
                                const EmissionModel& model)
{
    const double vKmh   = agg.v_bar * 3.6;
    const double cKmh   = agg.c * 3.6;
    const double shift  = agg.l_m_w / 1000.0 * emission_per_distance(vKmh, model) * scenario.total_travelers() *
                         params.kappa / params.tau;
    const double speed  = agg.l_tot / 1000.0 * emission_per_distance_derivative(vKmh, model) * cKmh * agg.n_bar;
    return (-shift + speed) / params.tau * 1e-6;
}

std::string to_string(Objective o)
{
    return o == Objective::Mixed ? "mixed" : "ttt";
}

Objective objective_from_string(const std::string& tag)
{
    if (tag == "ttt") {
        return Objective::TotalTravelTime;
    }
    if (tag == "mixed") {
        return Objective::Mixed;
    }
    throw std::invalid_argument("unknown objective '" + tag + "' (expected ttt or mixed)");
}

double objective_value(Objective o, const Aggregates& agg, const TcsParams& params)
{
    if (o == Objective::TotalTravelTime) {
        return agg.ttt_h;
    }
    return params.alpha * agg.ttt_s + params.gamma_emission * params.p_carbon * agg.e_t;
}

bool cap_binding(const EquilibriumReport& eq, const Scenario& scenario, const TcsParams& params)
{
    if (params.mode != SchemeMode::TradableCredits || !(eq.state.p > 0.0)) {
        return false;
    }
    const double allocation = params.kappa * scenario.total_travelers();
    return eq.cap_slack <= 1e-4 * allocation;
}

namespace {

double objective_derivative(Objective o, const Aggregates& agg, const Scenario& scenario, const TcsParams& params,
                            const EmissionModel& model)
{
    const double dttt = ttt_charge_gradient(agg, scenario, params);
    if (o == Objective::TotalTravelTime) {
        return dttt / 3600.0;
    }
    return params.alpha * dttt +
           params.gamma_emission * params.p_carbon * emission_charge_gradient(agg, scenario, params, model);
}

} // namespace

OptimizeResult optimize_charge(const Scenario& scenario, const TcsParams& params, Objective objective, int lo, int hi,
                               const SolveContext& ctx)
{
    if (lo > hi) {
        throw std::invalid_argument("optimize_charge: empty bracket");
    }
    OptimizeResult res;
    std::map<int, EquilibriumReport> cache;
    int convergedSolves = 0;
    auto solve_at = [&](int tau) -> const EquilibriumReport& {
        auto it = cache.find(tau);
        if (it == cache.end()) {
            TcsParams p = params;
            p.tau       = tau;
            it          = cache.emplace(tau, equilibrium_solve(scenario, p, ctx.eq)).first;
            ++res.solves;
            convergedSolves += it->second.converged ? 1 : 0;
        }
        return it->second;
    };
    auto step_at = [&](int tau, int blo, int bhi) {
        TcsParams p = params;
        p.tau       = tau;
        const auto& eq   = solve_at(tau);
        const auto agg   = compute_aggregates(scenario, p, eq, ctx.emission);
        ChargeStep s;
        s.tau       = tau;
        s.lo        = blo;
        s.hi        = bhi;
        s.binding   = cap_binding(eq, scenario, p);
        s.derivative = s.binding ? objective_derivative(objective, agg, scenario, p, ctx.emission) : 0.0;
        s.objective = objective_value(objective, agg, p);
        s.price     = eq.state.p;
        s.converged = eq.converged;
        return s;
    };

    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        ChargeStep s  = step_at(mid, lo, hi);
        if (!s.binding || s.derivative < 0.0) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
        res.trace.push_back(s);
    }
    ChargeStep last = step_at(lo, lo, hi);
    res.trace.push_back(last);
    if (convergedSolves == 0) {
        throw std::runtime_error("optimize_charge: no equilibrium converged inside the bracket");
    }
    res.tau_star   = lo;
    res.objective  = last.objective;
    res.at_optimum = cache.at(lo);
    return res;
}

SweepResult sweep_charges(const Scenario& scenario, const TcsParams& params, const std::vector<double>& taus,
                          int workers, const SolveContext& ctx)
{
    SweepResult out;
    out.rows.resize(taus.size());
    out.reports.resize(taus.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failureMutex;

    auto work = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= taus.size()) {
                return;
            }
            try {
                TcsParams p = params;
                p.tau       = taus[k];
                auto eq     = equilibrium_solve(scenario, p, ctx.eq);
                const auto agg = compute_aggregates(scenario, p, eq, ctx.emission);
                SweepRow row;
                row.tau             = taus[k];
                row.converged       = eq.converged;
                row.iterations      = eq.iterations;
                row.car_users       = eq.car_users;
                row.price           = eq.state.p;
                row.toll_equivalent = eq.state.p * (p.tau - p.kappa);
                row.ttt_h           = agg.ttt_h;
                row.e_t             = agg.e_t;
                row.e_per_km_g      = agg.l_tot_edie > 0.0 ? agg.e_t * 1e6 / (agg.l_tot_edie / 1000.0) : 0.0;
                row.final_j         = eq.final_j;
                row.fixed_point_residual = eq.fixed_point_residual;
                row.cap_slack       = eq.cap_slack;
                out.rows[k]         = row;
                out.reports[k]      = std::move(eq);
            } catch (...) {
                std::lock_guard lock(failureMutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };

    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(taus.size())));
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) {
            threads.emplace_back(work);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

std::string sweep_csv(const SweepResult& sweep, const TcsParams& params)
{
    io::CsvTable t({"tau_credits", "converged", "iterations", "car_users_persons", "price_eur_per_credit",
                    "toll_equivalent_eur", "ttt_h", "emission_t", "emission_per_distance_g_per_km", "mixed_objective_eur",
                    "final_j", "fixed_point_residual", "cap_slack_credits"});
    for (const auto& r : sweep.rows) {
        const double mixed = params.alpha * r.ttt_h * 3600.0 + params.gamma_emission * params.p_carbon * r.e_t;
        t.add_row({io::fmt_double(r.tau), r.converged ? "1" : "0", std::to_string(r.iterations),
                   io::fmt_double(r.car_users), io::fmt_double(r.price), io::fmt_double(r.toll_equivalent),
                   io::fmt_double(r.ttt_h), io::fmt_double(r.e_t), io::fmt_double(r.e_per_km_g), io::fmt_double(mixed),
                   io::fmt_double(r.final_j), io::fmt_double(r.fixed_point_residual), io::fmt_double(r.cap_slack)});
    }
    return t.str();
}

std::string optimize_trace_csv(const OptimizeResult& res)
{
    io::CsvTable t({"step", "tau_credits", "lo_credits", "hi_credits", "cap_binding", "derivative_per_credit",
                    "objective", "price_eur_per_credit", "converged"});
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        const auto& s = res.trace[k];
        t.add_row({std::to_string(k), std::to_string(s.tau), std::to_string(s.lo), std::to_string(s.hi),
                   s.binding ? "1" : "0", io::fmt_double(s.derivative), io::fmt_double(s.objective),
                   io::fmt_double(s.price), s.converged ? "1" : "0"});
    }
    return t.str();
}

std::vector<GroupGain> group_gains(const EquilibriumReport& noTcs, const EquilibriumReport& tcs,
                                   const Scenario& scenario, const TcsParams& params)
{
    const auto n = scenario.groups.size();
    if (static_cast<std::size_t>(noTcs.state.x.size()) != n || static_cast<std::size_t>(tcs.state.x.size()) != n) {
        throw std::invalid_argument("group_gains: states do not match the scenario");
    }
    std::vector<GroupGain> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx  = static_cast<Eigen::Index>(i);
        const auto& g   = scenario.groups[i];
        const double x0 = noTcs.state.x[idx];
        const double x1 = tcs.state.x[idx];
        const double before = x0 * noTcs.car_times[idx] + (1.0 - x0) * g.pt_time;
        const double after  = x1 * tcs.car_times[idx] + (1.0 - x1) * g.pt_time;
        out[i].trade_eur    = tcs.state.p * (params.kappa - x1 * params.tau);
        out[i].time_gain_s  = before - after;
        out[i].net_eur      = out[i].trade_eur + params.alpha * out[i].time_gain_s;
    }
    return out;
}

std::string gains_csv(const std::vector<GroupGain>& gains)
{
    io::CsvTable t({"group", "trade_balance_eur", "time_gain_s", "net_gain_eur"});
    for (std::size_t i = 0; i < gains.size(); ++i) {
        t.add_row({std::to_string(i), io::fmt_double(gains[i].trade_eur), io::fmt_double(gains[i].time_gain_s),
                   io::fmt_double(gains[i].net_eur)});
    }
    return t.str();
}

} // namespace tcs

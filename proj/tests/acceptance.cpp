// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "oracles.hpp"
#include "support.hpp"

#include "tcs/analysis.hpp"
#include "tcs/gradient.hpp"
#include "tcs/objectives.hpp"
#include "tcs/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>

using namespace tcs;
using namespace tcs::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

// Shared state built on first use.
struct Fixture
{
    Scenario preset = generate_synthetic(1, preset_spec("small"));
    TcsParams base;

    std::optional<EquilibriumReport> tight; // default charge, tight stopping test
    std::optional<EquilibriumReport> tight_no_scheme;
    std::optional<SweepResult> grid;       // 100..500 step 20, default stopping test
    std::optional<EquilibriumReport> no_scheme;
    std::optional<OptimizeResult> opt_mixed;
    std::optional<OptimizeResult> opt_ttt;
    double tight_seconds = 0.0;

    TcsParams tight_params() const
    {
        TcsParams p = base;
        p.j_goal    = 1e-10;
        p.max_iters = 20;
        return p;
    }
    const EquilibriumReport& tight_eq()
    {
        if (!tight) {
            const auto t0 = Clock::now();
            tight         = equilibrium_solve(preset, tight_params());
            tight_seconds = seconds_since(t0);
        }
        return *tight;
    }
    const EquilibriumReport& tight_base()
    {
        if (!tight_no_scheme) {
            tight_no_scheme = no_scheme_equilibrium(preset, tight_params());
        }
        return *tight_no_scheme;
    }
    const EquilibriumReport& base_eq()
    {
        if (!no_scheme) {
            no_scheme = no_scheme_equilibrium(preset, base);
        }
        return *no_scheme;
    }
    const SweepResult& sweep()
    {
        if (!grid) {
            std::vector<double> taus;
            for (int t = 100; t <= 500; t += 20) {
                taus.push_back(t);
            }
            grid = sweep_charges(preset, base, taus, 1);
        }
        return *grid;
    }
    const OptimizeResult& optimum(Objective o)
    {
        auto& slot = o == Objective::Mixed ? opt_mixed : opt_ttt;
        if (!slot) {
            slot = optimize_charge(preset, base, o, 100, 500);
        }
        return *slot;
    }
};

struct GradientCase
{
    Scenario scenario;
    std::vector<double> x;
};

std::vector<GradientCase> gradient_cases()
{
    std::vector<GradientCase> out;
    const int sizes[] = {5, 5, 5, 10, 10, 10, 20, 20, 20, 20};
    for (int k = 0; k < 10; ++k) {
        const auto seed = static_cast<std::uint64_t>(1000 + k);
        out.push_back({random_scenario(seed, sizes[k], 1.5), interior_shares(seed, sizes[k])});
    }
    return out;
}

Outcome gradient_vs_differences(Fixture&)
{
    Outcome o;
    const auto t0   = Clock::now();
    const double h  = 1e-5;
    double worst    = 0.0;
    int entries     = 0;
    int skipped     = 0;
    for (const auto& c : gradient_cases()) {
        const auto n   = static_cast<int>(c.x.size());
        const auto sim = simulate(c.scenario, c.x);
        const auto g   = travel_time_gradient(c.scenario, sim);
        const auto sig = event_signature(sim);
        const std::vector<long double> xl(c.x.begin(), c.x.end());
        for (int j = 0; j < n; ++j) {
            auto xp = c.x, xm = c.x;
            xp[static_cast<std::size_t>(j)] += h;
            xm[static_cast<std::size_t>(j)] -= h;
            if (event_signature(simulate(c.scenario, xp)) != sig || event_signature(simulate(c.scenario, xm)) != sig) {
                ++skipped;
                continue;
            }
            // Differences of double travel times carry ~1e-8 s of rounding at this step,
            // so the differenced trajectories are stepped in long double.
            auto lp = xl, lm = xl;
            lp[static_cast<std::size_t>(j)] += static_cast<long double>(h);
            lm[static_cast<std::size_t>(j)] -= static_cast<long double>(h);
            const auto tp = stepped_car_times(c.scenario, lp);
            const auto tm = stepped_car_times(c.scenario, lm);
            for (int i = 0; i < n; ++i) {
                const auto ui   = static_cast<std::size_t>(i);
                const double fd = static_cast<double>((tp[ui] - tm[ui]) / (2.0L * static_cast<long double>(h)));
                const double an = g.dT(i, j);
                if (std::abs(an) > 1e-6) {
                    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
                    ++entries;
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    o.detail << "max rel err " << worst << " over " << entries << " entries, " << skipped
             << " reordering columns skipped, " << secs << " s";
    o.require(entries > 0, "no entries compared");
    o.require(worst < 1e-3, "relative error >= 1e-3");
    o.require(secs < 10.0, "runtime >= 10 s");
    return o;
}

Outcome length_conservation(Fixture&)
{
    Outcome o;
    double worst = 0.0;
    for (const auto& c : gradient_cases()) {
        const auto n   = static_cast<Eigen::Index>(c.x.size());
        const auto sim = simulate(c.scenario, c.x);
        const auto g   = travel_time_gradient(c.scenario, sim, {.keep_event_buffers = true});
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            Eigen::VectorXd dl = Eigen::VectorXd::Zero(n);
            for (int e = sim.entry_index[i] + 1; e <= sim.exit_index[i]; ++e) {
                const auto& ev = sim.events[static_cast<std::size_t>(e)];
                dl += ev.period_speed * g.event_grad_period.row(e).transpose() +
                      ev.dur_prev * g.event_grad_speed.row(e).transpose();
            }
            worst = std::max(worst, dl.lpNorm<Eigen::Infinity>());
        }
    }
    o.detail << "max |d length / d x| " << worst << " m";
    o.require(worst < 1e-6, "length gradient >= 1e-6");
    return o;
}

Outcome simulator_exactness(Fixture& f)
{
    Outcome o;
    double timeErr = 0.0, lenErr = 0.0;
    auto check_lengths = [&](const Scenario& s, const SimResult& r) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            double l = 0.0;
            for (int e = r.entry_index[i] + 1; e <= r.exit_index[i]; ++e) {
                l += r.events[static_cast<std::size_t>(e)].dist_prev;
            }
            lenErr = std::max(lenErr, std::abs(l - s.groups[i].trip_len));
        }
    };
    int scenarios = 0;
    for (auto c : gradient_cases()) {
        check_lengths(c.scenario, simulate(c.scenario, c.x));
        c.scenario.mfd = MfdCurve::constant(9.5);
        const auto r   = simulate(c.scenario, c.x);
        check_lengths(c.scenario, r);
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            timeErr = std::max(timeErr, std::abs(r.car_times[i] - c.scenario.groups[i].trip_len / 9.5));
        }
        scenarios += 2;
    }
    const std::vector<double> half(f.preset.size(), 0.5);
    check_lengths(f.preset, simulate(f.preset, half));
    check_lengths(f.preset, f.tight_eq().sim);
    scenarios += 2;
    o.detail << "constant-speed time err " << timeErr << " s, length err " << lenErr << " m over " << scenarios
             << " runs";
    o.require(timeErr <= 1e-9, "time error > 1e-9 s");
    o.require(lenErr <= 1e-6, "length error > 1e-6 m");
    return o;
}

Outcome equilibrium_quality(Fixture& f)
{
    Outcome o;
    const auto& eq = f.tight_eq();
    int crossing   = -1;
    for (std::size_t k = 0; k < eq.j_trace.size(); ++k) {
        if (eq.j_trace[k] < 1e-3) {
            crossing = static_cast<int>(k);
            break;
        }
    }
    const double surplus = credit_surplus(f.preset, eq.state.x, f.base);
    o.detail << f.preset.size() << " groups: J < 1e-3 after " << crossing << " steps, final J " << eq.final_j
             << ", residual " << eq.fixed_point_residual << ", cap slack " << eq.cap_slack << ", mcc "
             << eq.mcc_residual << ", price " << eq.state.p << ", " << f.tight_seconds << " s";
    o.require(f.preset.size() >= 200, "fewer than 200 groups");
    o.require(crossing >= 0 && crossing <= 20, "J goal not reached within 20 iterations");
    o.require(eq.fixed_point_residual < 1e-4, "fixed-point residual >= 1e-4");
    o.require(eq.cap_slack >= -1e-6, "cap violated");
    o.require(std::abs(eq.state.p * surplus) / f.preset.total_travelers() < 1e-4, "market clearing residual");
    o.require(f.tight_seconds < 60.0, "runtime >= 60 s");
    return o;
}

Outcome qp_vs_enumeration(Fixture&)
{
    Outcome o;
    double worstGap = 0.0;
    int infeasible  = 0, unconverged = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const int n  = 1 + static_cast<int>(seed % 10);
        const auto p = random_problem(seed * 31, n, seed % 4 != 0);
        Eigen::VectorXd zStar;
        const double best = face_enumeration(p, zStar);
        const auto r      = solve_qp(p);
        worstGap          = std::max(worstGap, std::abs(p.objective(r.z) - best));
        infeasible += p.feasible(r.z) ? 0 : 1;
        unconverged += r.converged ? 0 : 1;
    }
    o.detail << "100 instances, max objective gap " << worstGap << ", infeasible " << infeasible
             << ", unconverged " << unconverged;
    o.require(worstGap < 1e-6, "objective gap >= 1e-6");
    o.require(infeasible == 0, "infeasible result");
    return o;
}

Outcome msa_benchmark(Fixture& f)
{
    Outcome o;
    const auto& eq  = f.tight_eq();
    const auto m    = msa_solve(f.preset, f.base, eq.state.p, 20);
    const double rel = (m.x - eq.state.x).norm() / eq.state.x.norm();
    const auto low  = msa_solve(f.preset, f.base, 0.001, 20);
    o.detail << "relative L2 vs QP shares " << rel << "; at 0.001 EUR/credit " << low.car_users << " car users vs cap "
             << low.cap_users;
    o.require(rel < 0.10, "relative difference >= 10%");
    o.require(low.cap_violated, "cap violation not flagged at a low price");
    o.require(!m.cap_violated || m.car_users <= m.cap_users * 1.1, "equilibrium price far over the cap");
    return o;
}

Outcome emission_model(Fixture&)
{
    Outcome o;
    const EmissionModel m;
    const double at50   = emission_per_distance(50.0, m);
    const double oracle = averaged_factor(50.0, m);
    bool decreasing     = true;
    for (double v = 10.0; v <= 60.0; v += 0.5) {
        decreasing = decreasing && emission_per_distance_derivative(v, m) < 0.0;
    }
    // One group on a Greenshields curve: a single loaded period at V(gamma x).
    Scenario s;
    s.groups = {{0, 400.0, 0.0, 6000.0, 900.0}};
    s.mfd    = MfdCurve::greenshields(15.0, 1000.0, 1.0);
    const auto r     = simulate(s, std::vector<double>{0.5});
    const double v   = s.mfd.speed(200.0);
    const double tnd = 200.0 * 6.0 * averaged_factor(v * 3.6, m) * 1e-6;
    const double rel = std::abs(total_emission(r, m) - tnd) / tnd;
    o.detail << "factor at 50 km/h " << at50 << " g/km vs independent " << oracle << "; one-group rel err " << rel;
    o.require(std::abs(at50 - oracle) < 0.1, "factor differs by >= 0.1 g/km");
    o.require(std::abs(oracle - 144.9) < 0.1, "independent value is not about 144.9 g/km");
    o.require(decreasing, "factor not decreasing on 10-60 km/h");
    o.require(rel < 1e-9, "one-group emission");
    return o;
}

Outcome charge_search(Fixture& f)
{
    Outcome o;
    const auto& sw  = f.sweep();
    const auto& opt = f.optimum(Objective::Mixed);
    const int limit = static_cast<int>(std::ceil(std::log2(400.0))) + 1;
    double gridBest = 1e300;
    double gridTau  = 0.0;
    bool allConverged = true;
    for (std::size_t k = 0; k < sw.rows.size(); ++k) {
        TcsParams p = f.base;
        p.tau       = sw.rows[k].tau;
        const auto agg = compute_aggregates(f.preset, p, sw.reports[k]);
        const double v = objective_value(Objective::Mixed, agg, p);
        allConverged   = allConverged && sw.rows[k].converged;
        if (v < gridBest) {
            gridBest = v;
            gridTau  = sw.rows[k].tau;
        }
    }
    // Price is zero below the first binding charge; toll equivalent non-decreasing from there.
    std::size_t first = sw.rows.size();
    for (std::size_t k = 0; k < sw.rows.size(); ++k) {
        TcsParams p = f.base;
        p.tau       = sw.rows[k].tau;
        if (cap_binding(sw.reports[k], f.preset, p)) {
            first = k;
            break;
        }
    }
    bool zeroBelow = first < sw.rows.size();
    for (std::size_t k = 0; k < first && k < sw.rows.size(); ++k) {
        zeroBelow = zeroBelow && sw.rows[k].price == 0.0;
    }
    bool monotone = true;
    for (std::size_t k = first + 1; k < sw.rows.size(); ++k) {
        monotone = monotone && sw.rows[k].toll_equivalent >= sw.rows[k - 1].toll_equivalent - 1e-9;
    }
    const double gap = (opt.objective - gridBest) / gridBest;
    o.detail << "bisection tau " << opt.tau_star << " in " << opt.solves << " solves (limit " << limit
             << "), objective " << opt.objective << " EUR vs grid " << gridBest << " at tau " << gridTau
             << " (gap " << gap * 100.0 << "%); cap binds from tau "
             << (first < sw.rows.size() ? sw.rows[first].tau : -1.0);
    o.require(opt.solves <= limit, "too many solves");
    o.require(gap < 0.02, "objective more than 2% above the grid optimum");
    o.require(zeroBelow, "price not zero below the binding charge");
    o.require(monotone, "toll equivalent decreases");
    o.require(allConverged, "grid point not converged");
    return o;
}

Outcome welfare_direction(Fixture& f)
{
    Outcome o;
    const auto& base = f.base_eq();
    const auto& ttt  = f.optimum(Objective::TotalTravelTime);
    const auto& mix  = f.optimum(Objective::Mixed);
    const auto aBase = compute_aggregates(f.preset, f.base, base);
    TcsParams pt     = f.base;
    pt.tau           = ttt.tau_star;
    TcsParams pm     = f.base;
    pm.tau           = mix.tau_star;
    const auto aTtt  = compute_aggregates(f.preset, pt, ttt.at_optimum);
    const auto aMix  = compute_aggregates(f.preset, pm, mix.at_optimum);
    const double dT  = 1.0 - aTtt.ttt_h / aBase.ttt_h;
    const double dE  = 1.0 - aMix.e_t / aBase.e_t;
    o.detail << "no scheme TTT " << aBase.ttt_h << " h, E " << aBase.e_t << " t; TTT-optimal tau " << ttt.tau_star
             << " cuts TTT " << dT * 100.0 << "%; mixed-optimal tau " << mix.tau_star << " cuts E " << dE * 100.0
             << "%";
    o.require(base.converged, "no-scheme equilibrium not converged");
    o.require(dT >= 0.05, "TTT reduction below 5%");
    o.require(dE >= 0.10, "emission reduction below 10%");
    o.require(mix.tau_star >= ttt.tau_star, "mixed-optimal charge below TTT-optimal charge");
    return o;
}

Outcome stability(Fixture& f)
{
    Outcome o;
    const auto& sw = f.sweep();
    double worst   = -1e300;
    int checked    = 0;
    bool allConv   = true;
    for (std::size_t k = 0; k < sw.rows.size(); ++k) {
        if (sw.rows[k].tau > 460.0 || !sw.rows[k].converged || !(sw.rows[k].price > 0.0)) {
            continue;
        }
        TcsParams p = f.base;
        p.tau       = sw.rows[k].tau;
        const auto r = stability_check(f.preset, p, sw.reports[k].state);
        allConv      = allConv && r.spectrum.converged && !r.price_inactive;
        worst        = std::max(worst, r.abscissa);
        ++checked;
    }
    Rng rng(77);
    double kernelErr = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const int degree = 1 + trial % 6;
        std::vector<cd> roots;
        while (static_cast<int>(roots.size()) < degree) {
            const double re = std::round(rng.uniform(-6.0, 6.0)) + 0.1 * static_cast<double>(roots.size());
            if (degree - static_cast<int>(roots.size()) >= 2 && rng.uniform(0.0, 1.0) < 0.5) {
                const double im = 0.5 + std::round(rng.uniform(0.0, 3.0));
                roots.emplace_back(re, im);
                roots.emplace_back(re, -im);
            } else {
                roots.emplace_back(re, 0.0);
            }
        }
        const auto s = eigenvalues(companion_matrix(poly_from_roots(roots)));
        kernelErr    = std::max(kernelErr, s.converged ? match_error(roots, s.eigenvalues) : 1e300);
    }
    o.detail << checked << " equilibria with a positive price, max abscissa " << worst
             << "; companion root error " << kernelErr;
    o.require(checked > 0, "no equilibrium with a positive price");
    o.require(worst < 0.0, "non-negative spectral abscissa");
    o.require(allConv, "eigenvalue iteration failed");
    o.require(kernelErr < 1e-8, "companion roots off by >= 1e-8");
    return o;
}

Outcome uniqueness(Fixture& f)
{
    Outcome o;
    auto flat = random_scenario(55, 30);
    flat.mfd  = MfdCurve::constant(10.0);
    const auto z = uniqueness_check(flat, {.n_samples = 40, .seed = 5});
    double zmax  = 0.0;
    for (double d : z.dots) {
        zmax = std::max(zmax, std::abs(d));
    }
    const auto u = uniqueness_check(f.preset, {.n_samples = 200, .seed = 1});
    o.detail << "constant speed max |dot| " << zmax << " over " << z.pairs << " pairs; preset min " << u.min
             << " s over " << u.pairs << " pairs";
    o.require(zmax == 0.0, "non-zero products at constant speed");
    o.require(u.pairs >= 10000, "fewer than 1e4 pairs");
    o.require(u.min > 0.0 && u.non_positive == 0, "non-positive product");
    return o;
}

Outcome credit_conservation(Fixture& f)
{
    Outcome o;
    const auto& eq     = f.tight_eq();
    const double alloc = f.base.kappa * f.preset.total_travelers();
    const double surplus = credit_surplus(f.preset, eq.state.x, f.base);
    const auto gains   = group_gains(f.tight_base(), eq, f.preset, f.base);
    double trade       = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        trade += f.preset.groups[i].gamma * gains[i].trade_eur;
    }
    const bool binding = cap_binding(eq, f.preset, f.base);
    o.detail << "binding " << (binding ? "yes" : "no") << ", unused credits " << surplus << " of " << alloc
             << ", trade balance " << trade << " EUR";
    o.require(binding, "cap not binding at the default charge");
    o.require(std::abs(surplus) <= 1e-6 * alloc, "credits not conserved");
    o.require(std::abs(trade) <= 1e-6 * alloc, "trade balances do not sum to zero");
    return o;
}

} // namespace

int main()
{
    Fixture f;
    const std::pair<const char*, std::function<Outcome(Fixture&)>> criteria[] = {
        {"travel-time gradient vs finite differences", gradient_vs_differences},
        {"trip-length gradient conservation", length_conservation},
        {"simulator exactness", simulator_exactness},
        {"equilibrium quality on the congested preset", equilibrium_quality},
        {"QP solver vs face enumeration", qp_vs_enumeration},
        {"successive averages benchmark", msa_benchmark},
        {"emission model", emission_model},
        {"charge bisection vs grid search", charge_search},
        {"welfare direction", welfare_direction},
        {"local stability of equilibria", stability},
        {"travel-time monotonicity", uniqueness},
        {"credit conservation", credit_conservation},
    };
    int failed = 0;
    int k      = 0;
    for (const auto& [name, fn] : criteria) {
        ++k;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = fn(f);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.str().c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", k - failed, k);
    return failed == 0 ? 0 : 1;
}

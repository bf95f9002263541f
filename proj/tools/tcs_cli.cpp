#include "tcs/analysis.hpp"
#include "tcs/equilibrium.hpp"
#include "tcs/io.hpp"
#include "tcs/objectives.hpp"
#include "tcs/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef TCS_VERSION
#define TCS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json   = nlohmann::ordered_json;

namespace {

struct ParamFlags
{
    std::optional<double> tau, kappa, alpha_eur_per_h, theta, eta, j_goal, p0;
    std::optional<int> max_iters;
    std::optional<std::string> eps, cap, mode;
    std::vector<std::string> sets;
};

struct Common
{
    std::string scenario_path;
    std::string preset = "small";
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int workers = 1;
    ParamFlags pf;
};

std::string lower(std::string s)
{
    for (auto& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

double parse_number(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double d         = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) {
        throw tcs::ParameterError("override " + key + ": not a number: '" + v + "'");
    }
    return d;
}

void apply_eps(tcs::TcsParams& p, const std::string& v)
{
    if (v == "inv") {
        p.eps_schedule = tcs::EpsSchedule::InverseIteration;
    } else if (v.rfind("const:", 0) == 0) {
        p.eps_schedule = tcs::EpsSchedule::Constant;
        p.eps_constant = parse_number("eps", v.substr(6));
    } else {
        throw tcs::ParameterError("eps schedule must be 'inv' or 'const:<value>', got '" + v + "'");
    }
}

void apply_cap(tcs::TcsParams& p, const std::string& v)
{
    if (v == "printed") {
        p.cap = tcs::CapConstraint::AsPrinted;
    } else if (v == "gamma-weighted") {
        p.cap = tcs::CapConstraint::GammaWeighted;
    } else {
        throw tcs::ParameterError("cap constraint must be 'printed' or 'gamma-weighted', got '" + v + "'");
    }
}

void apply_mode(tcs::TcsParams& p, const std::string& v)
{
    if (v == "tcs" || v == "tradable-credits") {
        p.mode = tcs::SchemeMode::TradableCredits;
    } else if (v == "pricing" || v == "congestion-pricing") {
        p.mode = tcs::SchemeMode::CongestionPricing;
    } else {
        throw tcs::ParameterError("mode must be 'tcs' or 'pricing', got '" + v + "'");
    }
}

// key=value with keys named after the TcsParams fields, optional "params." prefix.
void apply_dotted(tcs::TcsParams& p, const std::string& kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw tcs::ParameterError("override must look like key=value: '" + kv + "'");
    }
    std::string key       = lower(kv.substr(0, eq));
    const std::string val = kv.substr(eq + 1);
    if (key.rfind("params.", 0) == 0) {
        key = key.substr(7);
    }
    if (key == "alpha") {
        p.alpha = parse_number(key, val);
    } else if (key == "alpha_eur_per_h") {
        p.set_alpha_eur_per_h(parse_number(key, val));
    } else if (key == "theta") {
        p.theta = parse_number(key, val);
    } else if (key == "kappa") {
        p.kappa = parse_number(key, val);
    } else if (key == "tau") {
        p.tau = parse_number(key, val);
    } else if (key == "eta") {
        p.eta = parse_number(key, val);
    } else if (key == "j_goal") {
        p.j_goal = parse_number(key, val);
    } else if (key == "max_iters") {
        const double d = parse_number(key, val);
        if (d != static_cast<int>(d)) {
            throw tcs::ParameterError("max_iters must be an integer");
        }
        p.max_iters = static_cast<int>(d);
    } else if (key == "eps_schedule") {
        apply_eps(p, val);
    } else if (key == "eps_constant") {
        p.eps_constant = parse_number(key, val);
    } else if (key == "p0") {
        p.p0 = parse_number(key, val);
    } else if (key == "gamma_emission") {
        p.gamma_emission = parse_number(key, val);
    } else if (key == "p_carbon") {
        p.p_carbon = parse_number(key, val);
    } else if (key == "cap") {
        apply_cap(p, val);
    } else if (key == "mode") {
        apply_mode(p, val);
    } else {
        throw tcs::ParameterError("unknown parameter key '" + key + "'");
    }
}

tcs::TcsParams build_params(const ParamFlags& f)
{
    tcs::TcsParams p;
    for (const auto& kv : f.sets) {
        apply_dotted(p, kv);
    }
    if (f.tau) p.tau = *f.tau;
    if (f.kappa) p.kappa = *f.kappa;
    if (f.alpha_eur_per_h) p.set_alpha_eur_per_h(*f.alpha_eur_per_h);
    if (f.theta) p.theta = *f.theta;
    if (f.eta) p.eta = *f.eta;
    if (f.j_goal) p.j_goal = *f.j_goal;
    if (f.p0) p.p0 = *f.p0;
    if (f.max_iters) p.max_iters = *f.max_iters;
    if (f.eps) apply_eps(p, *f.eps);
    if (f.cap) apply_cap(p, *f.cap);
    if (f.mode) apply_mode(p, *f.mode);
    tcs::validate(p);
    return p;
}

json params_json(const tcs::TcsParams& p)
{
    json j;
    j["alpha_eur_per_h"]     = p.alpha_eur_per_h();
    j["theta_per_eur"]       = p.theta;
    j["kappa_credits"]       = p.kappa;
    j["tau_credits"]         = p.tau;
    j["eta"]                 = p.eta;
    j["j_goal"]              = p.j_goal;
    j["max_iters"]           = p.max_iters;
    j["eps_schedule"]        = tcs::to_string(p.eps_schedule);
    j["eps_constant"]        = p.eps_constant;
    j["p0_eur_per_credit"]   = p.p0;
    j["gamma_emission"]      = p.gamma_emission;
    j["p_carbon_eur_per_t"]  = p.p_carbon;
    j["cap_constraint"]      = tcs::to_string(p.cap);
    j["mode"]                = tcs::to_string(p.mode);
    return j;
}

std::string fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Taus as "a:b:step" or a comma list.
std::vector<double> parse_taus(const std::string& spec)
{
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        std::stringstream ss(spec);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c, ':');
        const double lo = parse_number("taus", a), hi = parse_number("taus", b);
        const double step = c.empty() ? 20.0 : parse_number("taus", c);
        if (!(step > 0.0) || hi < lo) {
            throw tcs::ParameterError("tau range must be lo:hi:step with step > 0 and hi >= lo");
        }
        const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
        for (int k = 0; k <= count; ++k) {
            out.push_back(lo + k * step);
        }
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(parse_number("taus", item));
        }
    }
    if (out.empty()) {
        throw tcs::ParameterError("empty tau list");
    }
    return out;
}

class Run
{
public:
    Run(std::string sub, const Common& c, std::vector<std::string> args)
    : _sub(std::move(sub))
    , _common(c)
    , _args(std::move(args))
    {
        _dir = c.out_dir;
        fs::create_directories(_dir);
    }

    tcs::Scenario load()
    {
        tcs::Scenario sc;
        if (!_common.scenario_path.empty()) {
            sc = tcs::load_scenario(_common.scenario_path);
            _scenarioSource = _common.scenario_path;
        } else {
            sc = tcs::generate_synthetic(_common.seed, tcs::preset_spec(_common.preset));
            _scenarioSource = "preset:" + _common.preset;
        }
        _scenarioHash  = fnv1a(tcs::serialize_scenario(sc));
        _groups        = sc.size();
        _travelers     = sc.total_travelers();
        return sc;
    }

    void write(const std::string& name, const std::string& content)
    {
        tcs::io::write_atomic(_dir / name, content);
        _files.push_back(name);
    }

    json& extra() { return _extra; }

    void finish(const std::optional<tcs::TcsParams>& params)
    {
        json m;
        m["software"] = {{"name", "tcs"}, {"version", TCS_VERSION}};
        m["subcommand"] = _sub;
        m["arguments"]  = _args;
        m["seed"]       = _common.seed;
        m["workers"]    = _common.workers;
        if (!_scenarioSource.empty()) {
            m["scenario"] = {{"source", _scenarioSource},
                             {"groups", _groups},
                             {"travelers", _travelers},
                             {"fnv1a64", _scenarioHash}};
        }
        if (params) {
            m["params"] = params_json(*params);
        }
        if (!_extra.empty()) {
            m["results"] = _extra;
        }
        m["outputs"] = _files;
        tcs::io::write_atomic(_dir / "manifest.json", m.dump(2) + "\n");
    }

private:
    std::string _sub;
    Common _common;
    std::vector<std::string> _args;
    fs::path _dir;
    std::vector<std::string> _files;
    std::string _scenarioSource;
    std::string _scenarioHash;
    std::size_t _groups = 0;
    double _travelers   = 0.0;
    json _extra;
};

std::string shares_csv(const tcs::Scenario& sc, const tcs::EquilibriumReport& r)
{
    tcs::io::CsvTable t({"group", "gamma_travelers", "car_share", "car_choice", "car_time_s", "pt_time_s",
                         "car_cost_eur", "pt_cost_eur"});
    for (std::size_t i = 0; i < sc.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        t.add_row({std::to_string(sc.groups[i].id), tcs::io::fmt_double(sc.groups[i].gamma),
                   tcs::io::fmt_double(r.state.x[k]), tcs::io::fmt_double(r.psi[k]), tcs::io::fmt_double(r.car_times[k]),
                   tcs::io::fmt_double(sc.groups[i].pt_time), tcs::io::fmt_double(r.car_cost[k]),
                   tcs::io::fmt_double(r.pt_cost[k])});
    }
    return t.str();
}

std::string convergence_csv(const tcs::EquilibriumReport& r)
{
    tcs::io::CsvTable t({"iteration", "j", "fixed_point_residual", "mcc_residual_credits", "price_eur_per_credit",
                         "step_inf", "qp_shift"});
    for (std::size_t k = 0; k < r.j_trace.size(); ++k) {
        const bool stepped = k < r.step_trace.size();
        t.add_row({std::to_string(k), tcs::io::fmt_double(r.j_trace[k]), tcs::io::fmt_double(r.residual_trace[k]),
                   tcs::io::fmt_double(r.mcc_trace[k]), tcs::io::fmt_double(r.price_trace[k]),
                   stepped ? tcs::io::fmt_double(r.step_trace[k]) : "", stepped ? tcs::io::fmt_double(r.shift_trace[k]) : ""});
    }
    return t.str();
}

json eq_summary(const tcs::EquilibriumReport& r)
{
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"price_eur_per_credit", r.state.p},
            {"car_users_persons", r.car_users},
            {"final_j", r.final_j},
            {"fixed_point_residual", r.fixed_point_residual},
            {"mcc_residual_credits", r.mcc_residual},
            {"cap_slack_credits", std::isfinite(r.cap_slack) ? json(r.cap_slack) : json(nullptr)}};
}

tcs::EquilibriumReport solve(const tcs::Scenario& sc, const tcs::TcsParams& p, double price)
{
    if (p.mode == tcs::SchemeMode::CongestionPricing) {
        return tcs::equilibrium_solve(sc, p, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc.size())), price);
    }
    return tcs::equilibrium_solve(sc, p);
}

void add_common(CLI::App* app, Common& c, bool withScenario = true)
{
    if (withScenario) {
        app->add_option("--scenario", c.scenario_path, "Scenario file (JSON); default: generate from --preset/--seed")
            ->check(CLI::ExistingFile);
        app->add_option("--preset", c.preset, "Synthetic preset used when no scenario file is given")
            ->check(CLI::IsMember(tcs::preset_names()));
    }
    app->add_option("--seed", c.seed, "Seed for generation and sampling");
    app->add_option("-o,--out", c.out_dir, "Output directory");
    app->add_option("--workers", c.workers, "Worker threads for sweeps and sampling")->check(CLI::PositiveNumber);
}

void add_params(CLI::App* app, ParamFlags& f)
{
    app->add_option("--tau", f.tau, "Credit charge per car trip (credits)");
    app->add_option("--kappa", f.kappa, "Credit allocation per traveler (credits)");
    app->add_option("--alpha-eur-per-h", f.alpha_eur_per_h, "Value of time (EUR/h)");
    app->add_option("--theta", f.theta, "Logit scale (1/EUR)");
    app->add_option("--eta", f.eta, "Market-clearing penalty weight");
    app->add_option("--j-goal", f.j_goal, "Stopping threshold on the equilibrium gap");
    app->add_option("--max-iters", f.max_iters, "Iteration cap");
    app->add_option("--p0", f.p0, "Initial credit price (EUR/credit)");
    app->add_option("--eps", f.eps, "Trust-radius schedule: inv or const:<value>");
    app->add_option("--cap-constraint", f.cap, "printed or gamma-weighted")
        ->check(CLI::IsMember({"printed", "gamma-weighted"}));
    app->add_option("--mode", f.mode, "tcs or pricing")->check(CLI::IsMember({"tcs", "pricing"}));
    app->add_option("--set", f.sets, "Override a parameter by field name, e.g. --set params.p0=0.005");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tradable credit scheme equilibria on a trip-based MFD"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TCS_VERSION);

    Common c;
    std::vector<std::string> args(argv + 1, argv + argc);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic scenario");
    add_common(gen, c, false);
    gen->add_option("--preset", c.preset, "Preset name")->check(CLI::IsMember(tcs::preset_names()));
    std::optional<int> genGroups;
    std::optional<double> genTravelers;
    gen->add_option("--groups", genGroups, "Override the number of groups");
    gen->add_option("--travelers", genTravelers, "Override the total number of travelers");

    // equilibrium
    auto* eqc = app.add_subcommand("equilibrium", "Solve one equilibrium");
    add_common(eqc, c);
    add_params(eqc, c.pf);
    double price = 0.0;
    eqc->add_option("--price", price, "Fixed price in pricing mode (EUR/credit)");

    // msa
    auto* msa = app.add_subcommand("msa", "Method of successive averages at a fixed price");
    add_common(msa, c);
    add_params(msa, c.pf);
    std::optional<double> msaPrice;
    int msaIters = 20;
    msa->add_option("--price", msaPrice, "Fixed price (EUR/credit); default: the equilibrium price of the QP solver");
    msa->add_option("--iters", msaIters, "Iterations")->check(CLI::PositiveNumber);

    // sweep
    auto* sw = app.add_subcommand("sweep", "Equilibria over a range of credit charges");
    add_common(sw, c);
    add_params(sw, c.pf);
    std::string sweepTaus = "100:460:20";
    sw->add_option("--taus", sweepTaus, "lo:hi:step or a comma list (credits)");

    // optimize
    auto* opt = app.add_subcommand("optimize", "Bisection on the credit charge");
    add_common(opt, c);
    add_params(opt, c.pf);
    std::string objective = "mixed";
    int lo = 100, hi = 500;
    opt->add_option("--objective", objective, "ttt or mixed")->check(CLI::IsMember({"ttt", "mixed"}));
    opt->add_option("--lo", lo, "Lower charge bound (credits)");
    opt->add_option("--hi", hi, "Upper charge bound (credits)");

    // uniqueness
    auto* uq = app.add_subcommand("uniqueness", "Monotonicity check of travel times over sampled share pairs");
    add_common(uq, c);
    tcs::UniquenessOptions uopt;
    uq->add_option("--samples", uopt.n_samples, "Latin-hypercube samples")->check(CLI::Range(2, 1000000));
    uq->add_option("--max-pairs", uopt.max_pairs, "Pairs evaluated when there are more than this");
    uq->add_option("--bins", uopt.histogram_bins, "Histogram bins")->check(CLI::PositiveNumber);

    // stability
    auto* st = app.add_subcommand("stability", "Spectral abscissa of the linearized dynamics at equilibria");
    add_common(st, c);
    add_params(st, c.pf);
    std::string stabTaus;
    st->add_option("--taus", stabTaus, "lo:hi:step or a comma list (credits); default: --tau");

    // gains
    auto* gn = app.add_subcommand("gains", "Per-group trade balance and time gains against no scheme");
    add_common(gn, c);
    add_params(gn, c.pf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            Run run("generate", c, args);
            auto spec = tcs::preset_spec(c.preset);
            if (genGroups) spec.n_groups = *genGroups;
            if (genTravelers) spec.total_travelers = *genTravelers;
            const auto sc = tcs::generate_synthetic(c.seed, spec);
            run.write("scenario.json", tcs::serialize_scenario(sc));
            run.extra() = {{"preset", c.preset},
                           {"groups", sc.size()},
                           {"travelers", sc.total_travelers()},
                           {"fnv1a64", fnv1a(tcs::serialize_scenario(sc))}};
            run.finish(std::nullopt);
            std::cout << "wrote " << (fs::path(c.out_dir) / "scenario.json").string() << " (" << sc.size() << " groups)\n";
            return 0;
        }

        const tcs::TcsParams params = build_params(c.pf);

        if (eqc->parsed()) {
            Run run("equilibrium", c, args);
            const auto sc = run.load();
            const auto r  = solve(sc, params, price);
            run.write("equilibrium.json", tcs::equilibrium_report_json(r, params));
            run.write("shares.csv", shares_csv(sc, r));
            run.write("convergence.csv", convergence_csv(r));
            run.write("events.csv", tcs::event_trace_csv(r.sim));
            run.extra() = eq_summary(r);
            run.finish(params);
            std::cout << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations
                      << " iterations: J=" << r.final_j << " p=" << r.state.p << " EUR/credit, car users "
                      << r.car_users << "\n";
            return 0;
        }

        if (msa->parsed()) {
            Run run("msa", c, args);
            const auto sc = run.load();
            std::optional<tcs::EquilibriumReport> ref;
            double p = 0.0;
            if (msaPrice) {
                p = *msaPrice;
            } else {
                ref = tcs::equilibrium_solve(sc, params);
                p   = ref->state.p;
            }
            const auto m = tcs::msa_solve(sc, params, p, msaIters);
            json res     = {{"price_eur_per_credit", p},
                            {"price_source", msaPrice ? "flag" : "qp-equilibrium"},
                            {"iterations", msaIters},
                            {"car_users_persons", m.car_users},
                            {"cap_users_persons", m.cap_users},
                            {"cap_violated", m.cap_violated},
                            {"final_residual", m.residual_trace.back()}};
            if (ref) {
                res["qp_converged"]           = ref->converged;
                res["relative_l2_vs_qp"]      = (m.x - ref->state.x).norm() / std::max(ref->state.x.norm(), 1e-300);
                res["qp_car_users_persons"]   = ref->car_users;
            }
            tcs::io::CsvTable trace({"iteration", "fixed_point_residual"});
            for (std::size_t k = 0; k < m.residual_trace.size(); ++k) {
                trace.add_row({std::to_string(k), tcs::io::fmt_double(m.residual_trace[k])});
            }
            tcs::io::CsvTable shares({"group", "gamma_travelers", "car_share"});
            for (std::size_t i = 0; i < sc.size(); ++i) {
                shares.add_row({std::to_string(sc.groups[i].id), tcs::io::fmt_double(sc.groups[i].gamma),
                                tcs::io::fmt_double(m.x[static_cast<Eigen::Index>(i)])});
            }
            run.write("msa.json", res.dump(2) + "\n");
            run.write("msa_trace.csv", trace.str());
            run.write("msa_shares.csv", shares.str());
            run.extra() = res;
            run.finish(params);
            std::cout << "MSA at p=" << p << ": car users " << m.car_users << " (cap " << m.cap_users << ")"
                      << (m.cap_violated ? ", cap violated" : "") << "\n";
            return 0;
        }

        if (sw->parsed()) {
            Run run("sweep", c, args);
            const auto sc    = run.load();
            const auto taus  = parse_taus(sweepTaus);
            const auto sweep = tcs::sweep_charges(sc, params, taus, c.workers);
            const auto base  = tcs::no_scheme_equilibrium(sc, params);
            const auto agg0  = tcs::compute_aggregates(sc, params, base);
            run.write("sweep.csv", tcs::sweep_csv(sweep, params));
            int failed = 0;
            for (const auto& r : sweep.rows) {
                failed += r.converged ? 0 : 1;
            }
            run.extra() = {{"points", taus.size()},
                           {"not_converged", failed},
                           {"no_scheme", {{"converged", base.converged},
                                          {"car_users_persons", base.car_users},
                                          {"ttt_h", agg0.ttt_h},
                                          {"emission_t", agg0.e_t}}}};
            run.finish(params);
            std::cout << taus.size() << " charges, " << failed << " not converged\n";
            return 0;
        }

        if (opt->parsed()) {
            Run run("optimize", c, args);
            const auto sc  = run.load();
            const auto obj = tcs::objective_from_string(objective);
            const auto res = tcs::optimize_charge(sc, params, obj, lo, hi);
            run.write("optimize_trace.csv", tcs::optimize_trace_csv(res));
            tcs::TcsParams atOpt = params;
            atOpt.tau            = res.tau_star;
            run.write("optimum_equilibrium.json", tcs::equilibrium_report_json(res.at_optimum, atOpt));
            const auto agg = tcs::compute_aggregates(sc, atOpt, res.at_optimum);
            run.extra() = {{"objective", objective},
                           {"objective_unit", obj == tcs::Objective::Mixed ? "EUR" : "h"},
                           {"tau_star_credits", res.tau_star},
                           {"objective_value", res.objective},
                           {"equilibrium_solves", res.solves},
                           {"ttt_h", agg.ttt_h},
                           {"emission_t", agg.e_t},
                           {"equilibrium", eq_summary(res.at_optimum)}};
            run.finish(params);
            std::cout << "tau* = " << res.tau_star << " credits, objective " << res.objective << " after "
                      << res.solves << " solves\n";
            return 0;
        }

        if (uq->parsed()) {
            Run run("uniqueness", c, args);
            const auto sc = run.load();
            uopt.seed     = c.seed;
            uopt.workers  = c.workers;
            const auto s  = tcs::uniqueness_check(sc, uopt);
            run.write("histogram.csv", tcs::histogram_csv(s));
            run.extra() = {{"samples", uopt.n_samples}, {"pairs", s.pairs},   {"all_pairs", s.all_pairs},
                           {"min_s", s.min},            {"p01_s", s.p01},     {"median_s", s.p50},
                           {"p99_s", s.p99},            {"max_s", s.max},     {"non_positive", s.non_positive}};
            run.write("uniqueness.json", run.extra().dump(2) + "\n");
            run.finish(std::nullopt);
            std::cout << s.pairs << " pairs, min " << s.min << " s, " << s.non_positive << " non-positive\n";
            return 0;
        }

        if (st->parsed()) {
            Run run("stability", c, args);
            const auto sc   = run.load();
            const auto taus = stabTaus.empty() ? std::vector<double>{params.tau} : parse_taus(stabTaus);
            const auto sweep = tcs::sweep_charges(sc, params, taus, c.workers);
            tcs::io::CsvTable table({"tau_credits", "equilibrium_converged", "price_eur_per_credit",
                                     "spectral_abscissa", "eigen_converged", "stable", "price_inactive"});
            tcs::io::CsvTable eig({"tau_credits", "real", "imag"});
            int unstable = 0;
            for (std::size_t k = 0; k < taus.size(); ++k) {
                tcs::TcsParams p = params;
                p.tau            = taus[k];
                const auto& rep  = sweep.reports[k];
                const auto s     = tcs::stability_check(sc, p, rep.state);
                unstable += s.stable ? 0 : 1;
                table.add_row({tcs::io::fmt_double(taus[k]), rep.converged ? "1" : "0", tcs::io::fmt_double(rep.state.p),
                               tcs::io::fmt_double(s.abscissa), s.spectrum.converged ? "1" : "0", s.stable ? "1" : "0", s.price_inactive ? "1" : "0"});
                for (const auto& z : s.spectrum.eigenvalues) {
                    eig.add_row({tcs::io::fmt_double(taus[k]), tcs::io::fmt_double(z.real()), tcs::io::fmt_double(z.imag())});
                }
            }
            run.write("stability.csv", table.str());
            run.write("eigenvalues.csv", eig.str());
            run.extra() = {{"points", taus.size()}, {"unstable", unstable}};
            run.finish(params);
            std::cout << taus.size() << " equilibria, " << unstable << " not stable\n";
            return 0;
        }

        if (gn->parsed()) {
            Run run("gains", c, args);
            const auto sc    = run.load();
            const auto base  = tcs::no_scheme_equilibrium(sc, params);
            const auto with  = tcs::equilibrium_solve(sc, params);
            const auto gains = tcs::group_gains(base, with, sc, params);
            double trade = 0.0, net = 0.0;
            for (std::size_t i = 0; i < gains.size(); ++i) {
                trade += sc.groups[i].gamma * gains[i].trade_eur;
                net += sc.groups[i].gamma * gains[i].net_eur;
            }
            run.write("gains.csv", tcs::gains_csv(gains));
            run.extra() = {{"no_scheme", eq_summary(base)},
                           {"scheme", eq_summary(with)},
                           {"weighted_trade_balance_eur", trade},
                           {"weighted_net_gain_eur", net}};
            run.finish(params);
            std::cout << "trade balance " << trade << " EUR, net gain " << net << " EUR\n";
            return 0;
        }
    } catch (const tcs::ScenarioError& e) {
        std::cerr << "error: " << e.what();
        if (e.group_id() >= 0) {
            std::cerr << " (group " << e.group_id() << ")";
        }
        std::cerr << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

#include "support.hpp"

#include "tcs/equilibrium.hpp"
#include "tcs/synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace tcs;

namespace {

Scenario one_group(double ptTime)
{
    Scenario s;
    s.groups = {{0, 1000.0, 0.0, 3000.0, ptTime}};
    s.mfd    = MfdCurve::greenshields(15.0, 4000.0, 1.0);
    return s;
}

double car_time(const Scenario& s, double x)
{
    return simulate(s, std::vector<double>{x}).car_times[0];
}

} // namespace

TEST_CASE("logit choice examples")
{
    TcsParams p;
    CHECK(logit_choice(1000.0, 1000.0, 0.0, p) == doctest::Approx(0.5));
    // Cost gap of 4 EUR at theta = 1.
    CHECK(logit_choice(1000.0 + 4.0 / p.alpha, 1000.0, 0.0, p) == doctest::Approx(1.0 / (1.0 + std::exp(4.0))));
    CHECK(logit_choice(1000.0 + 4.0 / p.alpha, 1000.0, 0.0, p) == doctest::Approx(0.01799).epsilon(1e-3));
    const double big = logit_choice(1000.0, 1000.0, 1e6, p);
    CHECK(std::isfinite(big));
    CHECK(big == 0.0);
    CHECK(logit_choice(1000.0, 1e9, 0.0, p) == doctest::Approx(1.0));
    const auto c = mode_costs(1000.0, 800.0, 0.02, p);
    CHECK(c.car - c.pt == doctest::Approx(p.alpha * 200.0 + p.tau * 0.02));
}

TEST_CASE("logit gradient examples")
{
    TcsParams p;
    Eigen::VectorXd psi(3);
    psi << 0.5, 1.0, 0.0;
    Eigen::MatrixXd dT = Eigen::MatrixXd::Zero(3, 3);
    dT(0, 0) = 100.0;
    dT(0, 1) = 50.0;
    dT(1, 1) = 300.0;
    const auto g = logit_gradient(psi, dT, p);
    REQUIRE(g.rows() == 3);
    REQUIRE(g.cols() == 4);
    CHECK(g(0, 0) == doctest::Approx(-0.075));
    CHECK(g(0, 1) == doctest::Approx(-0.0375));
    CHECK(g(0, 3) == doctest::Approx(-50.0));
    // Saturated decisions do not react.
    CHECK(g.row(1).norm() == 0.0);
    CHECK(g.row(2).norm() == 0.0);
}

TEST_CASE("local model for one group")
{
    Scenario s = one_group(900.0);
    s.groups[0].gamma = 10.0;
    TcsParams p;
    Eigen::VectorXd x0(1), psi0(1);
    x0 << 0.2;
    psi0 << 0.3;
    Eigen::MatrixXd gp(1, 2);
    gp << -0.1, -50.0;
    const auto q = build_qp(s, x0, 0.01, psi0, gp, p, 4);
    CHECK(q.P(0, 0) == doctest::Approx(1.21));
    CHECK(q.P(0, 1) == doctest::Approx(55.0 - 200.0));
    CHECK(q.P(1, 0) == doctest::Approx(q.P(0, 1)));
    CHECK(q.P(1, 1) == doctest::Approx(2500.0));
    CHECK(q.q[0] == doctest::Approx(-0.11 - 2.0));
    CHECK(q.q[1] == doctest::Approx(-5.0 + 60.0));
    CHECK(q.lower[0] == doctest::Approx(-0.2));
    CHECK(q.upper[0] == doctest::Approx(0.25));
    CHECK(q.lower[1] == doctest::Approx(-0.01));
    CHECK(q.upper[1] == doctest::Approx(0.25));
    REQUIRE(q.has_cap);
    CHECK(q.cap_row[0] == doctest::Approx(200.0));
    CHECK(q.cap_row[1] == 0.0);
    CHECK(q.cap_rhs == doctest::Approx(60.0));
    CHECK(q.feasible(Eigen::VectorXd::Zero(2)));
}

TEST_CASE("one group without a scheme matches bisection")
{
    const Scenario s = one_group(700.0);
    TcsParams p;
    p.j_goal    = 1e-14;
    p.max_iters = 80;
    // f(x) = psi(T(x)) - x is decreasing.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (logit_choice(car_time(s, mid), 700.0, 0.0, p) > mid ? lo : hi) = mid;
    }
    const auto rep = no_scheme_equilibrium(s, p);
    CHECK(rep.converged);
    CHECK(rep.state.p == 0.0);
    CHECK(std::abs(rep.state.x[0] - 0.5 * (lo + hi)) < 1e-6);
}

TEST_CASE("one group with a binding cap clears at the indifference price")
{
    const Scenario s = one_group(900.0);
    TcsParams p;
    p.j_goal    = 1e-14;
    p.max_iters = 80;
    const auto rep = equilibrium_solve(s, p);
    REQUIRE(rep.converged);
    const double xStar = p.kappa / p.tau;
    const double pStar = p.alpha * (900.0 - car_time(s, xStar)) / p.tau;
    CHECK(std::abs(rep.state.x[0] - xStar) < 1e-6);
    CHECK(std::abs(rep.state.p - pStar) < 1e-6 * std::max(1.0, pStar) + 1e-8);
    CHECK(rep.cap_slack >= -1e-6);
}

TEST_CASE("charge equal to allowance leaves the price at zero")
{
    const auto s = testing::random_scenario(8, 12);
    TcsParams p;
    p.kappa  = 100.0;
    p.tau    = 100.0;
    p.j_goal = 1e-12;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(12);
    const auto rep     = equilibrium_solve(s, p, x0, 0.0);
    CHECK(rep.converged);
    CHECK(rep.state.p == 0.0);
    const auto base = no_scheme_equilibrium(s, p);
    CHECK((rep.state.x - base.state.x).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("small preset at the default charge")
{
    const auto s = generate_synthetic(1, preset_spec("small"));
    TcsParams p;
    const auto rep = equilibrium_solve(s, p);
    REQUIRE(rep.converged);
    CHECK(rep.final_j < p.j_goal);
    CHECK(rep.state.p > 0.0);
    CHECK(rep.car_users <= p.kappa * s.total_travelers() / p.tau + 1e-6);
    CHECK(rep.state.x.minCoeff() >= 0.0);
    CHECK(rep.state.x.maxCoeff() <= 1.0);
    CHECK(rep.j_trace.size() == rep.price_trace.size());
    CHECK(rep.j_trace.size() == rep.residual_trace.size());

    const auto doc = nlohmann::json::parse(equilibrium_report_json(rep, p));
    CHECK(doc.at("converged").get<bool>());
    CHECK(doc.contains("price_trace_eur_per_credit"));

    SUBCASE("fixed-price averaging stays at the equilibrium")
    {
        TcsParams tight = p;
        tight.j_goal    = 1e-12;
        tight.max_iters = 40;
        const auto eq   = equilibrium_solve(s, tight);
        REQUIRE(eq.converged);
        const auto m = msa_solve(s, tight, eq.state.p, 5, eq.state.x);
        CHECK((m.x - eq.state.x).lpNorm<Eigen::Infinity>() < 1e-4);
        CHECK(m.residual_trace.front() < 1e-4);
    }
    SUBCASE("a low fixed price overshoots the cap")
    {
        const auto m = msa_solve(s, p, 0.001, 20);
        CHECK(m.cap_violated);
        CHECK(m.car_users > m.cap_users);
    }
}

TEST_CASE("solver rejects bad starts")
{
    const auto s = testing::random_scenario(2, 4);
    TcsParams p;
    CHECK_THROWS_AS(equilibrium_solve(s, p, Eigen::VectorXd::Zero(3), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(equilibrium_solve(s, p, Eigen::VectorXd::Zero(4), -1.0), std::invalid_argument);
}

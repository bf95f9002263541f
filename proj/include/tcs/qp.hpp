#pragma once

#include <Eigen/Dense>

#include <string>

namespace tcs {

/// min 0.5 z'Pz + q'z  s.t.  lower <= z <= upper,  cap_row'z <= cap_rhs (if has_cap).
struct QpProblem
{
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    bool has_cap = false;
    Eigen::VectorXd cap_row;
    double cap_rhs = 0.0;
    // Trust radii that produced the box, kept for reporting.
    double eps_x = 0.0;
    double eps_p = 0.0;

    Eigen::Index size() const noexcept { return q.size(); }
    double objective(const Eigen::VectorXd& z) const;
    bool feasible(const Eigen::VectorXd& z) const;
    /// Throws std::invalid_argument on inconsistent dimensions or bounds.
    void check() const;
};

struct QpOptions
{
    double tol           = 1e-9;
    int max_pg_iters     = 200;
    int max_active_iters = 5000;
};

struct QpResult
{
    Eigen::VectorXd z;
    double objective = 0.0;
    double shift     = 0.0; // spectral shift added to P, 0 when P was already definite
    double residual  = 0.0; // ||z - Proj(z - grad)||_inf of the solved (shifted) model
    double cap_multiplier = 0.0;
    bool cap_active       = false;
    int pg_iterations     = 0;
    int active_iterations = 0;
    bool converged        = false;
};

/// Euclidean projection onto the feasible set, or in the metric diag(d) when
/// d is given. Box feasibility is exact; the cap holds in computed arithmetic.
Eigen::VectorXd project_feasible(const QpProblem& prob, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd* metric = nullptr);

/// Projected gradient with exact line search, then primal active-set
/// refinement. Requires 0 to be feasible.
QpResult solve_qp(const QpProblem& prob, const QpOptions& options = {});

} // namespace tcs

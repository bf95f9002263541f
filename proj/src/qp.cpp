#include "tcs/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tcs {

double QpProblem::objective(const Eigen::VectorXd& z) const
{
    return 0.5 * z.dot(P * z) + q.dot(z);
}

bool QpProblem::feasible(const Eigen::VectorXd& z) const
{
    if (z.size() != size()) {
        return false;
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!(z[i] >= lower[i] && z[i] <= upper[i])) {
            return false;
        }
    }
    return !has_cap || cap_row.dot(z) <= cap_rhs;
}

void QpProblem::check() const
{
    const auto n = size();
    if (P.rows() != n || P.cols() != n || lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("QpProblem: dimension mismatch");
    }
    if (has_cap && cap_row.size() != n) {
        throw std::invalid_argument("QpProblem: cap row has the wrong length");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(lower[i] <= upper[i])) {
            throw std::invalid_argument("QpProblem: lower bound above upper bound at coordinate " + std::to_string(i));
        }
    }
    if (!P.allFinite() || !q.allFinite()) {
        throw std::invalid_argument("QpProblem: non-finite matrix or vector");
    }
}

namespace {

Eigen::VectorXd clip(const QpProblem& prob, const Eigen::VectorXd& y)
{
    return y.cwiseMax(prob.lower).cwiseMin(prob.upper);
}

// Box clip, then remove a rounding-level cap excess from the coordinate with
// the most room; pulling toward the origin is the last resort.
void enforce_feasible(const QpProblem& prob, Eigen::VectorXd& z)
{
    z = clip(prob, z);
    if (!prob.has_cap) {
        return;
    }
    const auto& a = prob.cap_row;
    double az     = a.dot(z);
    for (int k = 0; k < 8 && az > prob.cap_rhs; ++k) {
        Eigen::Index best = -1;
        double room       = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double r = a[i] > 0.0 ? a[i] * (z[i] - prob.lower[i]) : a[i] * (z[i] - prob.upper[i]);
            if (r > room) {
                room = r;
                best = i;
            }
        }
        if (best < 0) {
            break;
        }
        const double excess = (az - prob.cap_rhs) * (1.0 + 1e-9) + 4.0 * std::numeric_limits<double>::min();
        const double move   = std::min(room, excess) / a[best];
        z[best]             = std::clamp(z[best] - move, prob.lower[best], prob.upper[best]);
        az                  = a.dot(z);
    }
    for (int k = 0; k < 64 && az > prob.cap_rhs; ++k) {
        const double t = az > 0.0 ? std::max(0.0, prob.cap_rhs / az) * (1.0 - 4.0 * k * 1e-16) : 0.0;
        z *= t;
        z  = clip(prob, z);
        az = prob.cap_row.dot(z);
    }
    if (az > prob.cap_rhs) {
        z.setZero();
    }
}

} // namespace

Eigen::VectorXd project_feasible(const QpProblem& prob, const Eigen::VectorXd& y, const Eigen::VectorXd* metric)
{
    Eigen::VectorXd z = clip(prob, y);
    if (!prob.has_cap || prob.cap_row.dot(z) <= prob.cap_rhs) {
        return z;
    }
    Eigen::VectorXd dir = prob.cap_row;
    if (metric != nullptr) {
        dir = dir.cwiseQuotient(*metric);
    }
    auto at = [&](double lambda) { return clip(prob, y - lambda * dir); };

    double lo = 0.0;
    double hi = 1.0;
    Eigen::VectorXd zhi = at(hi);
    while (prob.cap_row.dot(zhi) > prob.cap_rhs) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi) || hi > 1e300) {
            // Corner of the box that minimizes the cap row.
            Eigen::VectorXd corner = z;
            for (Eigen::Index i = 0; i < corner.size(); ++i) {
                if (prob.cap_row[i] > 0.0) {
                    corner[i] = prob.lower[i];
                } else if (prob.cap_row[i] < 0.0) {
                    corner[i] = prob.upper[i];
                }
            }
            if (prob.cap_row.dot(corner) > prob.cap_rhs) {
                throw std::runtime_error("project_feasible: feasible set is empty");
            }
            return corner;
        }
        zhi = at(hi);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eigen::VectorXd zm = at(mid);
        if (prob.cap_row.dot(zm) > prob.cap_rhs) {
            lo = mid;
        } else {
            hi  = mid;
            zhi = std::move(zm);
        }
    }
    return zhi;
}

namespace {

enum class Bound { Free, Lower, Upper, Fixed };

struct FaceSolution
{
    Eigen::VectorXd z;
    double mu    = 0.0;
    bool capUsed = false;
};

// Minimizer of the model with the working set held as equalities: bounded
// coordinates at their bound, and a'z = b when the cap is on.
FaceSolution solve_face(const Eigen::MatrixXd& H, const QpProblem& prob, const std::vector<Bound>& st, bool capOn)
{
    const auto n = prob.size();
    FaceSolution out;
    out.z = Eigen::VectorXd::Zero(n);
    std::vector<Eigen::Index> freeIdx;
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (st[static_cast<std::size_t>(i)]) {
        case Bound::Free: freeIdx.push_back(i); break;
        case Bound::Upper: out.z[i] = prob.upper[i]; break;
        default: out.z[i] = prob.lower[i]; break;
        }
    }
    const auto m = static_cast<Eigen::Index>(freeIdx.size());
    if (m == 0) {
        return out;
    }
    Eigen::VectorXd zA = out.z; // free entries are zero
    const Eigen::VectorXd hz = H * zA;
    Eigen::MatrixXd Hff(m, m);
    Eigen::VectorXd rhs(m), af(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto ir = freeIdx[static_cast<std::size_t>(r)];
        rhs[r]        = -prob.q[ir] - hz[ir];
        af[r]         = prob.has_cap ? prob.cap_row[ir] : 0.0;
        for (Eigen::Index c = 0; c < m; ++c) {
            Hff(r, c) = H(ir, freeIdx[static_cast<std::size_t>(c)]);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Hff);
    Eigen::VectorXd zf = llt.solve(rhs);
    if (capOn && prob.has_cap) {
        const Eigen::VectorXd v = llt.solve(af);
        const double denom      = af.dot(v);
        const double scale      = af.squaredNorm() / std::max(Hff.diagonal().maxCoeff(), 1e-300);
        if (denom > 1e-14 * scale) {
            out.mu      = (af.dot(zf) + prob.cap_row.dot(zA) - prob.cap_rhs) / denom;
            out.capUsed = true;
            zf -= out.mu * v;
        }
    }
    for (Eigen::Index r = 0; r < m; ++r) {
        out.z[freeIdx[static_cast<std::size_t>(r)]] = zf[r];
    }
    return out;
}

std::vector<Bound> working_set_at(const QpProblem& prob, Eigen::VectorXd& z)
{
    std::vector<Bound> st(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        auto& s = st[static_cast<std::size_t>(i)];
        if (prob.lower[i] == prob.upper[i]) {
            s    = Bound::Fixed;
            z[i] = prob.lower[i];
        } else if (z[i] <= prob.lower[i]) {
            s    = Bound::Lower;
            z[i] = prob.lower[i];
        } else if (z[i] >= prob.upper[i]) {
            s    = Bound::Upper;
            z[i] = prob.upper[i];
        } else {
            s = Bound::Free;
        }
    }
    return st;
}

bool cap_tight(const QpProblem& prob, const Eigen::VectorXd& z)
{
    if (!prob.has_cap) {
        return false;
    }
    const double scale = prob.cap_row.cwiseAbs().dot(z.cwiseAbs()) + std::abs(prob.cap_rhs);
    return prob.cap_row.dot(z) >= prob.cap_rhs - 1e-13 * (1.0 + scale);
}

// Primal-dual active set (semismooth Newton on the complementarity system).
// Returns true with a KKT point in z, false if the sets kept changing.
bool primal_dual_active_set(const Eigen::MatrixXd& H, const QpProblem& prob, Eigen::VectorXd& z, double& mu,
                            bool& capOn, int maxIts, int& its)
{
    const auto n        = prob.size();
    std::vector<Bound> st = working_set_at(prob, z);
    capOn               = cap_tight(prob, z);
    const Eigen::VectorXd c = H.diagonal().cwiseMax(1e-300);
    for (its = 0; its < maxIts;) {
        ++its;
        FaceSolution sol = solve_face(H, prob, st, capOn);
        if (!sol.z.allFinite()) {
            return false;
        }
        const double m          = sol.capUsed ? sol.mu : 0.0;
        const Eigen::VectorXd g = H * sol.z + prob.q;
        bool changed            = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& s = st[static_cast<std::size_t>(i)];
            if (s == Bound::Fixed) {
                continue;
            }
            const double y   = g[i] + (prob.has_cap ? m * prob.cap_row[i] : 0.0);
            const double val = (s == Bound::Free ? sol.z[i] : sol.z[i] - y / c[i]);
            Bound next       = Bound::Free;
            if (val < prob.lower[i]) {
                next = Bound::Lower;
            } else if (val > prob.upper[i]) {
                next = Bound::Upper;
            }
            if (next != s) {
                s       = next;
                changed = true;
            }
        }
        bool capNext = false;
        if (prob.has_cap) {
            capNext = sol.capUsed ? m > 0.0 : prob.cap_row.dot(sol.z) > prob.cap_rhs;
        }
        if (capNext != capOn) {
            changed = true;
            capOn   = capNext;
        }
        if (!changed) {
            z  = sol.z;
            mu = m;
            capOn = sol.capUsed;
            return true;
        }
    }
    return false;
}

// Classical primal active set from a feasible z; monotone in the objective.
bool primal_active_set(const Eigen::MatrixXd& H, const QpProblem& prob, Eigen::VectorXd& z, double& mu, bool& capOn,
                       int maxIts, int& its)
{
    const auto n          = prob.size();
    std::vector<Bound> st = working_set_at(prob, z);
    capOn                 = cap_tight(prob, z);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd& a   = prob.has_cap ? prob.cap_row : zero;
    for (its = 0; its < maxIts;) {
        ++its;
        FaceSolution sol = solve_face(H, prob, st, capOn);
        if (capOn && !sol.capUsed) {
            capOn = false;
        }
        mu                = sol.capUsed ? sol.mu : 0.0;
        Eigen::VectorXd d = sol.z - z;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (st[static_cast<std::size_t>(i)] != Bound::Free) {
                d[i] = 0.0;
            }
        }
        if (d.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            const Eigen::VectorXd g = H * z + prob.q;
            const double mtol       = 1e-11 * (1.0 + g.lpNorm<Eigen::Infinity>());
            double worst            = -mtol;
            Eigen::Index drop       = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto s = st[static_cast<std::size_t>(i)];
                double lam   = 0.0;
                if (s == Bound::Lower) {
                    lam = g[i] + mu * a[i];
                } else if (s == Bound::Upper) {
                    lam = -(g[i] + mu * a[i]);
                } else {
                    continue;
                }
                if (lam < worst) {
                    worst = lam;
                    drop  = i;
                }
            }
            if (capOn && mu < worst) {
                capOn = false;
            } else if (drop >= 0) {
                st[static_cast<std::size_t>(drop)] = Bound::Free;
            } else {
                return true;
            }
            continue;
        }

        double alpha     = 1.0;
        Eigen::Index hit = -1;
        Bound hitState   = Bound::Free;
        bool hitCap      = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (st[static_cast<std::size_t>(i)] != Bound::Free) {
                continue;
            }
            if (d[i] < 0.0) {
                const double r = (prob.lower[i] - z[i]) / d[i];
                if (r < alpha) {
                    alpha    = r;
                    hit      = i;
                    hitState = Bound::Lower;
                }
            } else if (d[i] > 0.0) {
                const double r = (prob.upper[i] - z[i]) / d[i];
                if (r < alpha) {
                    alpha    = r;
                    hit      = i;
                    hitState = Bound::Upper;
                }
            }
        }
        if (prob.has_cap && !capOn) {
            const double ad = a.dot(d);
            if (ad > 0.0) {
                const double r = std::max(0.0, (prob.cap_rhs - a.dot(z)) / ad);
                if (r < alpha) {
                    alpha  = r;
                    hitCap = true;
                    hit    = -1;
                }
            }
        }
        alpha = std::max(0.0, alpha);
        z += alpha * d;
        z = clip(prob, z);
        if (hitCap) {
            capOn = true;
        } else if (hit >= 0) {
            st[static_cast<std::size_t>(hit)] = hitState;
            z[hit] = hitState == Bound::Lower ? prob.lower[hit] : prob.upper[hit];
        }
    }
    return false;
}

} // namespace

QpResult solve_qp(const QpProblem& prob, const QpOptions& options)
{
    prob.check();
    const auto n = prob.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (prob.lower[i] > 0.0 || prob.upper[i] < 0.0) {
            throw std::invalid_argument("solve_qp: the origin must lie inside the box");
        }
    }
    if (prob.has_cap && prob.cap_rhs < 0.0) {
        throw std::invalid_argument("solve_qp: the origin violates the cap");
    }

    QpResult res;
    res.z = Eigen::VectorXd::Zero(n);
    if (n == 0) {
        res.converged = true;
        return res;
    }

    Eigen::MatrixXd H = 0.5 * (prob.P + prob.P.transpose());
    const double delta = 1e-8 * std::max(H.norm(), std::numeric_limits<double>::min());
    {
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        bool definite = llt.info() == Eigen::Success;
        if (definite) {
            const auto diag = llt.matrixLLT().diagonal();
            definite        = diag.cwiseProduct(diag).minCoeff() >= delta;
        }
        if (!definite) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
            const double lmin = es.eigenvalues()(0);
            res.shift         = std::max(0.0, delta - lmin);
            H.diagonal().array() += res.shift;
        }
    }
    const Eigen::VectorXd& q = prob.q;
    auto model               = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(H * v) + q.dot(v); };

    // Scaled projected gradient with exact line search.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd D = H.diagonal().cwiseMax(delta);
    for (int it = 0; it < options.max_pg_iters; ++it) {
        const Eigen::VectorXd g = H * z + q;
        Eigen::VectorXd d       = project_feasible(prob, z - g.cwiseQuotient(D), &D) - z;
        ++res.pg_iterations;
        if (d.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + z.lpNorm<Eigen::Infinity>())) {
            break;
        }
        const double slope = g.dot(d);
        const double curv  = d.dot(H * d);
        if (slope >= 0.0) {
            break;
        }
        z += (curv > 0.0 ? std::min(1.0, -slope / curv) : 1.0) * d;
        enforce_feasible(prob, z);
    }

    // Active-set refinement: primal-dual first, the primal method if that cycles.
    double mu     = 0.0;
    bool capOn    = false;
    bool optimal  = false;
    Eigen::VectorXd trial = z;
    int its               = 0;
    if (primal_dual_active_set(H, prob, trial, mu, capOn, 50, its)) {
        enforce_feasible(prob, trial);
        if (model(trial) <= model(z)) {
            z       = trial;
            optimal = true;
        }
    }
    res.active_iterations = its;
    if (!optimal) {
        optimal = primal_active_set(H, prob, z, mu, capOn, options.max_active_iters, its);
        res.active_iterations += its;
        enforce_feasible(prob, z);
    }

    const Eigen::VectorXd g = H * z + q;
    res.residual            = (z - project_feasible(prob, z - g)).lpNorm<Eigen::Infinity>();
    res.z                   = z;
    res.objective           = prob.objective(z);
    res.cap_active          = capOn;
    res.cap_multiplier      = capOn ? mu : 0.0;
    res.converged           = optimal && res.residual <= options.tol * std::max(1.0, q.lpNorm<Eigen::Infinity>());
    if (res.objective > 0.0) {
        // Never worse than standing still.
        res.z.setZero();
        res.objective = 0.0;
        res.residual  = (res.z - project_feasible(prob, -q)).lpNorm<Eigen::Infinity>();
        res.converged = false;
    }
    return res;
}

} // namespace tcs

#pragma once

#include "tcs/emission.hpp"
#include "tcs/qp.hpp"
#include "tcs/random.hpp"
#include "tcs/scenario.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

namespace tcs::testing {

// Steps the bathtub recurrence by hand in scalar type R: piecewise-constant
// speed, next event is the earlier of the next entry and the first finishing trip.
template <class R>
std::vector<R> stepped_car_times(const Scenario& s, const std::vector<R>& x)
{
    const std::size_t n = s.groups.size();
    auto speed = [&](R acc) -> R {
        if (s.mfd.form() == MfdForm::LinearGreenshields) {
            const R v = R(s.mfd.v_free()) * (R(1) - acc / R(s.mfd.n_jam()));
            return std::max(v, R(s.mfd.v_floor()));
        }
        return R(s.mfd.speed(static_cast<double>(acc)));
    };
    std::vector<R> remaining(n), times(n, R(-1));
    std::vector<bool> in(n, false);
    R t              = 0;
    std::size_t done = 0;
    while (done < n) {
        R acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += in[i] ? R(s.groups[i].gamma) * x[i] : R(0);
        }
        const R v      = speed(acc);
        R next         = std::numeric_limits<R>::infinity();
        std::size_t who = 0;
        bool entry     = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in[i] && times[i] < 0 && R(s.groups[i].depart) < next) {
                next  = R(s.groups[i].depart);
                who   = i;
                entry = true;
            }
            if (in[i] && t + remaining[i] / v < next) {
                next  = t + remaining[i] / v;
                who   = i;
                entry = false;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (in[i]) {
                remaining[i] -= (next - t) * v;
            }
        }
        t = next;
        if (entry) {
            in[who]        = true;
            remaining[who] = R(s.groups[who].trip_len);
        } else {
            in[who]    = false;
            times[who] = t - R(s.groups[who].depart);
            ++done;
        }
    }
    return times;
}

inline QpProblem random_problem(std::uint64_t seed, int n, bool cap)
{
    Rng rng(seed);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m(i, j) = rng.uniform(-1.0, 1.0);
        }
    }
    QpProblem p;
    p.P = m.transpose() * m + 0.1 * Eigen::MatrixXd::Identity(n, n);
    p.q.resize(n);
    p.lower.resize(n);
    p.upper.resize(n);
    for (int i = 0; i < n; ++i) {
        p.q[i]     = rng.uniform(-2.0, 2.0);
        p.lower[i] = -rng.uniform(0.0, 0.5);
        p.upper[i] = rng.uniform(0.0, 0.5);
    }
    p.upper[0] = 0.0; // a degenerate bound touching the origin
    if (cap) {
        p.has_cap = true;
        p.cap_row.resize(n);
        for (int i = 0; i < n; ++i) {
            p.cap_row[i] = rng.uniform(0.0, 2.0);
        }
        p.cap_rhs = rng.uniform(0.0, 0.2);
    }
    return p;
}

// Each variable at its lower bound, upper bound or free, with the cap active
// or not; the convex minimum is the best feasible stationary point of a face.
inline double face_enumeration(const QpProblem& p, Eigen::VectorXd& best)
{
    const int n      = static_cast<int>(p.size());
    double bestValue = std::numeric_limits<double>::infinity();
    int faces        = 1;
    for (int i = 0; i < n; ++i) {
        faces *= 3;
    }
    for (int code = 0; code < faces; ++code) {
        for (int capOn = 0; capOn < (p.has_cap ? 2 : 1); ++capOn) {
            Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
            std::vector<int> free;
            int c = code;
            for (int i = 0; i < n; ++i) {
                const int s = c % 3;
                c /= 3;
                if (s == 0) {
                    z[i] = p.lower[i];
                } else if (s == 1) {
                    z[i] = p.upper[i];
                } else {
                    free.push_back(i);
                }
            }
            const int f = static_cast<int>(free.size());
            const int m = f + capOn;
            if (m > 0) {
                Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
                Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
                for (int a = 0; a < f; ++a) {
                    r[a] = -p.q[free[static_cast<std::size_t>(a)]];
                    for (int j = 0; j < n; ++j) {
                        if (std::find(free.begin(), free.end(), j) == free.end()) {
                            r[a] -= p.P(free[static_cast<std::size_t>(a)], j) * z[j];
                        }
                    }
                    for (int b = 0; b < f; ++b) {
                        k(a, b) = p.P(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
                    }
                }
                if (capOn) {
                    double rhs = p.cap_rhs;
                    for (int j = 0; j < n; ++j) {
                        if (std::find(free.begin(), free.end(), j) == free.end()) {
                            rhs -= p.cap_row[j] * z[j];
                        }
                    }
                    for (int a = 0; a < f; ++a) {
                        k(a, f) = k(f, a) = p.cap_row[free[static_cast<std::size_t>(a)]];
                    }
                    r[f] = rhs;
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
                if (!lu.isInvertible()) {
                    continue;
                }
                const Eigen::VectorXd sol = lu.solve(r);
                for (int a = 0; a < f; ++a) {
                    z[free[static_cast<std::size_t>(a)]] = sol[a];
                }
            } else if (capOn) {
                continue;
            }
            bool ok = true;
            for (int i = 0; i < n; ++i) {
                ok = ok && z[i] >= p.lower[i] - 1e-12 && z[i] <= p.upper[i] + 1e-12;
            }
            if (p.has_cap) {
                ok = ok && p.cap_row.dot(z) <= p.cap_rhs + 1e-12;
            }
            if (ok && p.objective(z) < bestValue) {
                bestValue = p.objective(z);
                best      = z;
            }
        }
    }
    return bestValue;
}

using cd = std::complex<double>;

// Monic coefficients, lowest order first.
inline std::vector<double> poly_from_roots(const std::vector<cd>& roots)
{
    std::vector<cd> c{1.0};
    for (const auto& r : roots) {
        std::vector<cd> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        out.push_back(c[k].real());
    }
    return out;
}

inline double match_error(std::vector<cd> expect, std::vector<cd> found)
{
    if (expect.size() != found.size()) {
        return 1e300;
    }
    double worst = 0.0;
    for (const auto& e : expect) {
        auto it = std::min_element(found.begin(), found.end(),
                                   [&](const cd& a, const cd& b) { return std::abs(a - e) < std::abs(b - e); });
        worst = std::max(worst, std::abs(*it - e));
        found.erase(it);
    }
    return worst;
}

inline double quartic(double u, const EmissionModel& m)
{
    return (((m.c1 * u + m.c2) * u + m.c3) * u + m.c4) * u + m.c5;
}

// Mean of the quartic over [v - c0, v + c0] by 3-point Gauss-Legendre (exact to degree 5).
inline double averaged_factor(double v, const EmissionModel& m)
{
    const double r = std::sqrt(0.6);
    return (5.0 * quartic(v - r * m.c0, m) + 8.0 * quartic(v, m) + 5.0 * quartic(v + r * m.c0, m)) / 18.0;
}

} // namespace tcs::testing

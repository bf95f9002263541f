#include "tcs/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tcs {

namespace {

double sign_of(double a, double b)
{
    return b >= 0.0 ? std::abs(a) : -std::abs(a);
}

} // namespace

void balance(Eigen::MatrixXd& a)
{
    const Eigen::Index n = a.rows();
    constexpr double radix = 2.0;
    constexpr double sqrdx = radix * radix;
    bool done              = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            }
            if (c == 0.0 || r == 0.0) {
                continue;
            }
            double g       = r / radix;
            double f       = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                a.row(i) /= f;
                a.col(i) *= f;
            }
        }
    }
}

void hessenberg_reduce(Eigen::MatrixXd& a)
{
    const Eigen::Index n = a.rows();
    for (Eigen::Index m = 1; m + 1 < n; ++m) {
        double x       = 0.0;
        Eigen::Index i = m;
        for (Eigen::Index j = m; j < n; ++j) {
            if (std::abs(a(j, m - 1)) > std::abs(x)) {
                x = a(j, m - 1);
                i = j;
            }
        }
        if (i != m) {
            for (Eigen::Index j = m - 1; j < n; ++j) {
                std::swap(a(i, j), a(m, j));
            }
            a.col(i).swap(a.col(m));
        }
        if (x != 0.0) {
            for (i = m + 1; i < n; ++i) {
                double y = a(i, m - 1);
                if (y == 0.0) {
                    continue;
                }
                y /= x;
                a(i, m - 1) = 0.0;
                for (Eigen::Index j = m; j < n; ++j) {
                    a(i, j) -= y * a(m, j);
                }
                a.col(m) += y * a.col(i);
            }
        }
    }
    for (Eigen::Index i = 2; i < n; ++i) {
        for (Eigen::Index j = 0; j + 1 < i; ++j) {
            a(i, j) = 0.0;
        }
    }
}

Spectrum hessenberg_eigenvalues(Eigen::MatrixXd& a, int maxIts)
{
    const int n = static_cast<int>(a.rows());
    Spectrum out;
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    std::vector<bool> found(static_cast<std::size_t>(n), false);
    const double eps = std::numeric_limits<double>::epsilon();

    double anorm = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(i - 1, 0); j < n; ++j) {
            anorm += std::abs(a(i, j));
        }
    }

    int nn   = n - 1;
    double t = 0.0; // accumulated exceptional shifts
    auto put = [&](int idx, std::complex<double> v) {
        w[static_cast<std::size_t>(idx)]     = v;
        found[static_cast<std::size_t>(idx)] = true;
    };

    while (nn >= 0) {
        int its = 0;
        int l   = 0;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) {
                    s = anorm;
                }
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                put(nn--, x + t);
            } else {
                double y = a(nn - 1, nn - 1);
                double w2 = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w2;
                    double z       = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        put(nn - 1, x + z);
                        put(nn, z != 0.0 ? x - w2 / z : x + z);
                    } else {
                        put(nn, {x + p, -z});
                        put(nn - 1, {x + p, z});
                    }
                    nn -= 2;
                } else {
                    if (its == maxIts) {
                        out.converged = false;
                        nn            = -1;
                        break;
                    }
                    if (its == 10 || its == 20) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) {
                            a(i, i) -= x;
                        }
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w2     = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z        = a(m, m);
                        r        = x - z;
                        double s = y - z;
                        p        = (r * s - w2) / a(m + 1, m) + a(m, m + 1);
                        q        = a(m + 1, m + 1) - z - r - s;
                        r        = a(m + 2, m + 1);
                        s        = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) {
                            break;
                        }
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) {
                            break;
                        }
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a(i + 2, i) = 0.0;
                        if (i != m) {
                            a(i + 2, i - 1) = 0.0;
                        }
                    }
                    // Double QR step on rows l..nn and columns m..nn.
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = k + 1 != nn ? a(k + 2, k - 1) : 0.0;
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) {
                            continue;
                        }
                        if (k == m) {
                            if (l != m) {
                                a(k, k - 1) = -a(k, k - 1);
                            }
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = std::min(nn, k + 3);
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (nn >= 0 && l + 1 < nn);
    }

    out.abscissa = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (found[static_cast<std::size_t>(i)]) {
            out.eigenvalues.push_back(w[static_cast<std::size_t>(i)]);
            out.abscissa = std::max(out.abscissa, w[static_cast<std::size_t>(i)].real());
        }
    }
    return out;
}

Spectrum eigenvalues(const Eigen::MatrixXd& a)
{
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("eigenvalues: matrix must be square");
    }
    if (!a.allFinite()) {
        throw std::invalid_argument("eigenvalues: non-finite entries");
    }
    Eigen::MatrixXd h = a;
    balance(h);
    hessenberg_reduce(h);
    return hessenberg_eigenvalues(h);
}

Eigen::MatrixXd companion_matrix(const std::vector<double>& c)
{
    const auto n = static_cast<Eigen::Index>(c.size());
    if (n == 0) {
        throw std::invalid_argument("companion_matrix: empty polynomial");
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) {
        m(i, i - 1) = 1.0;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, n - 1) = -c[static_cast<std::size_t>(i)];
    }
    return m;
}

} // namespace tcs

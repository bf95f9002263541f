#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace tcs {

struct Spectrum
{
    std::vector<std::complex<double>> eigenvalues; // found so far; all of them when converged
    bool converged = true;
    double abscissa = 0.0; // max real part over the eigenvalues found
};

/// Diagonal similarity scaling that evens out row and column norms (in place).
void balance(Eigen::MatrixXd& a);

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transforms (in place); entries below the subdiagonal are zeroed.
void hessenberg_reduce(Eigen::MatrixXd& a);

/// All eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration with deflation. Destroys `h`.
Spectrum hessenberg_eigenvalues(Eigen::MatrixXd& h, int maxItsPerEigenvalue = 60);

/// Balance, reduce and iterate on a copy of a dense real matrix.
Spectrum eigenvalues(const Eigen::MatrixXd& a);

/// Companion matrix of the monic polynomial x^n + c[n-1] x^(n-1) + ... + c[0].
Eigen::MatrixXd companion_matrix(const std::vector<double>& lowToHigh);

} // namespace tcs

#pragma once

#include <Eigen/Dense>

namespace emass {

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of order 3, 5, 7, 9 or 13, picked from the 1-norm.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Principal square root via the scaled product Denman-Beavers iteration.
/// Requires no eigenvalues on the closed negative real axis.
Eigen::MatrixXd sqrtm(const Eigen::MatrixXd& a);

/// Principal logarithm by inverse scaling and squaring: repeated square
/// roots until the argument is near the identity, then a Gauss-Legendre
/// evaluation of the [8/8] Padé approximant of log(I + X).
/// Throws NO_PRINCIPAL_LOG when an eigenvalue is real and <= 0.
Eigen::MatrixXd logm(const Eigen::MatrixXd& a);

/// True when some eigenvalue is (numerically) real and non-positive.
bool has_nonpositive_real_eigenvalue(const Eigen::MatrixXd& a);

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& a);

/// Largest real part over the eigenvalues.
double spectral_abscissa(const Eigen::MatrixXd& a);

}  // namespace emass

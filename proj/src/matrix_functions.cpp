#include "emass/matrix_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "emass/error.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;

// Padé numerator coefficients for the exponential; the denominator uses the
// same coefficients with alternating signs, so exp(A) ~ (V + U)(V - U)^-1.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// 1-norm bounds below which each approximant is accurate to unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm1(const MatrixXd& a) {
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

template <std::size_t N>
void pade_low(const MatrixXd& a, const std::array<double, N>& b, MatrixXd& u,
              MatrixXd& v) {
  const auto n = a.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  MatrixXd power = ident;
  MatrixXd odd = b[1] * ident;
  MatrixXd even = b[0] * ident;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    if (k + 1 < N) odd += b[k + 1] * power;
  }
  u = a * odd;
  v = even;
}

void pade13(const MatrixXd& a, MatrixXd& u, MatrixXd& v) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  const MatrixXd inner_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const MatrixXd inner_v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
}

// Gauss-Legendre nodes and weights on [-1, 1], 8 points.
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// [8/8] Padé approximant of log(I + x) written as its partial fraction
// expansion: sum_j w_j x (I + t_j x)^-1 with nodes mapped to [0, 1].
MatrixXd log1p_pade(const MatrixXd& x) {
  const auto n = x.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  MatrixXd out = MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < kGlNodes.size(); ++j) {
    const double node = 0.5 * (kGlNodes[j] + 1.0);
    const double weight = 0.5 * kGlWeights[j];
    // x (I + node x)^-1 = solve((I + node x)^T, x^T)^T; x commutes with it.
    const MatrixXd denom = ident + node * x;
    out += weight * denom.partialPivLu().solve(x);
  }
  return out;
}

}  // namespace

MatrixXd expm(const MatrixXd& a) {
  const auto n = a.rows();
  if (n == 0) return a;
  const double norm = norm1(a);
  if (!std::isfinite(norm)) {
    throw Error(ErrorCode::NonFinite, "matrix exponential of non-finite matrix");
  }
  MatrixXd u;
  MatrixXd v;
  int squarings = 0;
  if (norm < kTheta3) {
    pade_low(a, kPade3, u, v);
  } else if (norm < kTheta5) {
    pade_low(a, kPade5, u, v);
  } else if (norm < kTheta7) {
    pade_low(a, kPade7, u, v);
  } else if (norm < kTheta9) {
    pade_low(a, kPade9, u, v);
  } else {
    if (norm > kTheta13) {
      squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
    }
    pade13(a / std::ldexp(1.0, squarings), u, v);
  }
  MatrixXd result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) result = result * result;
  if (!result.allFinite()) {
    throw Error(ErrorCode::NonFinite, "matrix exponential overflowed");
  }
  return result;
}

MatrixXd sqrtm(const MatrixXd& a) {
  const auto n = a.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  MatrixXd m = a;
  MatrixXd y = a;
  constexpr int kMaxIter = 100;
  double previous = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kMaxIter; ++iter) {
    const auto lu = m.partialPivLu();
    const double det = lu.determinant();
    // Determinant scaling speeds up the early iterations.
    double gamma = 1.0;
    if (iter < 10 && det != 0.0 && std::isfinite(det)) {
      gamma = std::pow(std::abs(det), -1.0 / (2.0 * static_cast<double>(n)));
    }
    const MatrixXd m_inv = lu.inverse();
    y = 0.5 * gamma * y * (ident + m_inv / (gamma * gamma));
    m = 0.5 * (ident + 0.5 * (gamma * gamma * m + m_inv / (gamma * gamma)));
    if (!m.allFinite()) break;
    // Quadratic convergence: stop once the residual stalls at roundoff.
    const double residual = (m - ident).lpNorm<Eigen::Infinity>();
    if (residual < 1e-15 * static_cast<double>(n) ||
        (residual < 1e-10 && residual >= previous)) {
      return y;
    }
    previous = residual;
  }
  if (!y.allFinite()) {
    throw Error(ErrorCode::NonFinite, "matrix square root did not converge");
  }
  return y;
}

bool has_nonpositive_real_eigenvalue(const MatrixXd& a) {
  if (a.rows() == 0) return false;
  const Eigen::EigenSolver<MatrixXd> solver(a, false);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (const auto& lambda : solver.eigenvalues()) {
    if (std::abs(lambda.imag()) <= 1e-12 * scale && lambda.real() <= 1e-14 * scale) {
      return true;
    }
  }
  return false;
}

MatrixXd logm(const MatrixXd& a) {
  const auto n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) {
    throw Error(ErrorCode::NonFinite, "matrix logarithm of non-finite matrix");
  }
  if (has_nonpositive_real_eigenvalue(a)) {
    throw Error(ErrorCode::NoPrincipalLog,
                "matrix has a real eigenvalue <= 0; principal logarithm undefined");
  }
  const MatrixXd ident = MatrixXd::Identity(n, n);
  MatrixXd x = a;
  int roots = 0;
  constexpr double kNearIdentity = 0.25;
  constexpr int kMaxRoots = 60;
  while (norm1(x - ident) > kNearIdentity && roots < kMaxRoots) {
    x = sqrtm(x);
    ++roots;
  }
  MatrixXd result = std::ldexp(1.0, roots) * log1p_pade(x - ident);
  if (!result.allFinite()) {
    throw Error(ErrorCode::NonFinite, "matrix logarithm produced non-finite values");
  }
  return result;
}

double spectral_radius(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  const Eigen::EigenSolver<MatrixXd> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_abscissa(const MatrixXd& a) {
  if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
  const Eigen::EigenSolver<MatrixXd> solver(a, false);
  return solver.eigenvalues().real().maxCoeff();
}

}  // namespace emass

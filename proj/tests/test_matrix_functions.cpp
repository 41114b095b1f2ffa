#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "emass/error.hpp"
#include "emass/matrix_functions.hpp"
#include "test_support.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;

double rel_error(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

TEST(Expm, ZeroIsIdentity) {
  EXPECT_TRUE(expm(MatrixXd::Zero(3, 3)).isApprox(MatrixXd::Identity(3, 3), 0.0));
}

TEST(Expm, DiagonalMatchesScalarExp) {
  MatrixXd d = MatrixXd::Zero(3, 3);
  d.diagonal() << -2.0, 0.5, 3.0;
  const MatrixXd e = expm(d);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e(i, i), std::exp(d(i, i)), 1e-13 * std::exp(3.0));
}

TEST(Expm, NilpotentIsFiniteSeries) {
  MatrixXd n(3, 3);
  n << 0, 1, 2, 0, 0, 3, 0, 0, 0;
  const MatrixXd expected = MatrixXd::Identity(3, 3) + n + 0.5 * n * n;
  EXPECT_LT(rel_error(expm(n), expected), 1e-14);
}

TEST(Expm, AgreesWithEigenAcrossNormRanges) {
  Rng rng(7);
  for (const double scale : {1e-3, 0.1, 1.0, 5.0, 30.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const MatrixXd a = scale * testing::random_matrix(4, 4, rng) / 4.0;
      const MatrixXd reference = a.exp();
      EXPECT_LT(rel_error(expm(a), reference), 1e-11) << "scale " << scale;
    }
  }
}

TEST(Logm, IdentityIsZero) {
  EXPECT_LT(logm(MatrixXd::Identity(3, 3)).norm(), 1e-15);
}

TEST(Logm, InvertsExpm) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd x = testing::random_matrix(3, 3, rng) * 0.4;
    EXPECT_LT(rel_error(logm(expm(x)), x), 1e-10);
  }
}

TEST(Logm, AgreesWithEigen) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = testing::random_spd(3, 0.05, 5.0, rng) + 0.3 * testing::random_matrix(3, 3, rng);
    if (has_nonpositive_real_eigenvalue(a)) continue;
    EXPECT_LT(rel_error(logm(a), MatrixXd(a.log())), 1e-9);
  }
}

TEST(Logm, NegativeEigenvalueHasNoPrincipalLog) {
  MatrixXd a(1, 1);
  a << -0.5;
  try {
    logm(a);
    FAIL() << "expected NO_PRINCIPAL_LOG";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPrincipalLog);
  }
}

TEST(Sqrtm, SquaresBack) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = testing::random_spd(4, 0.01, 10.0, rng) + 0.2 * testing::random_matrix(4, 4, rng);
    if (has_nonpositive_real_eigenvalue(a)) continue;
    const MatrixXd r = sqrtm(a);
    EXPECT_LT(rel_error(r * r, a), 1e-11);
  }
}

TEST(Spectral, RadiusAndAbscissa) {
  MatrixXd a(2, 2);
  a << 0.5, 0.2, 0.0, -0.9;
  EXPECT_NEAR(spectral_radius(a), 0.9, 1e-14);
  EXPECT_NEAR(spectral_abscissa(a), 0.5, 1e-14);
}

}  // namespace
}  // namespace emass

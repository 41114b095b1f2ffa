#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "emass/dataset.hpp"
#include "emass/model.hpp"
#include "emass/rng.hpp"

namespace emass::testing {

/// Random square matrix with spectral radius `radius`.
Eigen::MatrixXd random_stable(int n, double radius, Rng& rng);
/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(int n, double lo, double hi, Rng& rng);
Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng);

/// Participant on the grid t = 0, 1, ..., rows - 1 with the given values.
Participant make_series(const Eigen::MatrixXd& y, const Eigen::MatrixXd& u);

/// Joint-Gaussian reference for the linear state-space model: stacks every
/// state and observation into one Gaussian vector and conditions directly.
struct JointGaussian {
  JointGaussian(const ModelSpec& discrete_spec, const Participant& series);

  /// Log density of the observed cells.
  double log_likelihood() const;
  /// E and Cov of x[k] given the observed cells among the first `upto` rows.
  Eigen::VectorXd mean(int k, int upto) const;
  Eigen::MatrixXd cov(int k, int upto) const;
  /// Cov(x[j], x[k]) given all observed cells.
  Eigen::MatrixXd cross_cov(int j, int k) const;

 private:
  std::vector<Eigen::Index> observed_upto(int upto) const;
  int n_ = 0;
  int rows_ = 0;
  int p_ = 0;
  Eigen::VectorXd state_mean_;
  Eigen::MatrixXd state_cov_;
  Eigen::VectorXd obs_mean_;
  Eigen::MatrixXd obs_cov_;
  Eigen::MatrixXd state_obs_cov_;
  Eigen::VectorXd y_;
  MissingMask missing_;
};

}  // namespace emass::testing

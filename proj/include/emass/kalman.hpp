#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emass/dataset.hpp"
#include "emass/model.hpp"

namespace emass {

/// Per-ping state moments and likelihood terms. Index k is ping k;
/// transition[k] is the state matrix that carried ping k to ping k + 1.
struct FilterResult {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> predicted_mean;
  std::vector<Eigen::MatrixXd> predicted_cov;
  std::vector<Eigen::VectorXd> filtered_mean;
  std::vector<Eigen::MatrixXd> filtered_cov;
  std::vector<double> loglik;
  double log_likelihood = 0.0;
  int missing_handled = 0;
  MissingMask missing;
  std::vector<Eigen::MatrixXd> transition;
  std::vector<double> ess;  // particle filter only
  int resamples = 0;        // particle filter only

  std::size_t size() const { return t.size(); }
};

struct SmoothResult {
  std::vector<Eigen::VectorXd> smoothed_mean;
  std::vector<Eigen::MatrixXd> smoothed_cov;
  /// lag_one_cov[k] = Cov(x[k+1], x[k] | all data)
  std::vector<Eigen::MatrixXd> lag_one_cov;
};

struct UpdateResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double loglik = 0.0;
};

/// One measurement update on the observed rows only (Joseph form, Cholesky
/// of the innovation covariance). Throws SINGULAR_INNOVATION when that
/// covariance is not positive definite or its condition number exceeds 1e12.
UpdateResult kalman_update(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                           const Eigen::MatrixXd& H, const Eigen::MatrixXd& Theta,
                           const Eigen::VectorXd& y);

/// Discrete-time filter: one state transition per row, regardless of t.
FilterResult kalman_filter(const ModelSpec& spec, const Participant& series);

/// Continuous-time filter: each gap t[k] - t[k-1] is discretized exactly.
FilterResult kalman_filter_ct(const ModelSpec& spec, const Participant& series);

/// Dispatches on spec.time_mode.
FilterResult run_kalman(const ModelSpec& spec, const Participant& series);

/// Rauch-Tung-Striebel pass over a finished filter.
SmoothResult kalman_smooth(const FilterResult& filtered);
SmoothResult kalman_smooth(const ModelSpec& spec, const Participant& series);

}  // namespace emass

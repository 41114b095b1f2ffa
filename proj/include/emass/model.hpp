#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace emass {

enum class TimeMode { Discrete, Continuous };

enum class Family { Gaussian, Poisson, GradedResponse, BernoulliLogistic };

enum class Link { Identity, Log };

/// How one observed variable relates to the latent state.
///
/// Gaussian channels read their row of H and the matching block of Theta.
/// The remaining families are driven by a single state (`state_index`):
///   poisson             y ~ Pois(scale * x)        (identity link)
///                       y ~ Pois(scale * exp(x))   (log link)
///   graded_response     P(y > i) = 1 / (1 + exp(-discrimination (x - thresholds[i-1])))
///                       for i = 1..categories-1, y in {1..categories}
///   bernoulli_logistic  P(y = 1) = 1 / (1 + exp(-discrimination (x - difficulty)))
///                       where difficulty is thresholds[0] (0 when absent)
struct MeasurementChannel {
  std::string name;
  Family family = Family::Gaussian;
  int state_index = 0;
  double scale = 1.0;
  Link link = Link::Identity;
  double discrimination = 1.0;
  std::vector<double> thresholds;
  int categories = 2;

  double difficulty() const { return thresholds.empty() ? 0.0 : thresholds.front(); }
};

/// Linear state-space model
///   x[t+1] = A x[t] + G u[t] + e[t],  e ~ N(0, Sigma)
///   y[t]   = H x[t] + v[t],           v ~ N(0, Theta)   (Gaussian channels)
/// In continuous mode A, G and Sigma describe dx = (A x + G u) dt + dW.
struct ModelSpec {
  int n_states = 1;
  int n_obs = 1;
  int n_inputs = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd G;
  Eigen::MatrixXd H;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Theta;
  std::vector<MeasurementChannel> channels;
  /// Absent means "use the default": stationary moments when the dynamics
  /// are stable, otherwise zero mean with a diffuse 1e6 * I covariance.
  std::optional<Eigen::VectorXd> initial_mean;
  std::optional<Eigen::MatrixXd> initial_cov;
  TimeMode time_mode = TimeMode::Discrete;
  std::set<int> random_walk_states;

  bool all_gaussian() const;
  /// Zero-filled, all-Gaussian model of the given dimensions.
  static ModelSpec zeros(int n_states, int n_obs, int n_inputs);
};

struct Issue {
  std::string code;
  std::string message;

  bool operator==(const Issue&) const = default;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const { return errors.empty(); }
  bool has_error(std::string_view code) const;
  bool has_warning(std::string_view code) const;
  bool operator==(const ValidationReport&) const = default;
};

/// Checks dimensions, finiteness, PSD-ness of the covariances, channel
/// parameters and random-walk pinning. Never throws.
ValidationReport validate_model(const ModelSpec& spec);

/// Throws InvalidModel with the first error when the report is not clean.
void require_valid(const ModelSpec& spec);

/// Exact discretization over an interval dt with zero-order hold on u.
ModelSpec discretize(const ModelSpec& spec, double dt);

/// Inverse of discretize: principal logarithm for the drift, and the
/// linear inversions of the input and noise integrals.
ModelSpec to_continuous(const ModelSpec& spec, double dt);

/// The discrete transition triple for one interval of a continuous model.
struct Transition {
  Eigen::MatrixXd A;
  Eigen::MatrixXd G;
  Eigen::MatrixXd Sigma;
};
Transition discretize_transition(const Eigen::MatrixXd& drift,
                                 const Eigen::MatrixXd& input,
                                 const Eigen::MatrixXd& diffusion, double dt);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Zero-input stationary mean and covariance of a discrete model: the cov
/// solves cov = A cov A' + Sigma. Throws NOT_STATIONARY when rho(A) >= 1.
Moments stationary_moments(const ModelSpec& spec);

/// Initial state distribution, with the defaults described on ModelSpec.
Moments initial_state(const ModelSpec& spec);

enum class SamplingAdvice { Adequate, Inadequate };
SamplingAdvice nyquist_check(double process_period, double sampling_interval);

/// Eigenvalue test with tolerance -1e-10 * trace; also requires symmetry.
bool is_symmetric_psd(const Eigen::MatrixXd& m);

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// Symmetric square root factor L with L L' = m for a PSD m (clamps tiny
/// negative eigenvalues to zero).
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& m);

}  // namespace emass

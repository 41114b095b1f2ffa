#include "emass/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emass/error.hpp"
#include "emass/matrix_functions.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kDiffuseVariance = 1e6;

std::string shape(const MatrixXd& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

void check_shape(ValidationReport& report, const char* name, const MatrixXd& m,
                 Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << " is " << shape(m) << ", expected " << rows << "x" << cols;
    report.errors.push_back({"DIMENSION_MISMATCH", msg.str()});
  }
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

VectorXd vec(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

MatrixXd unvec(const VectorXd& v, Eigen::Index n) {
  return Eigen::Map<const MatrixXd>(v.data(), n, n);
}

// Integral of exp(a s) over [0, dt] applied to rhs: upper-right block of
// exp([[a, rhs], [0, 0]] dt).
MatrixXd integrated_exponential(const MatrixXd& a, const MatrixXd& rhs, double dt) {
  const auto n = a.rows();
  const auto m = rhs.cols();
  MatrixXd block = MatrixXd::Zero(n + m, n + m);
  block.topLeftCorner(n, n) = a * dt;
  block.topRightCorner(n, m) = rhs * dt;
  return expm(block).topRightCorner(n, m);
}

bool stable(const ModelSpec& spec) {
  if (!spec.random_walk_states.empty()) return false;
  if (spec.time_mode == TimeMode::Discrete) return spectral_radius(spec.A) < 1.0;
  return spectral_abscissa(spec.A) < 0.0;
}

}  // namespace

bool ModelSpec::all_gaussian() const {
  return std::all_of(channels.begin(), channels.end(), [](const auto& c) {
    return c.family == Family::Gaussian;
  });
}

ModelSpec ModelSpec::zeros(int n_states, int n_obs, int n_inputs) {
  ModelSpec spec;
  spec.n_states = n_states;
  spec.n_obs = n_obs;
  spec.n_inputs = n_inputs;
  spec.A = MatrixXd::Zero(n_states, n_states);
  spec.G = MatrixXd::Zero(n_states, n_inputs);
  spec.H = MatrixXd::Zero(n_obs, n_states);
  spec.Sigma = MatrixXd::Zero(n_states, n_states);
  spec.Theta = MatrixXd::Zero(n_obs, n_obs);
  spec.channels.resize(static_cast<std::size_t>(n_obs));
  for (int j = 0; j < n_obs; ++j) {
    spec.channels[static_cast<std::size_t>(j)].name = "y" + std::to_string(j);
  }
  return spec;
}

bool ValidationReport::has_error(std::string_view code) const {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const Issue& i) { return i.code == code; });
}

bool ValidationReport::has_warning(std::string_view code) const {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const Issue& i) { return i.code == code; });
}

bool is_symmetric_psd(const MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrized(m),
                                                       Eigen::EigenvaluesOnly);
  const double tolerance = -1e-10 * std::abs(m.trace());
  return solver.eigenvalues().minCoeff() >= tolerance;
}

MatrixXd psd_factor(const MatrixXd& m) {
  if (m.size() == 0) return m;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrized(m));
  const VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal();
}

ValidationReport validate_model(const ModelSpec& spec) {
  ValidationReport report;
  const int n = spec.n_states;
  const int p = spec.n_obs;
  const int q = spec.n_inputs;
  if (n < 1 || p < 1 || q < 0) {
    report.errors.push_back({"DIMENSION_MISMATCH",
                             "n_states and n_obs must be >= 1, n_inputs >= 0"});
    return report;
  }
  const std::size_t before = report.errors.size();
  check_shape(report, "A", spec.A, n, n);
  check_shape(report, "G", spec.G, n, q);
  check_shape(report, "H", spec.H, p, n);
  check_shape(report, "Sigma", spec.Sigma, n, n);
  check_shape(report, "Theta", spec.Theta, p, p);
  if (spec.initial_mean && spec.initial_mean->size() != n) {
    report.errors.push_back({"DIMENSION_MISMATCH", "initial_mean has wrong length"});
  }
  if (spec.initial_cov) check_shape(report, "initial_cov", *spec.initial_cov, n, n);
  if (static_cast<int>(spec.channels.size()) != p) {
    report.errors.push_back({"DIMENSION_MISMATCH", "channels must have n_obs entries"});
  }
  if (report.errors.size() != before) return report;

  const auto finite = [&](const char* name, const MatrixXd& m) {
    if (!m.allFinite()) {
      report.errors.push_back({"NON_FINITE", std::string(name) + " has non-finite entries"});
      return false;
    }
    return true;
  };
  const bool finite_a = finite("A", spec.A);
  finite("G", spec.G);
  finite("H", spec.H);
  if (finite("Sigma", spec.Sigma) && !is_symmetric_psd(spec.Sigma)) {
    report.errors.push_back({"NON_PSD_SIGMA", "Sigma is not symmetric positive semidefinite"});
  }
  // Only the Gaussian block of Theta is meaningful.
  std::vector<int> gaussian;
  for (int j = 0; j < p; ++j) {
    if (spec.channels[static_cast<std::size_t>(j)].family == Family::Gaussian) {
      gaussian.push_back(j);
    }
  }
  if (finite("Theta", spec.Theta)) {
    MatrixXd block(gaussian.size(), gaussian.size());
    for (std::size_t a = 0; a < gaussian.size(); ++a) {
      for (std::size_t b = 0; b < gaussian.size(); ++b) {
        block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            spec.Theta(gaussian[a], gaussian[b]);
      }
    }
    if (!is_symmetric_psd(block)) {
      report.errors.push_back({"NON_PSD_THETA",
                               "Theta (Gaussian block) is not symmetric positive semidefinite"});
    }
  }
  if (spec.initial_mean && !spec.initial_mean->allFinite()) {
    report.errors.push_back({"NON_FINITE", "initial_mean has non-finite entries"});
  }
  if (spec.initial_cov && finite("initial_cov", *spec.initial_cov) &&
      !is_symmetric_psd(*spec.initial_cov)) {
    report.errors.push_back({"NON_PSD_INITIAL_COV",
                             "initial_cov is not symmetric positive semidefinite"});
  }

  for (int j = 0; j < p; ++j) {
    const auto& ch = spec.channels[static_cast<std::size_t>(j)];
    const std::string where = "channel " + std::to_string(j) + " (" + ch.name + ")";
    if (ch.family == Family::Gaussian) continue;
    if (ch.state_index < 0 || ch.state_index >= n) {
      report.errors.push_back({"BAD_STATE_INDEX", where + ": state_index out of range"});
    }
    switch (ch.family) {
      case Family::Poisson:
        if (!(ch.scale > 0.0)) {
          report.errors.push_back({"NONPOSITIVE_SCALE", where + ": scale must be > 0"});
        }
        break;
      case Family::GradedResponse:
        if (ch.categories < 2) {
          report.errors.push_back({"CATEGORY_MISMATCH", where + ": categories must be >= 2"});
        } else if (static_cast<int>(ch.thresholds.size()) != ch.categories - 1) {
          report.errors.push_back(
              {"CATEGORY_MISMATCH", where + ": need categories - 1 thresholds"});
        }
        [[fallthrough]];
      case Family::BernoulliLogistic:
        if (!(ch.discrimination > 0.0)) {
          report.errors.push_back(
              {"NONPOSITIVE_DISCRIMINATION", where + ": discrimination must be > 0"});
        }
        for (std::size_t i = 1; i < ch.thresholds.size(); ++i) {
          if (!(ch.thresholds[i] > ch.thresholds[i - 1])) {
            report.errors.push_back(
                {"THRESHOLDS_NOT_INCREASING", where + ": thresholds must be strictly increasing"});
            break;
          }
        }
        break;
      case Family::Gaussian:
        break;
    }
  }

  for (int s : spec.random_walk_states) {
    if (s < 0 || s >= n) {
      report.errors.push_back({"RANDOM_WALK_INDEX", "random walk state out of range"});
      continue;
    }
    // Discrete: x[t+1] = x[t] + e. Continuous: zero drift row.
    const double diagonal = spec.time_mode == TimeMode::Discrete ? 1.0 : 0.0;
    bool pinned = spec.A(s, s) == diagonal;
    for (int c = 0; c < n; ++c) {
      if (c != s && spec.A(s, c) != 0.0) pinned = false;
    }
    if (!pinned) {
      report.errors.push_back({"RANDOM_WALK_VIOLATION",
                               "state " + std::to_string(s) +
                                   " is flagged as a random walk but its row of A is not pinned"});
    }
  }

  if (finite_a && spec.random_walk_states.empty()) {
    if (spec.time_mode == TimeMode::Discrete) {
      const double rho = spectral_radius(spec.A);
      if (rho >= 1.0) {
        report.warnings.push_back({"UNSTABLE_DYNAMICS",
                                   "spectral radius of A is " + std::to_string(rho) + " >= 1"});
      }
    } else {
      const double abscissa = spectral_abscissa(spec.A);
      if (abscissa >= 0.0) {
        report.warnings.push_back({"UNSTABLE_DYNAMICS",
                                   "drift has an eigenvalue with real part " +
                                       std::to_string(abscissa) + " >= 0"});
      }
    }
  }
  return report;
}

void require_valid(const ModelSpec& spec) {
  const auto report = validate_model(spec);
  if (!report.ok()) {
    throw Error(ErrorCode::InvalidModel,
                report.errors.front().code + ": " + report.errors.front().message);
  }
}

Transition discretize_transition(const MatrixXd& drift, const MatrixXd& input,
                                 const MatrixXd& diffusion, double dt) {
  const auto n = drift.rows();
  Transition out;
  // Van Loan: exp([[-A, Q], [0, A']] dt) = [[., F12], [0, F22]] with
  // F22 = exp(A dt)' and Q_d = F22' F12.
  MatrixXd van_loan = MatrixXd::Zero(2 * n, 2 * n);
  van_loan.topLeftCorner(n, n) = -drift * dt;
  van_loan.topRightCorner(n, n) = diffusion * dt;
  van_loan.bottomRightCorner(n, n) = drift.transpose() * dt;
  const MatrixXd big = expm(van_loan);
  out.A = big.bottomRightCorner(n, n).transpose();
  out.Sigma = symmetrized(out.A * big.topRightCorner(n, n));
  out.G = input.cols() > 0 ? integrated_exponential(drift, input, dt)
                           : MatrixXd::Zero(n, 0);
  if (!out.A.allFinite() || !out.Sigma.allFinite() || !out.G.allFinite()) {
    throw Error(ErrorCode::NonFinite, "discretization produced non-finite values");
  }
  return out;
}

ModelSpec discretize(const ModelSpec& spec, double dt) {
  if (spec.time_mode != TimeMode::Continuous) {
    throw Error(ErrorCode::InvalidModel, "discretize requires a continuous-time model");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidModel, "discretize requires dt > 0");
  }
  const auto step = discretize_transition(spec.A, spec.G, spec.Sigma, dt);
  ModelSpec out = spec;
  out.time_mode = TimeMode::Discrete;
  out.A = step.A;
  out.G = step.G;
  out.Sigma = step.Sigma;
  // Random-walk rows are exact: exp of a zero drift row is a unit row.
  for (int s : spec.random_walk_states) {
    out.A.row(s).setZero();
    out.A(s, s) = 1.0;
  }
  return out;
}

ModelSpec to_continuous(const ModelSpec& spec, double dt) {
  if (spec.time_mode != TimeMode::Discrete) {
    throw Error(ErrorCode::InvalidModel, "to_continuous requires a discrete-time model");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidModel, "to_continuous requires dt > 0");
  }
  const auto n = spec.A.rows();
  ModelSpec out = spec;
  out.time_mode = TimeMode::Continuous;
  out.A = logm(spec.A) / dt;
  for (int s : spec.random_walk_states) out.A.row(s).setZero();

  if (spec.G.cols() > 0) {
    const MatrixXd phi = integrated_exponential(out.A, MatrixXd::Identity(n, n), dt);
    out.G = phi.partialPivLu().solve(spec.G);
  }
  // vec(Sigma_d) = int_0^dt exp((A (+) A) s) ds vec(Sigma_c).
  const MatrixXd ident = MatrixXd::Identity(n, n);
  const MatrixXd ksum = kron(ident, out.A) + kron(out.A, ident);
  const MatrixXd kernel =
      integrated_exponential(ksum, MatrixXd::Identity(n * n, n * n), dt);
  out.Sigma = symmetrized(unvec(kernel.partialPivLu().solve(vec(spec.Sigma)), n));
  if (!out.A.allFinite() || !out.G.allFinite() || !out.Sigma.allFinite()) {
    throw Error(ErrorCode::NonFinite, "continuous conversion produced non-finite values");
  }
  return out;
}

Moments stationary_moments(const ModelSpec& spec) {
  if (spec.time_mode != TimeMode::Discrete) {
    throw Error(ErrorCode::InvalidModel, "stationary_moments requires a discrete-time model");
  }
  const auto n = spec.A.rows();
  if (!spec.random_walk_states.empty() || spectral_radius(spec.A) >= 1.0) {
    throw Error(ErrorCode::NotStationary, "spectral radius of A is >= 1");
  }
  const MatrixXd system =
      MatrixXd::Identity(n * n, n * n) - kron(spec.A, spec.A);
  const VectorXd solution = system.partialPivLu().solve(vec(spec.Sigma));
  return {VectorXd::Zero(n), symmetrized(unvec(solution, n))};
}

Moments initial_state(const ModelSpec& spec) {
  const auto n = spec.n_states;
  Moments out;
  if (spec.initial_mean && spec.initial_cov) {
    return {*spec.initial_mean, *spec.initial_cov};
  }
  if (stable(spec)) {
    out = spec.time_mode == TimeMode::Discrete ? stationary_moments(spec)
                                               : stationary_moments(discretize(spec, 1.0));
  } else {
    out.mean = VectorXd::Zero(n);
    out.cov = kDiffuseVariance * MatrixXd::Identity(n, n);
  }
  if (spec.initial_mean) out.mean = *spec.initial_mean;
  if (spec.initial_cov) out.cov = *spec.initial_cov;
  return out;
}

SamplingAdvice nyquist_check(double process_period, double sampling_interval) {
  if (!(process_period > 0.0) || !(sampling_interval > 0.0)) {
    throw Error(ErrorCode::InvalidSchedule, "period and interval must be positive");
  }
  return sampling_interval < process_period / 2.0 ? SamplingAdvice::Adequate
                                                  : SamplingAdvice::Inadequate;
}

}  // namespace emass

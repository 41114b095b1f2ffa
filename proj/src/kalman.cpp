#include "emass/kalman.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "emass/error.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMaxCondition = 1e12;

void require_gaussian(const ModelSpec& spec) {
  if (!spec.all_gaussian()) {
    throw Error(ErrorCode::LikelihoodModeMismatch,
                "Kalman filtering needs all-Gaussian channels; use the particle filter");
  }
}

void check_series(const ModelSpec& spec, const Participant& p) {
  if (p.y.cols() != spec.n_obs || p.missing.cols() != spec.n_obs ||
      p.y.rows() != p.rows() || p.missing.rows() != p.rows()) {
    throw Error(ErrorCode::InvalidModel, "series has " + std::to_string(p.y.cols()) +
                                             " channels, model expects " +
                                             std::to_string(spec.n_obs));
  }
  if (p.u.cols() != spec.n_inputs || p.u.rows() != p.rows()) {
    throw Error(ErrorCode::InvalidModel, "series has " + std::to_string(p.u.cols()) +
                                             " inputs, model expects " +
                                             std::to_string(spec.n_inputs));
  }
}

// transition_for(k) returns the triple carrying ping k - 1 to ping k.
template <typename TransitionFn>
FilterResult run_filter(const ModelSpec& spec, const Participant& series,
                        TransitionFn&& transition_for) {
  require_valid(spec);
  require_gaussian(spec);
  check_series(spec, series);
  const auto rows = series.rows();
  const auto n = spec.n_states;

  FilterResult out;
  out.t = series.t;
  out.missing = series.missing;
  out.predicted_mean.reserve(static_cast<std::size_t>(rows));
  out.predicted_cov.reserve(static_cast<std::size_t>(rows));
  out.filtered_mean.reserve(static_cast<std::size_t>(rows));
  out.filtered_cov.reserve(static_cast<std::size_t>(rows));
  out.loglik.reserve(static_cast<std::size_t>(rows));

  const Moments init = initial_state(spec);
  VectorXd mean = init.mean;
  MatrixXd cov = init.cov;
  std::vector<Eigen::Index> observed;
  for (Eigen::Index k = 0; k < rows; ++k) {
    if (k > 0) {
      const Transition& step = transition_for(k);
      mean = step.A * mean;
      if (spec.n_inputs > 0) mean += step.G * series.u.row(k - 1).transpose();
      cov = symmetrized(step.A * cov * step.A.transpose() + step.Sigma);
      out.transition.push_back(step.A);
    }
    out.predicted_mean.push_back(mean);
    out.predicted_cov.push_back(cov);

    observed.clear();
    for (Eigen::Index j = 0; j < spec.n_obs; ++j) {
      if (!series.missing(k, j)) observed.push_back(j);
    }
    if (observed.size() != static_cast<std::size_t>(spec.n_obs)) ++out.missing_handled;
    double ll = 0.0;
    if (!observed.empty()) {
      const auto m = static_cast<Eigen::Index>(observed.size());
      MatrixXd h(m, n);
      MatrixXd theta(m, m);
      VectorXd y(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const auto ja = observed[static_cast<std::size_t>(a)];
        h.row(a) = spec.H.row(ja);
        y(a) = series.y(k, ja);
        for (Eigen::Index b = 0; b < m; ++b) {
          theta(a, b) = spec.Theta(ja, observed[static_cast<std::size_t>(b)]);
        }
      }
      auto update = kalman_update(mean, cov, h, theta, y);
      mean = std::move(update.mean);
      cov = std::move(update.cov);
      ll = update.loglik;
    }
    out.filtered_mean.push_back(mean);
    out.filtered_cov.push_back(cov);
    out.loglik.push_back(ll);
    out.log_likelihood += ll;
  }
  return out;
}

}  // namespace

UpdateResult kalman_update(const VectorXd& mean, const MatrixXd& cov, const MatrixXd& H,
                           const MatrixXd& Theta, const VectorXd& y) {
  const auto n = mean.size();
  const auto m = y.size();
  const MatrixXd ph = cov * H.transpose();
  const MatrixXd innovation_cov = symmetrized(H * ph + Theta);
  const Eigen::LLT<MatrixXd> chol(innovation_cov);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  const VectorXd diag = chol.matrixL().toDenseMatrix().diagonal();
  const double ratio = diag.maxCoeff() / diag.minCoeff();
  if (!(diag.minCoeff() > 0.0) || !(ratio * ratio <= kMaxCondition)) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is numerically singular");
  }
  const VectorXd residual = y - H * mean;
  // K = P H' S^-1
  const MatrixXd gain = chol.solve(ph.transpose()).transpose();
  UpdateResult out;
  out.mean = mean + gain * residual;
  const MatrixXd ikh = MatrixXd::Identity(n, n) - gain * H;
  out.cov = symmetrized(ikh * cov * ikh.transpose() + gain * Theta * gain.transpose());
  const double log_det = 2.0 * diag.array().log().sum();
  const double quad = residual.dot(chol.solve(residual));
  out.loglik = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + log_det + quad);
  return out;
}

FilterResult kalman_filter(const ModelSpec& spec, const Participant& series) {
  if (spec.time_mode != TimeMode::Discrete) {
    throw Error(ErrorCode::InvalidModel, "kalman_filter needs a discrete-time model");
  }
  const Transition step{spec.A, spec.G, spec.Sigma};
  return run_filter(spec, series, [&](Eigen::Index) -> const Transition& { return step; });
}

FilterResult kalman_filter_ct(const ModelSpec& spec, const Participant& series) {
  if (spec.time_mode != TimeMode::Continuous) {
    throw Error(ErrorCode::InvalidModel, "kalman_filter_ct needs a continuous-time model");
  }
  for (std::size_t k = 1; k < series.t.size(); ++k) {
    if (!(series.t[k] > series.t[k - 1])) {
      throw Error(ErrorCode::NonMonotoneTime, "timestamps must be strictly increasing");
    }
  }
  std::map<double, Transition> cache;
  return run_filter(spec, series, [&](Eigen::Index k) -> const Transition& {
    const double gap = series.t[static_cast<std::size_t>(k)] - series.t[static_cast<std::size_t>(k - 1)];
    auto it = cache.find(gap);
    if (it == cache.end()) {
      it = cache.emplace(gap, discretize_transition(spec.A, spec.G, spec.Sigma, gap)).first;
      for (int s : spec.random_walk_states) {
        it->second.A.row(s).setZero();
        it->second.A(s, s) = 1.0;
      }
    }
    return it->second;
  });
}

FilterResult run_kalman(const ModelSpec& spec, const Participant& series) {
  return spec.time_mode == TimeMode::Discrete ? kalman_filter(spec, series)
                                              : kalman_filter_ct(spec, series);
}

SmoothResult kalman_smooth(const FilterResult& f) {
  const std::size_t rows = f.size();
  SmoothResult out;
  out.smoothed_mean.resize(rows);
  out.smoothed_cov.resize(rows);
  out.lag_one_cov.resize(rows > 0 ? rows - 1 : 0);
  if (rows == 0) return out;
  out.smoothed_mean[rows - 1] = f.filtered_mean[rows - 1];
  out.smoothed_cov[rows - 1] = f.filtered_cov[rows - 1];
  for (std::size_t k = rows - 1; k-- > 0;) {
    const MatrixXd& a = f.transition[k];
    const MatrixXd& pred = f.predicted_cov[k + 1];
    // J = P_f A' P_pred^-1, via P_pred J' = A P_f.
    const MatrixXd gain =
        pred.ldlt().solve(a * f.filtered_cov[k]).transpose();
    out.smoothed_mean[k] =
        f.filtered_mean[k] + gain * (out.smoothed_mean[k + 1] - f.predicted_mean[k + 1]);
    out.smoothed_cov[k] = symmetrized(
        f.filtered_cov[k] + gain * (out.smoothed_cov[k + 1] - pred) * gain.transpose());
    out.lag_one_cov[k] = out.smoothed_cov[k + 1] * gain.transpose();
  }
  return out;
}

SmoothResult kalman_smooth(const ModelSpec& spec, const Participant& series) {
  return kalman_smooth(run_kalman(spec, series));
}

}  // namespace emass

#include "emass/particle.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "emass/error.hpp"
#include "emass/rng.hpp"
#include "emass/simd/kernels.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Step {
  Transition transition;
  MatrixXd factor;
};

void fill_normals(MatrixXd& z, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = normal(rng);
  }
}

// Systematic resampling: one uniform, N evenly spaced pointers.
std::vector<Eigen::Index> systematic_indices(const VectorXd& weights, Rng& rng) {
  const auto n = weights.size();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double start = uniform(rng);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  double cumulative = weights(0);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pointer = (static_cast<double>(i) + start) / static_cast<double>(n);
    while (pointer > cumulative && j < n - 1) cumulative += weights(++j);
    idx[static_cast<std::size_t>(i)] = j;
  }
  return idx;
}

void weighted_moments(const simd::KernelTable& k, const VectorXd& w, const MatrixXd& x,
                      VectorXd& mean, MatrixXd& cov) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = x.cols();
  mean.resize(d);
  cov.resize(d, d);
  for (Eigen::Index s = 0; s < d; ++s) mean(s) = k.weighted_sum(w.data(), x.col(s).data(), n);
  for (Eigen::Index s = 0; s < d; ++s) {
    for (Eigen::Index r = 0; r <= s; ++r) {
      const double c =
          k.weighted_cross(w.data(), x.col(s).data(), x.col(r).data(), n) - mean(s) * mean(r);
      cov(s, r) = c;
      cov(r, s) = c;
    }
  }
}

}  // namespace

FilterResult particle_filter(const ModelSpec& spec, const Participant& series,
                             const ParticleOptions& options) {
  if (options.n_particles < 100) {
    throw Error(ErrorCode::ParticlesTooFew,
                "n_particles = " + std::to_string(options.n_particles) + " < 100");
  }
  require_valid(spec);
  if (series.y.cols() != spec.n_obs || series.u.cols() != spec.n_inputs ||
      series.y.rows() != series.rows() || series.u.rows() != series.rows()) {
    throw Error(ErrorCode::InvalidModel, "series shape does not match the model");
  }
  const auto& kern = simd::kernels();
  const Eigen::Index np = options.n_particles;
  const auto count = static_cast<std::size_t>(np);
  const int n = spec.n_states;
  const auto rows = series.rows();

  FilterResult out;
  out.t = series.t;
  out.missing = series.missing;

  Rng rng(options.seed);
  const Moments init = initial_state(spec);
  MatrixXd particles(np, n);
  MatrixXd noise(np, n);
  fill_normals(noise, rng);
  particles = noise * psd_factor(init.cov).transpose();
  particles.rowwise() += init.mean.transpose();

  const Step discrete_step{{spec.A, spec.G, spec.Sigma}, psd_factor(spec.Sigma)};
  std::map<double, Step> cache;
  const auto step_for = [&](Eigen::Index k) -> const Step& {
    if (spec.time_mode == TimeMode::Discrete) return discrete_step;
    const double gap = series.t[static_cast<std::size_t>(k)] - series.t[static_cast<std::size_t>(k - 1)];
    auto it = cache.find(gap);
    if (it == cache.end()) {
      Step s{discretize_transition(spec.A, spec.G, spec.Sigma, gap), MatrixXd()};
      for (int rw : spec.random_walk_states) {
        s.transition.A.row(rw).setZero();
        s.transition.A(rw, rw) = 1.0;
      }
      s.factor = psd_factor(s.transition.Sigma);
      it = cache.emplace(gap, std::move(s)).first;
    }
    return it->second;
  };

  VectorXd log_weights = VectorXd::Constant(np, -std::log(static_cast<double>(np)));
  VectorXd weights = VectorXd::Constant(np, 1.0 / static_cast<double>(np));
  VectorXd loglik_terms(np);
  VectorXd combined(np);
  VectorXd mean;
  MatrixXd cov;
  std::vector<int> gaussian_obs;

  for (Eigen::Index k = 0; k < rows; ++k) {
    if (k > 0) {
      const Step& step = step_for(k);
      fill_normals(noise, rng);
      MatrixXd next = particles * step.transition.A.transpose() + noise * step.factor.transpose();
      if (spec.n_inputs > 0) {
        const VectorXd drive = step.transition.G * series.u.row(k - 1).transpose();
        next.rowwise() += drive.transpose();
      }
      particles = std::move(next);
      out.transition.push_back(step.transition.A);
    }
    weighted_moments(kern, weights, particles, mean, cov);
    out.predicted_mean.push_back(mean);
    out.predicted_cov.push_back(cov);

    loglik_terms.setZero();
    double constant = 0.0;
    gaussian_obs.clear();
    bool any_missing = false;
    for (int j = 0; j < spec.n_obs; ++j) {
      if (series.missing(k, j)) {
        any_missing = true;
        continue;
      }
      const auto& ch = spec.channels[static_cast<std::size_t>(j)];
      const double y = series.y(k, j);
      const double* x = ch.family == Family::Gaussian ? nullptr : particles.col(ch.state_index).data();
      switch (ch.family) {
        case Family::Gaussian:
          gaussian_obs.push_back(j);
          break;
        case Family::Poisson: {
          if (!(y >= 0.0) || y != std::floor(y)) {
            throw Error(ErrorCode::InvalidModel, "Poisson observation is not a count");
          }
          const double log_factorial = std::lgamma(y + 1.0);
          if (ch.link == Link::Identity) {
            kern.add_poisson_identity(loglik_terms.data(), x, count, y, ch.scale, log_factorial);
          } else {
            kern.add_poisson_log(loglik_terms.data(), x, count, y, ch.scale, log_factorial);
          }
          break;
        }
        case Family::GradedResponse: {
          const int c = static_cast<int>(y);
          if (static_cast<double>(c) != y || c < 1 || c > ch.categories) {
            throw Error(ErrorCode::InvalidModel, "ordinal observation outside 1..K");
          }
          const double a = ch.discrimination;
          const bool has_lower = c >= 2;
          const bool has_upper = c <= ch.categories - 1;
          const auto idx = static_cast<std::size_t>(c);
          if (has_lower) {
            kern.add_log_sigmoid(loglik_terms.data(), x, count, a, -a * ch.thresholds[idx - 2]);
          }
          if (has_upper) {
            kern.add_log_sigmoid(loglik_terms.data(), x, count, -a, a * ch.thresholds[idx - 1]);
          }
          if (has_lower && has_upper) {
            // sigmoid(p) - sigmoid(q) = sigmoid(p) sigmoid(-q) (1 - exp(q - p)), p - q constant.
            const double gap = a * (ch.thresholds[idx - 1] - ch.thresholds[idx - 2]);
            constant += std::log(-std::expm1(-gap));
          }
          break;
        }
        case Family::BernoulliLogistic: {
          if (y != 0.0 && y != 1.0) {
            throw Error(ErrorCode::InvalidModel, "binary observation must be 0 or 1");
          }
          const double a = ch.discrimination;
          const double b = ch.difficulty();
          if (y == 1.0) {
            kern.add_log_sigmoid(loglik_terms.data(), x, count, a, -a * b);
          } else {
            kern.add_log_sigmoid(loglik_terms.data(), x, count, -a, a * b);
          }
          break;
        }
      }
    }
    if (!gaussian_obs.empty()) {
      const auto m = static_cast<Eigen::Index>(gaussian_obs.size());
      MatrixXd h(m, n);
      MatrixXd theta(m, m);
      VectorXd y(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const auto ja = gaussian_obs[static_cast<std::size_t>(a)];
        h.row(a) = spec.H.row(ja);
        y(a) = series.y(k, ja);
        for (Eigen::Index b = 0; b < m; ++b) {
          theta(a, b) = spec.Theta(ja, gaussian_obs[static_cast<std::size_t>(b)]);
        }
      }
      const Eigen::LLT<MatrixXd> chol(theta);
      if (chol.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularInnovation,
                    "particle filter needs a positive definite Gaussian measurement covariance");
      }
      const MatrixXd lower = chol.matrixL();
      // Whitened predictions and observations: L^-1 (y - H x).
      const MatrixXd means =
          lower.triangularView<Eigen::Lower>().solve((particles * h.transpose()).transpose()).transpose();
      const VectorXd target = lower.triangularView<Eigen::Lower>().solve(y);
      const double log_norm = -0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi) -
                              lower.diagonal().array().log().sum();
      for (Eigen::Index a = 0; a < m; ++a) {
        kern.add_gaussian(loglik_terms.data(), means.col(a).data(), count, target(a), 1.0,
                          a == 0 ? log_norm : 0.0);
      }
    }
    if (any_missing) ++out.missing_handled;

    combined = log_weights + loglik_terms;
    const double peak = kern.max_value(combined.data(), count);
    if (!std::isfinite(peak)) {
      throw Error(ErrorCode::DegenerateWeights,
                  "all particle weights vanished at ping " + std::to_string(k));
    }
    const double total = kern.exp_shifted(weights.data(), combined.data(), count, peak);
    const double ll = peak + std::log(total) + constant;
    weights /= total;
    log_weights = combined.array() - (peak + std::log(total));
    out.loglik.push_back(ll);
    out.log_likelihood += ll;

    weighted_moments(kern, weights, particles, mean, cov);
    out.filtered_mean.push_back(mean);
    out.filtered_cov.push_back(cov);

    const double ess = 1.0 / kern.sum_squares(weights.data(), count);
    out.ess.push_back(ess);
    if (ess < options.ess_fraction * static_cast<double>(np)) {
      const auto idx = systematic_indices(weights, rng);
      MatrixXd resampled(np, n);
      for (Eigen::Index i = 0; i < np; ++i) {
        resampled.row(i) = particles.row(idx[static_cast<std::size_t>(i)]);
      }
      particles = std::move(resampled);
      weights.setConstant(1.0 / static_cast<double>(np));
      log_weights.setConstant(-std::log(static_cast<double>(np)));
      ++out.resamples;
    }
  }
  return out;
}

}  // namespace emass

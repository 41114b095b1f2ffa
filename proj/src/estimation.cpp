#include "emass/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "emass/error.hpp"
#include "emass/kalman.hpp"
#include "emass/matrix_functions.hpp"
#include "emass/particle.hpp"
#include "emass/rng.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr ParamMatrix kAllMatrices[] = {ParamMatrix::A, ParamMatrix::G, ParamMatrix::H,
                                        ParamMatrix::Sigma, ParamMatrix::Theta};

bool is_covariance(ParamMatrix which) {
  return which == ParamMatrix::Sigma || which == ParamMatrix::Theta;
}

const char* matrix_name(ParamMatrix which) {
  switch (which) {
    case ParamMatrix::A: return "A";
    case ParamMatrix::G: return "G";
    case ParamMatrix::H: return "H";
    case ParamMatrix::Sigma: return "Sigma";
    case ParamMatrix::Theta: return "Theta";
  }
  return "?";
}

MatrixXd& matrix_of(ModelSpec& spec, ParamMatrix which) {
  switch (which) {
    case ParamMatrix::A: return spec.A;
    case ParamMatrix::G: return spec.G;
    case ParamMatrix::H: return spec.H;
    case ParamMatrix::Sigma: return spec.Sigma;
    case ParamMatrix::Theta: return spec.Theta;
  }
  return spec.A;
}

const MatrixXd& matrix_of(const ModelSpec& spec, ParamMatrix which) {
  return matrix_of(const_cast<ModelSpec&>(spec), which);
}

// Lower factor L with L L' = m; zero pivots (singular PSD input) give zero
// columns instead of failing.
MatrixXd lower_factor(const MatrixXd& m) {
  const auto n = m.rows();
  MatrixXd l = MatrixXd::Zero(n, n);
  const double tiny = 1e-14 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= tiny) continue;
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;
}

// Internal scale of a stored value: log for covariance-factor diagonals.
bool log_scaled(ParamMatrix which, Eigen::Index row, Eigen::Index col) {
  return is_covariance(which) && row == col;
}

double to_internal(ParamMatrix which, Eigen::Index row, Eigen::Index col, double value) {
  if (!log_scaled(which, row, col)) return value;
  return value > 0.0 ? std::log(value) : 0.0;
}

double from_internal(ParamMatrix which, Eigen::Index row, Eigen::Index col, double theta) {
  return log_scaled(which, row, col) ? std::exp(theta) : theta;
}

}  // namespace

ParameterMap::ParameterMap(const ModelSpec& spec) {
  for (const auto which : kAllMatrices) {
    MatrixXd values = matrix_of(spec, which);
    if (is_covariance(which)) values = lower_factor(symmetrized(values));
    auto& grid = entries_[which];
    grid.assign(static_cast<std::size_t>(values.rows()),
                std::vector<ParamEntry>(static_cast<std::size_t>(values.cols())));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      for (Eigen::Index j = 0; j < values.cols(); ++j) {
        grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value = values(i, j);
      }
    }
  }
  apply_random_walk(spec.random_walk_states, spec.time_mode);
}

Eigen::Index ParameterMap::rows(ParamMatrix which) const {
  const auto it = entries_.find(which);
  return it == entries_.end() ? 0 : static_cast<Eigen::Index>(it->second.size());
}

Eigen::Index ParameterMap::cols(ParamMatrix which) const {
  const auto it = entries_.find(which);
  return it == entries_.end() || it->second.empty()
             ? 0
             : static_cast<Eigen::Index>(it->second.front().size());
}

ParamEntry& ParameterMap::at(ParamMatrix which, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || col < 0 || row >= rows(which) || col >= cols(which)) {
    throw Error(ErrorCode::InvalidTemplate, std::string("entry (") + std::to_string(row) + ", " +
                                                std::to_string(col) + ") is outside " +
                                                matrix_name(which));
  }
  return entries_[which][static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
}

const ParamEntry& ParameterMap::at(ParamMatrix which, Eigen::Index row, Eigen::Index col) const {
  return const_cast<ParameterMap*>(this)->at(which, row, col);
}

void ParameterMap::set_free(ParamMatrix which, Eigen::Index row, Eigen::Index col) {
  auto& e = at(which, row, col);
  e.status = ParamStatus::Free;
  e.group.clear();
  reindex();
}

void ParameterMap::set_fixed(ParamMatrix which, Eigen::Index row, Eigen::Index col, double value) {
  auto& e = at(which, row, col);
  e.status = ParamStatus::Fixed;
  e.value = value;
  e.group.clear();
  reindex();
}

void ParameterMap::set_tied(ParamMatrix which, Eigen::Index row, Eigen::Index col,
                            const std::string& group) {
  if (group.empty()) throw Error(ErrorCode::InvalidTemplate, "empty tie group name");
  auto& e = at(which, row, col);
  e.status = ParamStatus::Tied;
  e.group = group;
  reindex();
}

void ParameterMap::free_all(ParamMatrix which) {
  for (Eigen::Index i = 0; i < rows(which); ++i) {
    for (Eigen::Index j = 0; j < cols(which); ++j) {
      if (is_covariance(which) && j > i) continue;
      auto& e = at(which, i, j);
      e.status = ParamStatus::Free;
      e.group.clear();
    }
  }
  reindex();
}

void ParameterMap::apply_random_walk(const std::set<int>& states, TimeMode mode) {
  const double diagonal = mode == TimeMode::Discrete ? 1.0 : 0.0;
  for (const int s : states) {
    if (s < 0 || s >= rows(ParamMatrix::A)) continue;
    for (Eigen::Index j = 0; j < cols(ParamMatrix::A); ++j) {
      auto& e = at(ParamMatrix::A, s, j);
      e.status = ParamStatus::Fixed;
      e.value = j == s ? diagonal : 0.0;
      e.group.clear();
    }
  }
  reindex();
}

void ParameterMap::reindex() {
  slots_.clear();
  std::map<std::string, std::size_t> group_slot;
  for (const auto which : kAllMatrices) {
    for (Eigen::Index i = 0; i < rows(which); ++i) {
      for (Eigen::Index j = 0; j < cols(which); ++j) {
        if (is_covariance(which) && j > i) continue;
        const auto& e = entries_[which][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (e.status == ParamStatus::Free) {
          slots_.push_back({Slot{which, i, j}});
        } else if (e.status == ParamStatus::Tied) {
          const auto [it, inserted] = group_slot.emplace(e.group, slots_.size());
          if (inserted) slots_.emplace_back();
          slots_[it->second].push_back(Slot{which, i, j});
        }
      }
    }
  }
}

int ParameterMap::n_free() const { return static_cast<int>(slots_.size()); }

Eigen::VectorXd ParameterMap::initial_vector() const {
  VectorXd theta(n_free());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    double sum = 0.0;
    for (const auto& slot : slots_[s]) {
      sum += to_internal(slot.which, slot.row, slot.col, at(slot.which, slot.row, slot.col).value);
    }
    theta[static_cast<Eigen::Index>(s)] = sum / static_cast<double>(slots_[s].size());
  }
  return theta;
}

ModelSpec ParameterMap::apply(const ModelSpec& base, const Eigen::VectorXd& theta) const {
  if (theta.size() != n_free()) {
    throw Error(ErrorCode::InvalidTemplate, "parameter vector has the wrong length");
  }
  ModelSpec spec = base;
  std::map<ParamMatrix, MatrixXd> values;
  for (const auto which : kAllMatrices) {
    MatrixXd m(rows(which), cols(which));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = (is_covariance(which) && j > i) ? 0.0 : at(which, i, j).value;
      }
    }
    values[which] = std::move(m);
  }
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    for (const auto& slot : slots_[s]) {
      values[slot.which](slot.row, slot.col) =
          from_internal(slot.which, slot.row, slot.col, theta[static_cast<Eigen::Index>(s)]);
    }
  }
  for (const auto which : kAllMatrices) {
    const MatrixXd& m = values[which];
    matrix_of(spec, which) = is_covariance(which) ? MatrixXd(m * m.transpose()) : m;
  }
  return spec;
}

Eigen::VectorXd ParameterMap::extract(const ModelSpec& spec) const {
  std::map<ParamMatrix, MatrixXd> values;
  for (const auto which : kAllMatrices) {
    const MatrixXd& m = matrix_of(spec, which);
    if (m.rows() != rows(which) || m.cols() != cols(which)) {
      throw Error(ErrorCode::InvalidTemplate, std::string("shape of ") + matrix_name(which) +
                                                  " does not match the parameter map");
    }
    values[which] = is_covariance(which) ? lower_factor(symmetrized(m)) : m;
  }
  VectorXd theta(n_free());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    double sum = 0.0;
    for (const auto& slot : slots_[s]) {
      sum += to_internal(slot.which, slot.row, slot.col, values[slot.which](slot.row, slot.col));
    }
    theta[static_cast<Eigen::Index>(s)] = sum / static_cast<double>(slots_[s].size());
  }
  return theta;
}

InformationCriteria information_criteria(double log_likelihood, int k, long n_obs_used) {
  if (k < 0) throw Error(ErrorCode::InvalidModel, "k must be >= 0");
  if (n_obs_used < 1) throw Error(ErrorCode::InvalidModel, "n_obs_used must be >= 1");
  return {2.0 * k - 2.0 * log_likelihood,
          k * std::log(static_cast<double>(n_obs_used)) - 2.0 * log_likelihood};
}

EmaDataset apply_disturbances(const EmaDataset& data, const std::vector<DisturbanceEvent>& events,
                              int n_inputs) {
  if (events.empty()) return data;
  EmaDataset out = data;
  const auto width = std::max<Eigen::Index>(n_inputs, data.n_inputs());
  for (auto i = data.n_inputs(); i < width; ++i) {
    out.input_names.push_back("d" + std::to_string(i));
  }
  std::set<int> slots;
  for (const auto& e : events) {
    if (e.input_slot < 0 || e.input_slot >= width) {
      throw Error(ErrorCode::InvalidTemplate,
                  "disturbance input_slot " + std::to_string(e.input_slot) + " out of range");
    }
    slots.insert(e.input_slot);
  }
  for (auto& p : out.participants) {
    const auto old = p.u.cols();
    p.u.conservativeResize(p.rows(), width);
    if (width > old) p.u.rightCols(width - old).setZero();
    const MatrixXd coded = encode_disturbance(events, p.t, static_cast<int>(width));
    for (const int s : slots) p.u.col(s) = coded.col(s);
  }
  return out;
}

namespace {

void check_data(const ModelSpec& spec, const EmaDataset& data) {
  if (data.participants.empty()) throw Error(ErrorCode::InvalidModel, "dataset is empty");
  if (data.n_obs() != spec.n_obs) {
    throw Error(ErrorCode::InvalidModel, "dataset has " + std::to_string(data.n_obs()) +
                                             " channels, model expects " +
                                             std::to_string(spec.n_obs));
  }
  if (data.n_inputs() != spec.n_inputs) {
    throw Error(ErrorCode::InvalidModel, "dataset has " + std::to_string(data.n_inputs()) +
                                             " inputs, model expects " +
                                             std::to_string(spec.n_inputs));
  }
}

double participant_loglik(const ModelSpec& spec, const Participant& p, std::size_t index,
                          const FitOptions& options) {
  if (options.likelihood == LikelihoodKind::Kalman) return run_kalman(spec, p).log_likelihood;
  ParticleOptions po;
  po.n_particles = options.n_particles;
  po.seed = derive_seed(options.seed, index, 3);
  return particle_filter(spec, p, po).log_likelihood;
}

// Participants are paired with their index in the source dataset so that the
// particle streams do not depend on the fitting mode.
struct Series {
  const Participant* participant;
  std::size_t index;
};

double total_loglik(const ModelSpec& spec, const std::vector<Series>& series,
                    const FitOptions& options) {
  double sum = 0.0;
  for (const auto& s : series) sum += participant_loglik(spec, *s.participant, s.index, options);
  return sum;
}

// Negative log-likelihood; +inf where the model cannot be evaluated.
/// Runs body(0), ..., body(n - 1) on up to `threads` workers (0 = every
/// core). Each call writes only its own slot; the lowest-index failure is
/// rethrown, so the outcome matches a serial loop.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t cap = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(n, cap);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Objective {
 public:
  Objective(const ModelTemplate& model, const std::vector<Series>& series, const FitOptions& options)
      : model_(model), series_(series), options_(options) {}

  double operator()(const VectorXd& theta) const {
    try {
      const ModelSpec spec = model_.params.apply(model_.spec, theta);
      const double ll = total_loglik(spec, series_, options_);
      return std::isfinite(ll) ? -ll : kInf;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::LikelihoodModeMismatch) throw;
      return kInf;
    }
  }

  VectorXd gradient(const VectorXd& theta) const {
    VectorXd g(theta.size());
    VectorXd x = theta;
    const double f0 = (*this)(theta);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
      x[i] = theta[i] + h;
      const double fp = (*this)(x);
      x[i] = theta[i] - h;
      const double fm = (*this)(x);
      x[i] = theta[i];
      if (std::isfinite(fp) && std::isfinite(fm)) {
        g[i] = (fp - fm) / (2.0 * h);
      } else if (std::isfinite(fp)) {
        g[i] = (fp - f0) / h;
      } else if (std::isfinite(fm)) {
        g[i] = (f0 - fm) / h;
      } else {
        g[i] = 0.0;
      }
    }
    return g;
  }

 private:
  const ModelTemplate& model_;
  const std::vector<Series>& series_;
  const FitOptions& options_;
};

struct Minimum {
  VectorXd x;
  double f = kInf;
  double gradient_norm = kInf;
  int iterations = 0;
  bool converged = false;
};

// BFGS on the inverse Hessian with Armijo backtracking.
Minimum minimize(const Objective& objective, VectorXd x, const FitOptions& options) {
  Minimum out;
  double f = objective(x);
  if (!std::isfinite(f)) {
    out.x = x;
    return out;
  }
  VectorXd g = objective.gradient(x);
  const auto n = x.size();
  MatrixXd hinv = MatrixXd::Identity(n, n);
  bool fresh = true;
  bool line_search_ok = true;
  int stalled = 0;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    if (g.norm() < options.tol) break;
    VectorXd d = -hinv * g;
    if (!(g.dot(d) < 0.0)) {
      hinv.setIdentity();
      fresh = true;
      d = -g;
    }
    const double max_step = 10.0;
    if (d.norm() > max_step) d *= max_step / d.norm();
    const double slope = g.dot(d);
    double alpha = 1.0;
    bool found = false;
    VectorXd x_next;
    double f_next = kInf;
    for (int k = 0; k < 60; ++k) {
      x_next = x + alpha * d;
      f_next = objective(x_next);
      if (std::isfinite(f_next) && f_next <= f + 1e-4 * alpha * slope) {
        found = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!found) {
      if (!fresh) {
        hinv.setIdentity();
        fresh = true;
        continue;
      }
      line_search_ok = false;
      break;
    }
    const VectorXd g_next = objective.gradient(x_next);
    const VectorXd s = x_next - x;
    const VectorXd y = g_next - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const MatrixXd left = MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
      fresh = false;
    }
    stalled = (f - f_next) <= 1e-14 * (1.0 + std::abs(f)) ? stalled + 1 : 0;
    x = x_next;
    f = f_next;
    g = g_next;
    if (stalled >= 3) break;
  }
  out.x = x;
  out.f = f;
  out.gradient_norm = g.norm();
  out.iterations = it;
  out.converged = line_search_ok && out.gradient_norm < options.tol;
  return out;
}

// Lag-1 regression on the state proxy pinv(H) y over complete consecutive
// pairs; Sigma and Theta split the residual and marginal variances.
std::optional<ModelSpec> heuristic_start(const ModelSpec& spec, const std::vector<Series>& series) {
  std::vector<Eigen::Index> gaussian;
  for (std::size_t j = 0; j < spec.channels.size(); ++j) {
    if (spec.channels[j].family == Family::Gaussian) gaussian.push_back(static_cast<Eigen::Index>(j));
  }
  if (gaussian.empty()) return std::nullopt;
  const auto n = spec.n_states;
  const auto m = static_cast<Eigen::Index>(gaussian.size());
  MatrixXd hg(m, n);
  for (Eigen::Index r = 0; r < m; ++r) hg.row(r) = spec.H.row(gaussian[static_cast<std::size_t>(r)]);
  if (hg.isZero()) return std::nullopt;
  const MatrixXd pinv = hg.completeOrthogonalDecomposition().pseudoInverse();

  std::vector<VectorXd> prev;
  std::vector<VectorXd> next;
  std::vector<double> gaps;
  VectorXd y_sum = VectorXd::Zero(m);
  VectorXd y_sq = VectorXd::Zero(m);
  long y_count = 0;
  for (const auto& s : series) {
    const Participant& p = *s.participant;
    std::optional<VectorXd> last;
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      bool complete = true;
      VectorXd y(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto j = gaussian[static_cast<std::size_t>(r)];
        complete = complete && !p.missing(k, j);
        y[r] = p.y(k, j);
      }
      if (!complete) {
        last.reset();
        continue;
      }
      y_sum += y;
      y_sq += y.cwiseAbs2();
      ++y_count;
      VectorXd z = pinv * y;
      if (last) {
        prev.push_back(*last);
        next.push_back(z);
        gaps.push_back(p.t[static_cast<std::size_t>(k)] - p.t[static_cast<std::size_t>(k - 1)]);
      }
      last = std::move(z);
    }
  }
  const auto pairs = static_cast<Eigen::Index>(prev.size());
  if (pairs < n + 2) return std::nullopt;
  MatrixXd zx(pairs, n);
  MatrixXd zy(pairs, n);
  for (Eigen::Index k = 0; k < pairs; ++k) {
    zx.row(k) = prev[static_cast<std::size_t>(k)].transpose();
    zy.row(k) = next[static_cast<std::size_t>(k)].transpose();
  }
  zx.rowwise() -= zx.colwise().mean();
  zy.rowwise() -= zy.colwise().mean();
  const MatrixXd sxx = zx.transpose() * zx;
  if (sxx.determinant() <= 0.0) return std::nullopt;
  MatrixXd a = (sxx.ldlt().solve(zx.transpose() * zy)).transpose();
  const double rho = spectral_radius(a);
  if (rho >= 0.95) a *= 0.9 / rho;
  const MatrixXd resid = zy - zx * a.transpose();
  const MatrixXd resid_cov = resid.transpose() * resid / static_cast<double>(pairs);

  ModelSpec start = spec;
  start.Sigma = symmetrized(0.5 * resid_cov) + 1e-4 * MatrixXd::Identity(n, n);
  start.A = a;
  if (spec.time_mode == TimeMode::Continuous) {
    std::vector<double> sorted = gaps;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                     sorted.end());
    const double dt = sorted[sorted.size() / 2];
    if (!(dt > 0.0)) return std::nullopt;
    try {
      start.A = logm(a) / dt;
    } catch (const Error&) {
      return std::nullopt;
    }
    start.Sigma /= dt;
  }
  for (const int s : spec.random_walk_states) {
    start.A.row(s).setZero();
    if (spec.time_mode == TimeMode::Discrete) start.A(s, s) = 1.0;
  }
  const VectorXd mean = y_sum / static_cast<double>(y_count);
  const VectorXd var = y_sq / static_cast<double>(y_count) - mean.cwiseAbs2();
  start.Theta = spec.Theta;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto j = gaussian[static_cast<std::size_t>(r)];
    start.Theta.row(j).setZero();
    start.Theta.col(j).setZero();
    start.Theta(j, j) = std::max(0.5 * var[r], 1e-4);
  }
  return start;
}

FitResult fit_series(const ModelTemplate& model, const std::vector<Series>& series,
                     long n_obs_used, const FitOptions& options) {
  const int k = model.params.n_free();
  const Objective objective(model, series, options);

  VectorXd base = model.params.initial_vector();
  if (const auto start = heuristic_start(model.spec, series)) {
    const VectorXd guess = model.params.extract(*start);
    if (std::isfinite(objective(guess))) base = guess;
  }

  FitResult best;
  best.n_free = k;
  best.n_obs_used = n_obs_used;
  best.seed = options.seed;
  const int starts = std::max(1, options.n_restarts);
  std::vector<double> start_f(static_cast<std::size_t>(starts));
  std::vector<Minimum> minima(static_cast<std::size_t>(starts));
  parallel_for(static_cast<std::size_t>(starts), options.threads, [&](std::size_t r) {
    VectorXd x0 = base;
    if (r > 0) {
      Rng rng(derive_seed(options.seed, r, 4));
      std::normal_distribution<double> noise(0.0, 0.3);
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] += noise(rng);
    }
    start_f[r] = objective(x0);
    minima[r] = minimize(objective, x0, options);
  });
  double best_f = kInf;
  Minimum best_min;
  for (std::size_t r = 0; r < minima.size(); ++r) {
    best.start_log_likelihoods.push_back(-start_f[r]);
    best.restart_log_likelihoods.push_back(-minima[r].f);
    ++best.n_restarts_used;
    if (minima[r].f < best_f) {
      best_f = minima[r].f;
      best_min = minima[r];
    }
  }
  if (!std::isfinite(best_f)) {
    throw Error(ErrorCode::NonfiniteLikelihood, "log-likelihood is not finite at any start");
  }
  best.spec_hat = model.params.apply(model.spec, best_min.x);
  best.log_likelihood = -best_f;
  best.converged = best_min.converged;
  best.gradient_norm = best_min.gradient_norm;
  best.iterations = best_min.iterations;
  const auto ic = information_criteria(best.log_likelihood, k, std::max(1L, n_obs_used));
  best.aic = ic.aic;
  best.bic = ic.bic;
  return best;
}

void check_template(const ModelTemplate& model, const FitOptions& options) {
  require_valid(model.spec);
  if (options.likelihood == LikelihoodKind::Kalman && !model.spec.all_gaussian()) {
    throw Error(ErrorCode::LikelihoodModeMismatch,
                "Kalman likelihood needs all-Gaussian channels; use the particle likelihood");
  }
}

long observed_cells(const Participant& p) { return static_cast<long>((!p.missing).count()); }

}  // namespace

double log_likelihood(const ModelSpec& spec, const EmaDataset& data, const FitOptions& options) {
  check_data(spec, data);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    sum += participant_loglik(spec, data.participants[i], i, options);
  }
  return sum;
}

std::vector<FitResult> fit(const ModelTemplate& model, const EmaDataset& data, FitMode mode,
                           const FitOptions& options) {
  check_template(model, options);
  if (model.params.n_free() == 0) {
    throw Error(ErrorCode::NoFreeParams, "the template has no free parameters");
  }
  const EmaDataset coded = apply_disturbances(data, model.disturbances, model.spec.n_inputs);
  check_data(model.spec, coded);

  std::vector<FitResult> results;
  if (mode == FitMode::Pooled) {
    std::vector<Series> series;
    for (std::size_t i = 0; i < coded.participants.size(); ++i) {
      series.push_back({&coded.participants[i], i});
    }
    results.push_back(fit_series(model, series, coded.observed_cells(), options));
  } else {
    results.resize(coded.participants.size());
    parallel_for(coded.participants.size(), options.threads, [&](std::size_t i) {
      const Participant& p = coded.participants[i];
      const std::vector<Series> series{{&p, i}};
      results[i] = fit_series(model, series, observed_cells(p), options);
      results[i].participant = p.id;
    });
  }
  return results;
}

FitResult evaluate(const ModelTemplate& model, const EmaDataset& data, const FitOptions& options) {
  check_template(model, options);
  const EmaDataset coded = apply_disturbances(data, model.disturbances, model.spec.n_inputs);
  FitResult r;
  r.spec_hat = model.spec;
  r.log_likelihood = log_likelihood(model.spec, coded, options);
  if (!std::isfinite(r.log_likelihood)) {
    throw Error(ErrorCode::NonfiniteLikelihood, "log-likelihood is not finite");
  }
  r.n_obs_used = coded.observed_cells();
  const auto ic = information_criteria(r.log_likelihood, 0, std::max(1L, r.n_obs_used));
  r.aic = ic.aic;
  r.bic = ic.bic;
  r.converged = true;
  r.gradient_norm = 0.0;
  r.seed = options.seed;
  return r;
}

void rank_rows(std::vector<ComparisonRow>& rows) {
  const auto rank_by = [&](auto criterion, auto assign) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ca = criterion(rows[a]);
      const double cb = criterion(rows[b]);
      const double tol = 1e-9 * std::max({1.0, std::abs(ca), std::abs(cb)});
      if (std::abs(ca - cb) > tol) return ca < cb;
      if (rows[a].k != rows[b].k) return rows[a].k < rows[b].k;
      return a < b;
    });
    for (std::size_t r = 0; r < order.size(); ++r) assign(rows[order[r]], static_cast<int>(r + 1));
  };
  rank_by([](const ComparisonRow& r) { return r.aic; },
          [](ComparisonRow& r, int rank) { r.rank_aic = rank; });
  rank_by([](const ComparisonRow& r) { return r.bic; },
          [](ComparisonRow& r, int rank) { r.rank_bic = rank; });
}

std::vector<ComparisonRow> compare_models(const std::vector<ModelTemplate>& templates,
                                          const EmaDataset& data, const FitOptions& options) {
  if (templates.empty()) throw Error(ErrorCode::InvalidTemplate, "no candidate models");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto& t = templates[i];
    FitResult r = t.params.n_free() == 0 ? evaluate(t, data, options)
                                         : fit(t, data, FitMode::Pooled, options).front();
    ComparisonRow row;
    row.model_id = t.id.empty() ? "model" + std::to_string(i + 1) : t.id;
    row.k = r.n_free;
    row.loglik = r.log_likelihood;
    row.aic = r.aic;
    row.bic = r.bic;
    row.converged = r.converged;
    row.fit = std::move(r);
    rows.push_back(std::move(row));
  }
  rank_rows(rows);
  return rows;
}

std::vector<ComparisonRow> compare_disturbance_codings(
    const ModelTemplate& base, const EmaDataset& data,
    const std::vector<DisturbanceCandidate>& candidates, const FitOptions& options) {
  std::vector<ModelTemplate> templates;
  for (const auto& c : candidates) {
    ModelTemplate t = base;
    t.id = c.id;
    t.disturbances = c.events;
    templates.push_back(std::move(t));
  }
  return compare_models(templates, data, options);
}

void write_comparison_table(const std::vector<ComparisonRow>& rows, std::ostream& out) {
  const auto number = [](double v) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, ptr);
  };
  out << "model_id,k,loglik,aic,bic,rank_aic,rank_bic,converged\n";
  for (const auto& r : rows) {
    out << r.model_id << ',' << r.k << ',' << number(r.loglik) << ',' << number(r.aic) << ','
        << number(r.bic) << ',' << r.rank_aic << ',' << r.rank_bic << ','
        << (r.converged ? "true" : "false") << '\n';
  }
}

EmaDataset split_at_breakpoints(const EmaDataset& data, const std::vector<double>& breakpoints) {
  std::vector<double> cuts = breakpoints;
  std::sort(cuts.begin(), cuts.end());
  EmaDataset out = data;
  out.participants.clear();
  for (const auto& p : data.participants) {
    std::size_t segment = 0;
    Eigen::Index begin = 0;
    const auto flush = [&](Eigen::Index end) {
      if (end > begin) {
        Participant part = p;
        part.id = p.id + "#" + std::to_string(segment);
        part.t.assign(p.t.begin() + begin, p.t.begin() + end);
        part.y = p.y.middleRows(begin, end - begin);
        part.missing = p.missing.middleRows(begin, end - begin);
        part.u = p.u.middleRows(begin, end - begin);
        if (!p.inserted.empty()) {
          part.inserted.assign(p.inserted.begin() + begin, p.inserted.begin() + end);
        }
        out.participants.push_back(std::move(part));
      }
      begin = end;
    };
    for (Eigen::Index k = 0; k < p.rows(); ++k) {
      while (segment < cuts.size() && p.t[static_cast<std::size_t>(k)] >= cuts[segment]) {
        flush(k);
        ++segment;
      }
    }
    flush(p.rows());
  }
  return out;
}

}  // namespace emass

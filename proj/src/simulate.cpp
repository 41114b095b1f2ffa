#include "emass/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "emass/error.hpp"
#include "emass/rng.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

bool in_day_phase(const PingSchedule& s, double t) {
  if (!(s.day_length > 0.0 && s.night_length > 0.0)) return true;
  return std::fmod(t, s.day_length + s.night_length) < s.day_length;
}

std::string participant_id(int index, int count) {
  const int width = std::max(3, static_cast<int>(std::to_string(count).size()));
  std::string digits = std::to_string(index + 1);
  return "p" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

void check_request(const ModelSpec& spec, const SimulationRequest& req) {
  if (spec.time_mode == TimeMode::Discrete && req.schedule.kind != ScheduleKind::Fixed) {
    throw Error(ErrorCode::ScheduleModeMismatch,
                "discrete-time simulation needs a fixed-interval schedule; "
                "use a continuous-time model for irregular pings");
  }
  if (req.n_participants < 1) {
    throw Error(ErrorCode::InvalidScenario, "n_participants must be >= 1");
  }
  for (const auto& trend : req.trends) {
    if (trend.kind != TrendKind::None && trend.coefficients.size() != spec.n_inputs) {
      throw Error(ErrorCode::InvalidScenario,
                  "trend coefficients must have n_inputs = " + std::to_string(spec.n_inputs) +
                      " entries");
    }
  }
  for (const auto& event : req.events) {
    if (event.input_slot < 0 || event.input_slot >= spec.n_inputs) {
      throw Error(ErrorCode::InvalidScenario, "disturbance input_slot out of range");
    }
    if (event.onset < 0.0 || event.onset > req.schedule.horizon) {
      throw Error(ErrorCode::InvalidScenario, "disturbance onset outside the horizon");
    }
    if (event.coding == DisturbanceCoding::GeometricDecay &&
        !(event.decay_ratio > 0.0 && event.decay_ratio < 1.0)) {
      throw Error(ErrorCode::InvalidScenario, "decay_ratio must lie in (0, 1)");
    }
  }
  if (req.regimes) {
    const auto& r = *req.regimes;
    if (r.regimes.size() != r.breakpoints.size() + 1) {
      throw Error(ErrorCode::InvalidScenario, "need one regime per segment (breakpoints + 1)");
    }
    for (std::size_t i = 0; i < r.breakpoints.size(); ++i) {
      if ((i > 0 && !(r.breakpoints[i] > r.breakpoints[i - 1])) || r.breakpoints[i] < 0.0 ||
          r.breakpoints[i] > req.schedule.horizon) {
        throw Error(ErrorCode::InvalidScenario,
                    "breakpoints must be strictly increasing and within the horizon");
      }
    }
    for (const auto& reg : r.regimes) {
      if (reg.A && (reg.A->rows() != spec.n_states || reg.A->cols() != spec.n_states)) {
        throw Error(ErrorCode::InvalidScenario, "regime A override has the wrong shape");
      }
      if (reg.mean_offset && reg.mean_offset->size() != spec.n_states) {
        throw Error(ErrorCode::InvalidScenario, "regime mean_offset has the wrong length");
      }
    }
  }
  if (req.tvp && (req.tvp->row < 0 || req.tvp->row >= spec.n_states || req.tvp->col < 0 ||
                  req.tvp->col >= spec.n_states)) {
    throw Error(ErrorCode::InvalidScenario, "tvp target entry out of range");
  }
}

struct StepNoise {
  Transition transition;
  MatrixXd factor;
};

}  // namespace

bool ClockWindow::contains(double clock) const {
  if (start <= end) return clock >= start && clock < end;
  return clock >= start || clock < end;
}

double ClockWindow::length() const {
  return start <= end ? end - start : 24.0 - start + end;
}

std::size_t RegimeSchedule::regime_at(double t) const {
  std::size_t r = 0;
  while (r < breakpoints.size() && t >= breakpoints[r]) ++r;
  return r;
}

double TvpSchedule::value_at(double t) const {
  return start_value + (end_value - start_value) / (1.0 + std::exp(-steepness * (t - midpoint)));
}

std::vector<double> generate_schedule(const PingSchedule& s, std::uint64_t seed) {
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) {
    throw Error(ErrorCode::EmptySchedule, "horizon admits no pings");
  }
  Rng rng(seed);
  std::vector<double> times;
  switch (s.kind) {
    case ScheduleKind::Fixed:
    case ScheduleKind::Jittered: {
      if (!(s.interval > 0.0)) {
        throw Error(ErrorCode::InvalidSchedule, "interval must be > 0");
      }
      const bool jitter = s.kind == ScheduleKind::Jittered;
      if (jitter && !(s.max_jitter >= 0.0 && s.max_jitter < s.interval / 2.0)) {
        throw Error(ErrorCode::InvalidSchedule, "max_jitter must lie in [0, interval / 2)");
      }
      std::uniform_real_distribution<double> offset(-s.max_jitter, s.max_jitter);
      for (long k = 0;; ++k) {
        const double base = static_cast<double>(k) * s.interval;
        if (base >= s.horizon) break;
        const double t = jitter ? base + offset(rng) : base;
        if (t >= 0.0 && t < s.horizon && in_day_phase(s, base)) times.push_back(t);
      }
      break;
    }
    case ScheduleKind::RandomWindow: {
      if (s.windows.empty() || s.pings_per_day < 1) {
        throw Error(ErrorCode::InvalidSchedule,
                    "random_window needs windows and pings_per_day >= 1");
      }
      double total = 0.0;
      for (const auto& w : s.windows) {
        if (!(w.start >= 0.0 && w.start < 24.0 && w.end >= 0.0 && w.end <= 24.0)) {
          throw Error(ErrorCode::InvalidSchedule, "window clock times must lie in [0, 24]");
        }
        total += w.length();
      }
      if (!(total > 0.0)) throw Error(ErrorCode::InvalidSchedule, "windows are empty");
      std::uniform_real_distribution<double> position(0.0, total);
      const long days = static_cast<long>(std::ceil(s.horizon / 24.0));
      for (long d = 0; d < days; ++d) {
        std::vector<double> day;
        for (int i = 0; i < s.pings_per_day; ++i) {
          double offset = position(rng);
          for (const auto& w : s.windows) {
            if (offset < w.length()) {
              day.push_back(24.0 * static_cast<double>(d) + w.start + offset);
              break;
            }
            offset -= w.length();
          }
        }
        std::sort(day.begin(), day.end());
        for (double t : day) {
          if (t < s.horizon && (times.empty() || t > times.back())) times.push_back(t);
        }
      }
      break;
    }
    case ScheduleKind::EventDriven: {
      if (!(s.event_rate > 0.0)) {
        throw Error(ErrorCode::InvalidSchedule, "event_rate must be > 0");
      }
      std::exponential_distribution<double> gap(s.event_rate);
      for (double t = gap(rng); t < s.horizon; t += gap(rng)) {
        if (in_day_phase(s, t) && (times.empty() || t > times.back())) times.push_back(t);
      }
      break;
    }
  }
  if (times.empty()) throw Error(ErrorCode::EmptySchedule, "schedule produced no pings");
  return times;
}

double trend_value(const TrendSpec& trend, const Participant& p, Eigen::Index k) {
  const double t = p.t[static_cast<std::size_t>(k)];
  switch (trend.kind) {
    case TrendKind::None:
      return 0.0;
    case TrendKind::Linear:
      return static_cast<double>(k + 1);
    case TrendKind::Weekend:
      return trend.days.count(p.weekday(k)) ? 1.0 : 0.0;
    case TrendKind::CustomDummy:
      for (const auto& [a, b] : trend.intervals) {
        if (t >= a && t < b) return 1.0;
      }
      return 0.0;
    case TrendKind::Sinusoid:
      return std::sin(2.0 * std::numbers::pi * t / trend.period + trend.phase);
  }
  return 0.0;
}

MatrixXd encode_disturbance(const std::vector<DisturbanceEvent>& events,
                            const std::vector<double>& timestamps, int n_inputs) {
  const auto rows = static_cast<Eigen::Index>(timestamps.size());
  MatrixXd u = MatrixXd::Zero(rows, n_inputs);
  for (const auto& e : events) {
    if (e.input_slot < 0 || e.input_slot >= n_inputs) {
      throw Error(ErrorCode::InvalidScenario, "disturbance input_slot out of range");
    }
    const auto first = static_cast<Eigen::Index>(
        std::lower_bound(timestamps.begin(), timestamps.end(), e.onset) - timestamps.begin());
    for (Eigen::Index k = first; k < rows; ++k) {
      const auto steps = static_cast<double>(k - first);
      switch (e.coding) {
        case DisturbanceCoding::Pulse:
          if (k == first) u(k, e.input_slot) += e.magnitude;
          break;
        case DisturbanceCoding::Persistent:
          u(k, e.input_slot) += e.magnitude;
          break;
        case DisturbanceCoding::GeometricDecay:
          u(k, e.input_slot) += e.magnitude * std::pow(e.decay_ratio, steps);
          break;
      }
    }
  }
  return u;
}

Simulation simulate(const ModelSpec& spec, const SimulationRequest& req) {
  require_valid(spec);
  check_request(spec, req);
  const int n = spec.n_states;
  const int p = spec.n_obs;
  const int q = spec.n_inputs;

  Simulation out;
  auto& data = out.data;
  for (const auto& ch : spec.channels) data.channel_names.push_back(ch.name);
  for (int i = 0; i < q; ++i) data.input_names.push_back("u" + std::to_string(i));
  switch (req.schedule.kind) {
    case ScheduleKind::Fixed: data.schedule_kind = "fixed"; break;
    case ScheduleKind::Jittered: data.schedule_kind = "jittered"; break;
    case ScheduleKind::RandomWindow: data.schedule_kind = "random_window"; break;
    case ScheduleKind::EventDriven: data.schedule_kind = "event_driven"; break;
  }

  std::vector<int> gaussian;
  for (int j = 0; j < p; ++j) {
    if (spec.channels[static_cast<std::size_t>(j)].family == Family::Gaussian) {
      gaussian.push_back(j);
    }
  }
  const auto g = static_cast<Eigen::Index>(gaussian.size());
  MatrixXd theta_block(g, g);
  MatrixXd h_block(g, n);
  for (Eigen::Index a = 0; a < g; ++a) {
    h_block.row(a) = spec.H.row(gaussian[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < g; ++b) {
      theta_block(a, b) =
          spec.Theta(gaussian[static_cast<std::size_t>(a)], gaussian[static_cast<std::size_t>(b)]);
    }
  }
  const MatrixXd theta_factor = psd_factor(theta_block);
  const Moments init = initial_state(spec);
  const MatrixXd init_factor = psd_factor(init.cov);

  std::map<std::pair<std::size_t, double>, StepNoise> cache;
  const auto step_for = [&](std::size_t regime, double t, double gap) -> StepNoise {
    MatrixXd a = spec.A;
    if (req.regimes && req.regimes->regimes[regime].A) a = *req.regimes->regimes[regime].A;
    if (req.tvp) a(req.tvp->row, req.tvp->col) = req.tvp->value_at(t);
    if (spec.time_mode == TimeMode::Discrete) {
      return {{a, spec.G, spec.Sigma}, MatrixXd()};
    }
    if (!req.tvp) {
      const auto key = std::make_pair(regime, gap);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
      StepNoise step{discretize_transition(a, spec.G, spec.Sigma, gap), MatrixXd()};
      step.factor = psd_factor(step.transition.Sigma);
      return cache.emplace(key, std::move(step)).first->second;
    }
    StepNoise step{discretize_transition(a, spec.G, spec.Sigma, gap), MatrixXd()};
    step.factor = psd_factor(step.transition.Sigma);
    return step;
  };
  const MatrixXd sigma_factor = psd_factor(spec.Sigma);

  for (int i = 0; i < req.n_participants; ++i) {
    Participant part;
    part.id = participant_id(i, req.n_participants);
    part.start_weekday = req.start_weekday;
    part.start_clock = req.start_clock;
    part.seed = derive_seed(req.seed, static_cast<std::uint64_t>(i), 1);
    part.t = generate_schedule(req.schedule, derive_seed(req.seed, static_cast<std::uint64_t>(i), 0));
    const auto rows = part.rows();
    part.inserted.assign(part.t.size(), false);
    part.u = encode_disturbance(req.events, part.t, q);
    for (const auto& trend : req.trends) {
      if (trend.kind == TrendKind::None) continue;
      for (Eigen::Index k = 0; k < rows; ++k) {
        part.u.row(k) += trend_value(trend, part, k) * trend.coefficients.transpose();
      }
    }
    part.y = MatrixXd::Zero(rows, p);
    part.missing = MissingMask::Constant(rows, p, false);

    Rng rng(part.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto draw_normals = [&](Eigen::Index size) {
      VectorXd z(size);
      for (Eigen::Index r = 0; r < size; ++r) z(r) = normal(rng);
      return z;
    };

    MatrixXd states(rows, n);
    VectorXd x;
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double t = part.t[static_cast<std::size_t>(k)];
      const std::size_t regime = req.regimes ? req.regimes->regime_at(t) : 0;
      VectorXd level = VectorXd::Zero(n);
      if (req.regimes && req.regimes->regimes[regime].mean_offset) {
        level = *req.regimes->regimes[regime].mean_offset;
      }
      if (k == 0) {
        x = init.mean + level + init_factor * draw_normals(n);
      } else {
        const double gap = t - part.t[static_cast<std::size_t>(k - 1)];
        const StepNoise step = step_for(regime, t, gap);
        const MatrixXd& factor =
            spec.time_mode == TimeMode::Discrete ? sigma_factor : step.factor;
        const VectorXd drive =
            q > 0 ? VectorXd(step.transition.G * part.u.row(k - 1).transpose())
                  : VectorXd::Zero(n);
        x = level + step.transition.A * (x - level) + drive + factor * draw_normals(n);
      }
      states.row(k) = x.transpose();

      if (g > 0) {
        const VectorXd yg = h_block * x + theta_factor * draw_normals(g);
        for (Eigen::Index a = 0; a < g; ++a) part.y(k, gaussian[static_cast<std::size_t>(a)]) = yg(a);
      }
      for (int j = 0; j < p; ++j) {
        const auto& ch = spec.channels[static_cast<std::size_t>(j)];
        if (ch.family == Family::Gaussian) continue;
        const double s = x(ch.state_index);
        switch (ch.family) {
          case Family::Poisson: {
            const double rate = ch.link == Link::Identity ? ch.scale * s : ch.scale * std::exp(s);
            if (ch.link == Link::Identity && !(rate > 0.0)) {
              throw Error(ErrorCode::NegativeRate,
                          "identity-link Poisson rate " + std::to_string(rate) + " <= 0 for " +
                              part.id + " at t = " + std::to_string(t));
            }
            if (!std::isfinite(rate) || rate > 1e12) {
              throw Error(ErrorCode::NonFinite, "Poisson rate overflowed");
            }
            std::poisson_distribution<long> draw(rate);
            part.y(k, j) = static_cast<double>(draw(rng));
            break;
          }
          case Family::GradedResponse: {
            const double v = uniform(rng);
            int category = 1;
            for (double beta : ch.thresholds) {
              if (v < logistic(ch.discrimination * (s - beta))) ++category;
            }
            part.y(k, j) = category;
            break;
          }
          case Family::BernoulliLogistic: {
            const double v = uniform(rng);
            part.y(k, j) = v < logistic(ch.discrimination * (s - ch.difficulty())) ? 1.0 : 0.0;
            break;
          }
          case Family::Gaussian:
            break;
        }
      }
    }
    data.participants.push_back(std::move(part));
    out.states.push_back(std::move(states));
  }
  return out;
}

}  // namespace emass

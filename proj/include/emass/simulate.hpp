#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "emass/dataset.hpp"
#include "emass/model.hpp"

namespace emass {

/// Clock-time window in hours; start > end wraps past midnight.
struct ClockWindow {
  double start = 0.0;
  double end = 24.0;

  bool contains(double clock) const;
  double length() const;
};

enum class ScheduleKind { Fixed, Jittered, RandomWindow, EventDriven };

struct PingSchedule {
  ScheduleKind kind = ScheduleKind::Fixed;
  double interval = 1.0;        // fixed, jittered
  double max_jitter = 0.0;      // jittered; must stay below interval / 2
  std::vector<ClockWindow> windows;  // random_window
  int pings_per_day = 1;             // random_window
  double event_rate = 1.0;      // event_driven, events per hour
  double horizon = 0.0;         // pings lie in [0, horizon)
  // With both > 0, fixed/jittered/event-driven pings are dropped during the
  // night phase of each (day_length + night_length) cycle starting at t = 0.
  double day_length = 0.0;
  double night_length = 0.0;
};

/// Ping times for one participant. Throws EMPTY_SCHEDULE / INVALID_SCHEDULE.
std::vector<double> generate_schedule(const PingSchedule& schedule, std::uint64_t seed);

enum class TrendKind { None, Linear, Weekend, CustomDummy, Sinusoid };

struct TrendSpec {
  TrendKind kind = TrendKind::None;
  Eigen::VectorXd coefficients;   // length n_inputs: u[t] += coefficients * value(t)
  std::set<int> days;             // weekend: weekdays coded 1 (0 = Monday)
  std::vector<std::pair<double, double>> intervals;  // custom_dummy: [start, end) in t
  double period = 24.0;           // sinusoid, hours
  double phase = 0.0;             // sinusoid, radians
};

/// Value of a trend at row k (linear trends use the 1-based ping index).
double trend_value(const TrendSpec& trend, const Participant& p, Eigen::Index k);

enum class DisturbanceCoding { Pulse, Persistent, GeometricDecay };

struct DisturbanceEvent {
  double onset = 0.0;
  DisturbanceCoding coding = DisturbanceCoding::Pulse;
  double magnitude = 1.0;
  double decay_ratio = 0.5;
  int input_slot = 0;
};

/// T x n_inputs input columns for the events; overlapping events add.
Eigen::MatrixXd encode_disturbance(const std::vector<DisturbanceEvent>& events,
                                   const std::vector<double>& timestamps, int n_inputs);

struct RegimeOverride {
  std::optional<Eigen::MatrixXd> A;
  std::optional<Eigen::VectorXd> mean_offset;
};

/// regimes.size() == breakpoints.size() + 1; regime r applies from the
/// first ping at or after breakpoints[r - 1].
struct RegimeSchedule {
  std::vector<double> breakpoints;
  std::vector<RegimeOverride> regimes;

  std::size_t regime_at(double t) const;
};

/// Sigmoid path for one entry of A:
///   start + (end - start) / (1 + exp(-steepness (t - midpoint))).
struct TvpSchedule {
  int row = 0;
  int col = 0;
  double start_value = 0.0;
  double end_value = 1.0;
  double midpoint = 50.0;
  double steepness = 0.1;

  double value_at(double t) const;
};

struct SimulationRequest {
  PingSchedule schedule;
  std::vector<TrendSpec> trends;
  std::vector<DisturbanceEvent> events;
  std::optional<RegimeSchedule> regimes;
  std::optional<TvpSchedule> tvp;
  int n_participants = 1;
  std::uint64_t seed = 0;
  int start_weekday = 0;
  double start_clock = 0.0;
};

/// Simulated dataset plus the latent path that produced it.
struct Simulation {
  EmaDataset data;
  std::vector<Eigen::MatrixXd> states;  // per participant, T x n_states
};

Simulation simulate(const ModelSpec& spec, const SimulationRequest& request);

inline EmaDataset simulate_dataset(const ModelSpec& spec, const SimulationRequest& request) {
  return simulate(spec, request).data;
}

enum class Mechanism { MCAR, MAR, MNAR, TMAR, ATMAR };

/// Logistic missingness models; the intercept is bisected on the realized
/// data so that the mean masking probability equals `rate`.
///   MAR   logit p = c + slope * z(driver channel, same ping)
///   MNAR  logit p = c + slope * z(the cell itself)
///   TMAR  logit p = c + slope * [clock time in time_pattern]; with
///         window_probability set, in-window cells use that probability
///         and only the out-of-window probability is calibrated
///   ATMAR logit p = c + slope * z(same channel, `lag` pings earlier)
/// z is the channel value standardized over the dataset (0 when unknown).
struct MissingnessSpec {
  Mechanism mechanism = Mechanism::MCAR;
  double rate = 0.0;
  int driver = 0;
  double slope = 1.0;
  std::vector<ClockWindow> time_pattern;
  std::optional<double> window_probability;
  int lag = 1;
  std::vector<int> targets;  // channels to mask; empty = all eligible
};

EmaDataset inject_missingness(const EmaDataset& data, const MissingnessSpec& spec,
                              std::uint64_t seed);

}  // namespace emass

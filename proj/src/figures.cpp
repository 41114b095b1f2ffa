#include "emass/figures.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "emass/ema_io.hpp"
#include "emass/error.hpp"
#include "emass/simulate.hpp"

namespace emass {

namespace {

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

/// One-state model observed without noise, started exactly at zero.
ModelSpec scalar_process(double a, double sigma2, int n_inputs) {
  ModelSpec s = ModelSpec::zeros(1, 1, n_inputs);
  s.A(0, 0) = a;
  if (n_inputs > 0) s.G.setOnes();
  s.H(0, 0) = 1.0;
  s.Sigma(0, 0) = sigma2;
  s.initial_mean = Eigen::VectorXd::Zero(1);
  s.initial_cov = Eigen::MatrixXd::Zero(1, 1);
  return s;
}

SimulationRequest unit_grid(double horizon, std::uint64_t seed) {
  SimulationRequest r;
  r.schedule.kind = ScheduleKind::Fixed;
  r.schedule.interval = 1.0;
  r.schedule.horizon = horizon;
  r.seed = seed;
  return r;
}

/// Linear interpolation between every step-th point; NA past the last one.
std::vector<double> interpolate_thinned(const Eigen::VectorXd& x, int step) {
  const auto n = x.size();
  const Eigen::Index last = ((n - 1) / step) * step;
  std::vector<double> out(static_cast<std::size_t>(n), kNa);
  for (Eigen::Index k = 0; k <= last; ++k) {
    const Eigen::Index a = (k / step) * step;
    const Eigen::Index b = std::min<Eigen::Index>(a + step, last);
    const double w = b == a ? 0.0 : static_cast<double>(k - a) / static_cast<double>(b - a);
    out[static_cast<std::size_t>(k)] = (1.0 - w) * x[a] + w * x[b];
  }
  return out;
}

PlotTable fig1a(std::uint64_t seed) {
  const Simulation sim = simulate(scalar_process(0.9, 1.0, 0), unit_grid(501.0, seed));
  const Eigen::VectorXd x = sim.states[0].col(0);
  const auto i5 = interpolate_thinned(x, 5);
  const auto i10 = interpolate_thinned(x, 10);
  PlotTable t{{"t", "full", "thin5", "thin10", "interp5", "interp10"}, {}};
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    t.rows.push_back({sim.data.participants[0].t[i], x[k], k % 5 == 0 ? x[k] : kNa,
                      k % 10 == 0 ? x[k] : kNa, i5[i], i10[i]});
  }
  return t;
}

PlotTable fig1b(std::uint64_t seed) {
  SimulationRequest r;
  r.schedule.kind = ScheduleKind::Fixed;
  r.schedule.interval = 24.0;
  r.schedule.horizon = 24.0 * 70.0;
  r.seed = seed;
  const ModelSpec spec = scalar_process(0.6, 0.25, 1);

  TrendSpec linear;
  linear.kind = TrendKind::Linear;
  linear.coefficients = Eigen::VectorXd::Constant(1, 0.05);
  TrendSpec weekend;
  weekend.kind = TrendKind::Weekend;
  weekend.days = {5, 6};
  weekend.coefficients = Eigen::VectorXd::Constant(1, 1.5);

  r.trends = {linear};
  const Simulation a = simulate(spec, r);
  r.trends = {weekend};
  const Simulation b = simulate(spec, r);
  const Participant& p = b.data.participants[0];
  PlotTable t{{"t", "weekday", "weekend", "linear_trend", "weekend_trend"}, {}};
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    const double day = p.weekday(k);
    t.rows.push_back({p.t[static_cast<std::size_t>(k)], day,
                      weekend.days.count(static_cast<int>(day)) ? 1.0 : 0.0, a.states[0](k, 0),
                      b.states[0](k, 0)});
  }
  return t;
}

PlotTable fig3a(std::uint64_t seed) {
  SimulationRequest r = unit_grid(101.0, seed);
  TvpSchedule tvp;
  tvp.start_value = 0.0;
  tvp.end_value = 1.0;
  tvp.midpoint = 50.0;
  tvp.steepness = 0.1;
  r.tvp = tvp;
  const Simulation sim = simulate(scalar_process(0.0, 1.0, 0), r);
  const Participant& p = sim.data.participants[0];
  PlotTable t{{"t", "a", "x"}, {}};
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    const double time = p.t[static_cast<std::size_t>(k)];
    t.rows.push_back({time, tvp.value_at(time), sim.states[0](k, 0)});
  }
  return t;
}

PlotTable fig3b(std::uint64_t seed) {
  SimulationRequest r = unit_grid(101.0, seed);
  RegimeSchedule regimes;
  regimes.breakpoints = {33.0, 66.0};
  for (const double level : {0.0, 3.0, -3.0}) {
    RegimeOverride o;
    o.mean_offset = Eigen::VectorXd::Constant(1, level);
    regimes.regimes.push_back(o);
  }
  r.regimes = regimes;
  const Simulation sim = simulate(scalar_process(0.5, 1.0, 0), r);
  const Participant& p = sim.data.participants[0];
  PlotTable t{{"t", "regime_mean", "x"}, {}};
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    const double time = p.t[static_cast<std::size_t>(k)];
    const double level = (*regimes.regimes[regimes.regime_at(time)].mean_offset)(0);
    t.rows.push_back({time, level, sim.states[0](k, 0)});
  }
  return t;
}

PlotTable fig3c(std::uint64_t seed) {
  SimulationRequest r = unit_grid(101.0, seed);
  // The input at t = 49 drives the state at t = 50.
  DisturbanceEvent shock;
  shock.onset = 49.0;
  shock.coding = DisturbanceCoding::Pulse;
  shock.magnitude = kFig3cShock;
  r.events = {shock};
  const Simulation stationary = simulate(scalar_process(0.5, 0.25, 1), r);
  ModelSpec walk = scalar_process(1.0, 0.25, 1);
  walk.random_walk_states = {0};
  const Simulation random_walk = simulate(walk, r);
  const Participant& p = stationary.data.participants[0];
  PlotTable t{{"t", "shock", "stationary", "random_walk"}, {}};
  for (Eigen::Index k = 0; k < p.rows(); ++k) {
    const double time = p.t[static_cast<std::size_t>(k)];
    t.rows.push_back({time, time >= 50.0 ? kFig3cShock : 0.0, stationary.states[0](k, 0),
                      random_walk.states[0](k, 0)});
  }
  return t;
}

}  // namespace

std::vector<double> PlotTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
  }
  throw Error(ErrorCode::UnknownFigure, "no plot column named " + std::string(name));
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"fig1a", "fig1b", "fig3a", "fig3b", "fig3c"};
  return ids;
}

PlotTable make_figure(std::string_view figure, std::uint64_t seed) {
  if (figure == "fig1a") return fig1a(seed);
  if (figure == "fig1b") return fig1b(seed);
  if (figure == "fig3a") return fig3a(seed);
  if (figure == "fig3b") return fig3b(seed);
  if (figure == "fig3c") return fig3c(seed);
  throw Error(ErrorCode::UnknownFigure, "unknown figure '" + std::string(figure) + "'");
}

void write_plot_table(const PlotTable& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (std::isnan(row[c])) {
        out << "NA";
      } else {
        out << format_number(row[c]);
      }
    }
    out << '\n';
  }
}

}  // namespace emass

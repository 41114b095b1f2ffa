#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "emass/error.hpp"
#include "emass/simulate.hpp"
#include "test_support.hpp"

namespace emass {
namespace {

using Eigen::MatrixXd;

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

ModelSpec ar1(double a, double sigma, double theta) {
  ModelSpec s = ModelSpec::zeros(1, 1, 0);
  s.A(0, 0) = a;
  s.H(0, 0) = 1.0;
  s.Sigma(0, 0) = sigma;
  s.Theta(0, 0) = theta;
  return s;
}

PingSchedule fixed(double interval, double horizon) {
  PingSchedule s;
  s.kind = ScheduleKind::Fixed;
  s.interval = interval;
  s.horizon = horizon;
  return s;
}

TEST(Schedule, FixedDailyGrid) {
  const auto t = generate_schedule(fixed(24.0, 7 * 24.0), 1);
  ASSERT_EQ(t.size(), 7u);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(t[k], 24.0 * k);
}

TEST(Schedule, EmptyHorizon) {
  EXPECT_EQ(error_code_of([] { generate_schedule(fixed(1.0, 0.0), 1); }),
            ErrorCode::EmptySchedule);
}

TEST(Schedule, JitterStaysOrdered) {
  PingSchedule s = fixed(2.0, 200.0);
  s.kind = ScheduleKind::Jittered;
  s.max_jitter = 0.9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = generate_schedule(s, seed);
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t[k], t[k - 1]);
    for (const double v : t) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, s.horizon);
    }
  }
  s.max_jitter = 1.0;
  EXPECT_EQ(error_code_of([&] { generate_schedule(s, 1); }), ErrorCode::InvalidSchedule);
}

TEST(Schedule, RandomWindowPingsInsideWindows) {
  PingSchedule s;
  s.kind = ScheduleKind::RandomWindow;
  s.windows = {{8.0, 20.0}};
  s.pings_per_day = 5;
  s.horizon = 10 * 24.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = generate_schedule(s, seed);
    ASSERT_EQ(t.size(), 50u);
    for (std::size_t k = 0; k < t.size(); ++k) {
      EXPECT_TRUE(s.windows[0].contains(std::fmod(t[k], 24.0)));
      if (k > 0) EXPECT_GT(t[k], t[k - 1]);
    }
  }
}

TEST(Schedule, EventDrivenCountIsPoisson) {
  PingSchedule s;
  s.kind = ScheduleKind::EventDriven;
  s.event_rate = 1.0 / 6.0;
  s.horizon = 30 * 24.0;
  const double mean = 120.0, sd = std::sqrt(120.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double count = static_cast<double>(generate_schedule(s, seed).size());
    EXPECT_LT(std::abs(count - mean), 3.0 * sd + 1.0) << "seed " << seed;
  }
}

TEST(Schedule, NightPhaseIsDropped) {
  PingSchedule s = fixed(1.0, 48.0);
  s.day_length = 12.0;
  s.night_length = 12.0;
  const auto t = generate_schedule(s, 1);
  EXPECT_EQ(t.size(), 24u);
  for (const double v : t) EXPECT_LT(std::fmod(v, 24.0), 12.0);
}

TEST(Disturbance, GeometricDecay) {
  const std::vector<double> t{0, 1, 2, 3, 4, 5};
  const MatrixXd u = encode_disturbance({{1.5, DisturbanceCoding::GeometricDecay, 1.0, 0.5, 0}}, t, 1);
  const std::vector<double> expected{0, 0, 1, 0.5, 0.25, 0.125};
  for (int k = 0; k < 6; ++k) EXPECT_EQ(u(k, 0), expected[k]);
}

TEST(Disturbance, PersistentAfterLastPingIsZero) {
  const std::vector<double> t{0, 1, 2};
  const MatrixXd u = encode_disturbance({{5.0, DisturbanceCoding::Persistent, 1.0, 0.5, 0}}, t, 1);
  EXPECT_TRUE(u.isZero());
}

TEST(Disturbance, PulseHasOneNonzero) {
  const std::vector<double> t{0, 1, 2, 3};
  const MatrixXd u = encode_disturbance({{1.0, DisturbanceCoding::Pulse, 1.0, 0.5, 0}}, t, 1);
  EXPECT_EQ((u.array() != 0.0).count(), 1);
  EXPECT_EQ(u(1, 0), 1.0);
}

TEST(Disturbance, OverlappingEventsAdd) {
  const std::vector<double> t{0, 1, 2, 3};
  const MatrixXd u = encode_disturbance({{1.0, DisturbanceCoding::Persistent, 1.0, 0.5, 0},
                                         {2.0, DisturbanceCoding::Pulse, 2.0, 0.5, 0}},
                                        t, 2);
  EXPECT_EQ(u(2, 0), 3.0);
  EXPECT_EQ(u(3, 0), 1.0);
  EXPECT_TRUE(u.col(1).isZero());
}

TEST(Simulate, NoiselessNullSystem) {
  ModelSpec s = ModelSpec::zeros(2, 2, 0);
  s.A << 0.5, 0.1, 0.0, 0.3;
  s.H.setIdentity();
  s.initial_mean = Eigen::VectorXd::Zero(2);
  s.initial_cov = MatrixXd::Zero(2, 2);
  SimulationRequest r;
  r.schedule = fixed(1.0, 50.0);
  r.seed = 3;
  const Simulation sim = simulate(s, r);
  EXPECT_TRUE(sim.data.participants[0].y.isZero());
  EXPECT_TRUE(sim.states[0].isZero());
}

TEST(Simulate, IdenticalSeedsGiveIdenticalData) {
  SimulationRequest r;
  r.schedule = fixed(1.0, 100.0);
  r.n_participants = 3;
  r.seed = 99;
  const EmaDataset a = simulate_dataset(ar1(0.5, 1.0, 0.5), r);
  const EmaDataset b = simulate_dataset(ar1(0.5, 1.0, 0.5), r);
  EXPECT_TRUE(a == b);
  r.seed = 100;
  EXPECT_FALSE(a == simulate_dataset(ar1(0.5, 1.0, 0.5), r));
  EXPECT_EQ(a.participants[1].id, "p002");
}

TEST(Simulate, ParticipantStreamsAreIndependentOfCount) {
  SimulationRequest r;
  r.schedule = fixed(1.0, 40.0);
  r.seed = 5;
  r.n_participants = 2;
  const EmaDataset two = simulate_dataset(ar1(0.5, 1.0, 0.5), r);
  r.n_participants = 4;
  const EmaDataset four = simulate_dataset(ar1(0.5, 1.0, 0.5), r);
  EXPECT_TRUE(two.participants[1] == four.participants[1]);
}

TEST(Simulate, DiscreteModelNeedsFixedSchedule) {
  SimulationRequest r;
  r.schedule = fixed(1.0, 10.0);
  r.schedule.kind = ScheduleKind::Jittered;
  r.schedule.max_jitter = 0.1;
  EXPECT_EQ(error_code_of([&] { simulate(ar1(0.5, 1.0, 0.5), r); }),
            ErrorCode::ScheduleModeMismatch);
}

TEST(Simulate, NegativePoissonRate) {
  ModelSpec s = ar1(0.5, 1.0, 0.0);
  s.channels[0].family = Family::Poisson;
  SimulationRequest r;
  r.schedule = fixed(1.0, 200.0);
  EXPECT_EQ(error_code_of([&] { simulate(s, r); }), ErrorCode::NegativeRate);
}

TEST(Simulate, CountsAndCategoriesAreIntegers) {
  ModelSpec s = ModelSpec::zeros(1, 2, 0);
  s.A(0, 0) = 0.5;
  s.Sigma(0, 0) = 1.0;
  s.channels[0].family = Family::Poisson;
  s.channels[0].link = Link::Log;
  s.channels[1].family = Family::GradedResponse;
  s.channels[1].categories = 4;
  s.channels[1].thresholds = {-1.0, 0.0, 1.0};
  SimulationRequest r;
  r.schedule = fixed(1.0, 300.0);
  const EmaDataset d = simulate_dataset(s, r);
  for (Eigen::Index k = 0; k < d.participants[0].rows(); ++k) {
    const double c = d.participants[0].y(k, 0);
    const double g = d.participants[0].y(k, 1);
    EXPECT_EQ(c, std::floor(c));
    EXPECT_GE(c, 0.0);
    EXPECT_EQ(g, std::floor(g));
    EXPECT_GE(g, 1.0);
    EXPECT_LE(g, 4.0);
  }
}

// Category probabilities from the cumulative logistic model, averaged over
// the stationary N(0, v) state on a 10^4-point grid.
std::vector<double> graded_oracle(const MeasurementChannel& ch, double variance) {
  const int grid = 10000;
  const double sd = std::sqrt(variance), lo = -8.0 * sd, h = 16.0 * sd / (grid - 1);
  std::vector<double> probs(static_cast<std::size_t>(ch.categories), 0.0);
  for (int i = 0; i < grid; ++i) {
    const double x = lo + i * h;
    const double density = std::exp(-0.5 * x * x / variance) / std::sqrt(2 * std::numbers::pi * variance);
    std::vector<double> above(static_cast<std::size_t>(ch.categories + 1), 0.0);
    above[0] = 1.0;
    for (int c = 1; c < ch.categories; ++c) {
      above[static_cast<std::size_t>(c)] =
          1.0 / (1.0 + std::exp(-ch.discrimination * (x - ch.thresholds[static_cast<std::size_t>(c - 1)])));
    }
    for (int c = 0; c < ch.categories; ++c) {
      probs[static_cast<std::size_t>(c)] +=
          density * h * (above[static_cast<std::size_t>(c)] - above[static_cast<std::size_t>(c + 1)]);
    }
  }
  return probs;
}

TEST(Simulate, GradedResponseFrequenciesMatchModel) {
  ModelSpec s = ModelSpec::zeros(1, 1, 0);
  s.A(0, 0) = 0.5;
  s.Sigma(0, 0) = 1.0;
  auto& ch = s.channels[0];
  ch.family = Family::GradedResponse;
  ch.categories = 5;
  ch.discrimination = 1.3;
  ch.thresholds = {-1.5, -0.5, 0.4, 1.2};
  SimulationRequest r;
  r.schedule = fixed(1.0, 2000.0);
  r.seed = 17;
  const Participant p = simulate_dataset(s, r).participants[0];
  const auto expected = graded_oracle(ch, 4.0 / 3.0);
  // Batch means give a standard error that respects autocorrelation.
  const int batches = 40;
  const Eigen::Index per = p.rows() / batches;
  for (int c = 1; c <= 5; ++c) {
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
      double hits = 0.0;
      for (Eigen::Index k = b * per; k < (b + 1) * per; ++k) hits += p.y(k, 0) == c ? 1.0 : 0.0;
      means.push_back(hits / static_cast<double>(per));
    }
    double mean = 0.0, var = 0.0;
    for (const double m : means) mean += m / batches;
    for (const double m : means) var += (m - mean) * (m - mean) / (batches - 1);
    const double se = std::sqrt(var / batches);
    EXPECT_LT(std::abs(mean - expected[static_cast<std::size_t>(c - 1)]), 3.0 * se + 1e-3)
        << "category " << c;
  }
}

TEST(Simulate, RegimeMeansFollowDeclaredOffsets) {
  ModelSpec s = ar1(0.5, 0.5, 0.1);
  RegimeSchedule regimes;
  regimes.breakpoints = {33.0, 66.0};
  regimes.regimes.resize(3);
  regimes.regimes[0].mean_offset = Eigen::VectorXd::Constant(1, 0.0);
  regimes.regimes[1].mean_offset = Eigen::VectorXd::Constant(1, 3.0);
  regimes.regimes[2].mean_offset = Eigen::VectorXd::Constant(1, -3.0);
  SimulationRequest r;
  r.schedule = fixed(1.0, 100.0);
  r.regimes = regimes;
  r.seed = 4;
  const Participant p = simulate_dataset(s, r).participants[0];
  const auto segment_mean = [&](int from, int to) {
    return p.y.col(0).segment(from, to - from).mean();
  };
  const double early = segment_mean(0, 33), mid = segment_mean(33, 66), late = segment_mean(66, 100);
  EXPECT_GT(mid, early);
  EXPECT_GT(early, late);
}

TEST(Simulate, TvpFollowsSigmoid) {
  TvpSchedule tvp;
  tvp.start_value = 0.0;
  tvp.end_value = 1.0;
  tvp.midpoint = 50.0;
  tvp.steepness = 0.2;
  EXPECT_NEAR(tvp.value_at(50.0), 0.5, 1e-15);
  EXPECT_LT(tvp.value_at(0.0), 0.001);
  EXPECT_GT(tvp.value_at(100.0), 0.999);
}

TEST(Simulate, InputsFromTrendsAndEvents) {
  ModelSpec s = ModelSpec::zeros(1, 1, 2);
  s.A(0, 0) = 0.5;
  s.H(0, 0) = 1.0;
  s.G << 1.0, 1.0;
  s.Sigma(0, 0) = 1.0;
  SimulationRequest r;
  r.schedule = fixed(24.0, 7 * 24.0);
  TrendSpec weekend;
  weekend.kind = TrendKind::Weekend;
  weekend.days = {5, 6};
  weekend.coefficients = Eigen::Vector2d(1.0, 0.0);
  r.trends = {weekend};
  r.events = {{48.0, DisturbanceCoding::Pulse, 2.0, 0.5, 1}};
  const Participant p = simulate_dataset(s, r).participants[0];
  const std::vector<double> dummy{0, 0, 0, 0, 0, 1, 1};
  for (int k = 0; k < 7; ++k) {
    EXPECT_EQ(p.u(k, 0), dummy[static_cast<std::size_t>(k)]);
    EXPECT_EQ(p.u(k, 1), k == 2 ? 2.0 : 0.0);
  }
}

double interpolation_rmse(const Eigen::VectorXd& x, int step) {
  double sum = 0.0;
  const auto n = x.size();
  const Eigen::Index last = ((n - 1) / step) * step;
  for (Eigen::Index k = 0; k <= last; ++k) {
    const Eigen::Index a = (k / step) * step;
    const Eigen::Index b = std::min(a + step, last);
    const double w = b == a ? 0.0 : static_cast<double>(k - a) / static_cast<double>(b - a);
    const double interp = (1.0 - w) * x[a] + w * x[b];
    sum += (interp - x[k]) * (interp - x[k]);
  }
  return std::sqrt(sum / static_cast<double>(last + 1));
}

TEST(Simulate, ThinningRaisesInterpolationError) {
  SimulationRequest r;
  r.schedule = fixed(1.0, 501.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    r.seed = seed;
    const Eigen::VectorXd x = simulate(ar1(0.9, 1.0, 0.0), r).states[0].col(0);
    const double full = interpolation_rmse(x, 1);
    const double five = interpolation_rmse(x, 5);
    const double ten = interpolation_rmse(x, 10);
    EXPECT_LE(full, five);
    EXPECT_LE(five, ten);
  }
}

}  // namespace
}  // namespace emass

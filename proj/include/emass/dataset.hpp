#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emass {

/// true marks a missing cell.
using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One participant's series. Rows are pings, in time order.
struct Participant {
  std::string id;
  std::vector<double> t;  // hours since this participant's study start
  Eigen::MatrixXd y;      // T x n_obs; missing cells hold NaN
  MissingMask missing;    // T x n_obs
  Eigen::MatrixXd u;      // T x n_inputs
  std::vector<bool> inserted;  // rows added by augment_night_gaps
  int start_weekday = 0;       // 0 = Monday
  double start_clock = 0.0;    // clock hour of t = 0
  std::uint64_t seed = 0;      // generating seed, 0 when not simulated

  Eigen::Index rows() const { return static_cast<Eigen::Index>(t.size()); }
  /// Clock hour in [0, 24) of row k.
  double clock_time(Eigen::Index k) const;
  /// Whole days since the calendar day containing t = 0.
  long day_index(Eigen::Index k) const;
  /// Day of week (0 = Monday) of row k.
  int weekday(Eigen::Index k) const;
};

struct EmaDataset {
  std::vector<std::string> channel_names;
  std::vector<std::string> input_names;
  std::vector<Participant> participants;
  std::string schedule_kind;

  Eigen::Index n_obs() const { return static_cast<Eigen::Index>(channel_names.size()); }
  Eigen::Index n_inputs() const { return static_cast<Eigen::Index>(input_names.size()); }
  /// Observed scalar cells across all participants.
  long observed_cells() const;
  /// Throws ParseError/NonMonotoneTime on broken shape invariants.
  void check() const;
};

bool operator==(const Participant& a, const Participant& b);
bool operator==(const EmaDataset& a, const EmaDataset& b);

}  // namespace emass

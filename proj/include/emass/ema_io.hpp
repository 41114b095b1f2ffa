#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "emass/dataset.hpp"

namespace emass {

// Delimited dataset file:
//   participant_id,t,y.<channel>...,u.<input>...
// one row per ping, rows grouped by participant and increasing in t,
// missing observations written as NA (never allowed in u columns).

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

EmaDataset read_dataset(std::istream& in, const std::string& source = "<stream>");
EmaDataset read_dataset(const std::filesystem::path& path);
void write_dataset(const EmaDataset& data, std::ostream& out);
/// Writes to a sibling temporary file and renames it into place.
void write_dataset(const EmaDataset& data, const std::filesystem::path& path);

/// Inserts all-NA rows across long overnight gaps so the ping grid becomes
/// roughly equal-interval. For consecutive pings a -> b whose interval
/// overlaps a night (sleep..wake clock hours) the night gap is
/// b - a - target_interval and round(night_gap / target_interval) rows are
/// spread evenly over (a, b). Inserted rows repeat the previous row's
/// inputs and are flagged in Participant::inserted.
EmaDataset augment_night_gaps(const EmaDataset& data, double wake_clock, double sleep_clock,
                              double target_interval);

/// Number of rows augment_night_gaps inserts for one interval.
long night_rows_for_gap(double gap, double target_interval);

struct LinearTime {};
struct WeekendDummy {
  std::set<int> days;  // 0 = Monday
};
struct ClockTime {};
struct TimeSinceWaking {
  /// participant id -> wake clock hour per study day (the last value
  /// repeats for later days).
  std::map<std::string, std::vector<double>> wake_times;
};
using TimeCoding = std::variant<LinearTime, WeekendDummy, ClockTime, TimeSinceWaking>;

/// Column name each coding writes: linear_t, weekend, clock_time,
/// time_since_waking. Re-encoding replaces the existing column.
std::string coding_name(const TimeCoding& coding);

EmaDataset encode_time_covariates(const EmaDataset& data, const std::vector<TimeCoding>& codings);

}  // namespace emass

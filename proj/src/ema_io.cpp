#include "emass/ema_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "emass/error.hpp"

namespace emass {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void parse_error(const std::string& source, long line, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& text, const std::string& source, long line) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    parse_error(source, line, "cannot parse '" + text + "' as a number");
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string format_number(double v) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << contents;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string());
}

EmaDataset read_dataset(std::istream& in, const std::string& source) {
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) parse_error(source, line_no, "empty file");
  strip_cr(line);
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "participant_id" || header[1] != "t") {
    parse_error(source, line_no, "header must start with participant_id,t");
  }
  EmaDataset data;
  std::size_t first_input = header.size();
  for (std::size_t c = 2; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name.rfind("y.", 0) == 0 && first_input == header.size()) {
      data.channel_names.push_back(name.substr(2));
    } else if (name.rfind("u.", 0) == 0) {
      if (first_input == header.size()) first_input = c;
      data.input_names.push_back(name.substr(2));
    } else {
      parse_error(source, line_no, "unexpected column '" + name + "'");
    }
  }
  const auto p = static_cast<Eigen::Index>(data.channel_names.size());
  const auto q = static_cast<Eigen::Index>(data.input_names.size());

  struct Rows {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> u;
  };
  std::vector<std::pair<std::string, Rows>> groups;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      parse_error(source, line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                       std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    if (id.empty()) parse_error(source, line_no, "empty participant_id");
    if (groups.empty() || groups.back().first != id) {
      if (seen.count(id)) {
        parse_error(source, line_no, "rows of participant '" + id + "' are not contiguous");
      }
      seen.insert(id);
      groups.emplace_back(id, Rows{});
    }
    auto& rows = groups.back().second;
    const double t = parse_number(cells[1], source, line_no);
    if (!rows.t.empty() && !(t > rows.t.back())) {
      throw Error(ErrorCode::NonMonotoneTime,
                  source + ":" + std::to_string(line_no) + ": t of participant '" + id +
                      "' is not strictly increasing");
    }
    rows.t.push_back(t);
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& cell = cells[2 + static_cast<std::size_t>(j)];
      rows.y.push_back(cell == "NA" ? kNaN : parse_number(cell, source, line_no));
    }
    for (Eigen::Index j = 0; j < q; ++j) {
      const auto& cell = cells[first_input + static_cast<std::size_t>(j)];
      if (cell == "NA") {
        throw Error(ErrorCode::NaInU, source + ":" + std::to_string(line_no) +
                                          ": NA is not allowed in input columns");
      }
      rows.u.push_back(parse_number(cell, source, line_no));
    }
  }
  for (auto& [id, rows] : groups) {
    Participant part;
    part.id = id;
    part.t = std::move(rows.t);
    const auto n = part.rows();
    part.y = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        rows.y.data(), n, p);
    part.u = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        rows.u.data(), n, q);
    part.missing = part.y.array().isNaN();
    part.inserted.assign(part.t.size(), false);
    data.participants.push_back(std::move(part));
  }
  return data;
}

EmaDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_dataset(in, path.string());
}

void write_dataset(const EmaDataset& data, std::ostream& out) {
  data.check();
  out << "participant_id,t";
  for (const auto& name : data.channel_names) out << ",y." << name;
  for (const auto& name : data.input_names) out << ",u." << name;
  out << '\n';
  for (const auto& part : data.participants) {
    for (Eigen::Index k = 0; k < part.rows(); ++k) {
      out << part.id << ',' << format_number(part.t[static_cast<std::size_t>(k)]);
      for (Eigen::Index j = 0; j < data.n_obs(); ++j) {
        out << ',' << (part.missing(k, j) ? std::string("NA") : format_number(part.y(k, j)));
      }
      for (Eigen::Index j = 0; j < data.n_inputs(); ++j) out << ',' << format_number(part.u(k, j));
      out << '\n';
    }
  }
}

void write_dataset(const EmaDataset& data, const std::filesystem::path& path) {
  std::ostringstream out;
  write_dataset(data, out);
  write_file_atomic(path, out.str());
}

long night_rows_for_gap(double gap, double target_interval) {
  const double night = gap - target_interval;
  if (!(night > 0.0)) return 0;
  return std::lround(night / target_interval);
}

EmaDataset augment_night_gaps(const EmaDataset& data, double wake_clock, double sleep_clock,
                              double target_interval) {
  if (!(target_interval > 0.0)) {
    throw Error(ErrorCode::InvalidSchedule, "target_interval must be > 0");
  }
  EmaDataset out = data;
  const auto p = data.n_obs();
  const auto q = data.n_inputs();
  for (auto& part : out.participants) {
    const Participant& src = part;
    // Night phase in this participant's absolute time: clock hour c maps
    // to t = c - start_clock (mod 24).
    const auto overlaps_night = [&](double a, double b) {
      const double night_len = std::fmod(wake_clock - sleep_clock + 24.0, 24.0);
      if (night_len == 0.0) return false;
      const double first = std::floor((a + src.start_clock) / 24.0) - 1.0;
      for (double day = first; day * 24.0 - src.start_clock < b; day += 1.0) {
        const double start = day * 24.0 + sleep_clock - src.start_clock;
        const double end = start + night_len;
        if (start < b && end > a) return true;
      }
      return false;
    };
    std::vector<double> t;
    std::vector<Eigen::Index> source_row;  // -1 for inserted rows
    std::vector<Eigen::Index> input_row;
    for (Eigen::Index k = 0; k < src.rows(); ++k) {
      if (k > 0) {
        const double a = src.t[static_cast<std::size_t>(k - 1)];
        const double b = src.t[static_cast<std::size_t>(k)];
        const long extra = overlaps_night(a, b) ? night_rows_for_gap(b - a, target_interval) : 0;
        for (long r = 1; r <= extra; ++r) {
          t.push_back(a + (b - a) * static_cast<double>(r) / static_cast<double>(extra + 1));
          source_row.push_back(-1);
          input_row.push_back(k - 1);
        }
      }
      t.push_back(src.t[static_cast<std::size_t>(k)]);
      source_row.push_back(k);
      input_row.push_back(k);
    }
    if (t.size() == src.t.size()) continue;
    const auto rows = static_cast<Eigen::Index>(t.size());
    Participant next;
    next.id = src.id;
    next.start_weekday = src.start_weekday;
    next.start_clock = src.start_clock;
    next.seed = src.seed;
    next.y = Eigen::MatrixXd::Constant(rows, p, kNaN);
    next.missing = MissingMask::Constant(rows, p, true);
    next.u = Eigen::MatrixXd(rows, q);
    next.inserted.resize(t.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto src_row = source_row[static_cast<std::size_t>(r)];
      next.inserted[static_cast<std::size_t>(r)] =
          src_row < 0 || src.inserted[static_cast<std::size_t>(src_row)];
      if (src_row >= 0) {
        next.y.row(r) = src.y.row(src_row);
        next.missing.row(r) = src.missing.row(src_row);
      }
      if (q > 0) next.u.row(r) = src.u.row(input_row[static_cast<std::size_t>(r)]);
    }
    next.t = std::move(t);
    part = std::move(next);
  }
  return out;
}

std::string coding_name(const TimeCoding& coding) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearTime>) return "linear_t";
        if constexpr (std::is_same_v<T, WeekendDummy>) return "weekend";
        if constexpr (std::is_same_v<T, ClockTime>) return "clock_time";
        return "time_since_waking";
      },
      coding);
}

EmaDataset encode_time_covariates(const EmaDataset& data, const std::vector<TimeCoding>& codings) {
  EmaDataset out = data;
  for (const auto& coding : codings) {
    const std::string name = coding_name(coding);
    if (const auto* w = std::get_if<TimeSinceWaking>(&coding)) {
      for (const auto& part : data.participants) {
        const auto it = w->wake_times.find(part.id);
        if (it == w->wake_times.end() || it->second.empty()) {
          throw Error(ErrorCode::MissingWakeTimes, "no wake times for participant " + part.id);
        }
      }
    }
    auto column_it = std::find(out.input_names.begin(), out.input_names.end(), name);
    const bool exists = column_it != out.input_names.end();
    const auto column = exists ? static_cast<Eigen::Index>(column_it - out.input_names.begin())
                               : out.n_inputs();
    if (!exists) out.input_names.push_back(name);
    for (auto& part : out.participants) {
      if (!exists) part.u.conservativeResize(part.rows(), column + 1);
      for (Eigen::Index k = 0; k < part.rows(); ++k) {
        double value = 0.0;
        if (std::holds_alternative<LinearTime>(coding)) {
          value = static_cast<double>(k + 1);
        } else if (const auto* wk = std::get_if<WeekendDummy>(&coding)) {
          value = wk->days.count(part.weekday(k)) ? 1.0 : 0.0;
        } else if (std::holds_alternative<ClockTime>(coding)) {
          value = part.clock_time(k);
        } else {
          const auto& wakes = std::get<TimeSinceWaking>(coding).wake_times.at(part.id);
          const auto wake_on = [&](long day) {
            const auto idx = static_cast<std::size_t>(std::max(0L, day));
            return wakes[std::min(idx, wakes.size() - 1)];
          };
          const long day = part.day_index(k);
          value = part.clock_time(k) - wake_on(day);
          // Before today's wake time: still yesterday's waking period.
          if (value < 0.0) value = part.clock_time(k) + 24.0 - wake_on(day - 1);
        }
        part.u(k, column) = value;
      }
    }
  }
  return out;
}

}  // namespace emass

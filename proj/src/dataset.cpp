#include "emass/dataset.hpp"

#include <cmath>

#include "emass/error.hpp"

namespace emass {
namespace {

bool same_values(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

}  // namespace

double Participant::clock_time(Eigen::Index k) const {
  const double c = std::fmod(start_clock + t[static_cast<std::size_t>(k)], 24.0);
  return c < 0.0 ? c + 24.0 : c;
}

long Participant::day_index(Eigen::Index k) const {
  return static_cast<long>(std::floor((start_clock + t[static_cast<std::size_t>(k)]) / 24.0));
}

int Participant::weekday(Eigen::Index k) const {
  const long d = (start_weekday + day_index(k)) % 7;
  return static_cast<int>(d < 0 ? d + 7 : d);
}

long EmaDataset::observed_cells() const {
  long count = 0;
  for (const auto& p : participants) count += static_cast<long>((!p.missing).count());
  return count;
}

void EmaDataset::check() const {
  for (const auto& p : participants) {
    const auto rows = p.rows();
    if (p.y.rows() != rows || p.y.cols() != n_obs() || p.missing.rows() != rows ||
        p.missing.cols() != n_obs() || p.u.rows() != rows || p.u.cols() != n_inputs()) {
      throw Error(ErrorCode::ParseError, "participant " + p.id + " has inconsistent shapes");
    }
    for (std::size_t k = 1; k < p.t.size(); ++k) {
      if (!(p.t[k] > p.t[k - 1])) {
        throw Error(ErrorCode::NonMonotoneTime,
                    "participant " + p.id + " timestamps are not strictly increasing");
      }
    }
  }
}

bool operator==(const Participant& a, const Participant& b) {
  if (a.missing.rows() != b.missing.rows() || a.missing.cols() != b.missing.cols()) {
    return false;
  }
  return a.id == b.id && a.t == b.t && same_values(a.y, b.y) &&
         (a.missing == b.missing).all() && same_values(a.u, b.u);
}

bool operator==(const EmaDataset& a, const EmaDataset& b) {
  return a.channel_names == b.channel_names && a.input_names == b.input_names &&
         a.participants == b.participants;
}

}  // namespace emass

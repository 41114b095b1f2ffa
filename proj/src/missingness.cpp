#include <cmath>
#include <limits>
#include <random>

#include "emass/error.hpp"
#include "emass/rng.hpp"
#include "emass/simulate.hpp"

namespace emass {
namespace {

struct Cell {
  std::size_t participant;
  Eigen::Index row;
  Eigen::Index col;
  double covariate;
  bool in_window;
};

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sd;

  double operator()(Eigen::Index col, double value) const {
    if (std::isnan(value)) return 0.0;
    const auto c = static_cast<std::size_t>(col);
    return sd[c] > 0.0 ? (value - mean[c]) / sd[c] : 0.0;
  }
};

Standardizer standardize(const EmaDataset& data) {
  const auto p = static_cast<std::size_t>(data.n_obs());
  Standardizer s{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    double sum_sq = 0.0;
    long count = 0;
    for (const auto& part : data.participants) {
      for (Eigen::Index k = 0; k < part.rows(); ++k) {
        if (part.missing(k, static_cast<Eigen::Index>(j))) continue;
        const double v = part.y(k, static_cast<Eigen::Index>(j));
        sum += v;
        sum_sq += v * v;
        ++count;
      }
    }
    if (count > 1) {
      s.mean[j] = sum / static_cast<double>(count);
      const double var = (sum_sq - sum * s.mean[j]) / static_cast<double>(count - 1);
      s.sd[j] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
  }
  return s;
}

// Intercept c with mean(logistic(c + slope * covariate)) == rate.
double calibrate_intercept(const std::vector<Cell>& cells, double slope, double rate) {
  const auto mean_rate = [&](double c) {
    double sum = 0.0;
    for (const auto& cell : cells) sum += logistic(c + slope * cell.covariate);
    return sum / static_cast<double>(cells.size());
  };
  double lo = -60.0;
  double hi = 60.0;
  if (mean_rate(lo) > rate || mean_rate(hi) < rate) {
    throw Error(ErrorCode::CalibrationFailed, "target missingness rate is unreachable");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < rate ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(mean_rate(c) - rate) > 1e-6) {
    throw Error(ErrorCode::CalibrationFailed, "bisection did not reach the target rate");
  }
  return c;
}

}  // namespace

EmaDataset inject_missingness(const EmaDataset& data, const MissingnessSpec& spec,
                              std::uint64_t seed) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
    throw Error(ErrorCode::InvalidScenario, "missingness rate must lie in [0, 1)");
  }
  const auto p = data.n_obs();
  if (spec.mechanism == Mechanism::MAR && (spec.driver < 0 || spec.driver >= p)) {
    throw Error(ErrorCode::InvalidScenario, "missingness driver is not a valid channel");
  }
  if (spec.mechanism == Mechanism::ATMAR && spec.lag < 1) {
    throw Error(ErrorCode::InvalidScenario, "ATMAR lag must be >= 1");
  }
  if (spec.window_probability &&
      !(*spec.window_probability >= 0.0 && *spec.window_probability <= 1.0)) {
    throw Error(ErrorCode::InvalidScenario, "window_probability must lie in [0, 1]");
  }
  for (int j : spec.targets) {
    if (j < 0 || j >= p) throw Error(ErrorCode::InvalidScenario, "missingness target out of range");
  }
  EmaDataset out = data;
  if (spec.rate == 0.0) return out;

  std::vector<bool> target(static_cast<std::size_t>(p), spec.targets.empty());
  for (int j : spec.targets) target[static_cast<std::size_t>(j)] = true;
  if (spec.mechanism == Mechanism::MAR && spec.targets.empty()) {
    target[static_cast<std::size_t>(spec.driver)] = false;
  }

  const Standardizer z = standardize(data);
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    const auto& part = data.participants[i];
    for (Eigen::Index k = 0; k < part.rows(); ++k) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!target[static_cast<std::size_t>(j)] || part.missing(k, j)) continue;
        Cell cell{i, k, j, 0.0, false};
        switch (spec.mechanism) {
          case Mechanism::MCAR:
            break;
          case Mechanism::MAR:
            cell.covariate = z(spec.driver, part.y(k, spec.driver));
            break;
          case Mechanism::MNAR:
            cell.covariate = z(j, part.y(k, j));
            break;
          case Mechanism::TMAR:
            for (const auto& w : spec.time_pattern) {
              cell.in_window = cell.in_window || w.contains(part.clock_time(k));
            }
            cell.covariate = cell.in_window ? 1.0 : 0.0;
            break;
          case Mechanism::ATMAR:
            if (k < spec.lag) continue;
            cell.covariate = z(j, part.y(k - spec.lag, j));
            break;
        }
        cells.push_back(cell);
      }
    }
  }
  if (cells.empty()) {
    throw Error(ErrorCode::CalibrationFailed, "no cells are eligible for masking");
  }

  std::vector<double> prob(cells.size(), spec.rate);
  if (spec.mechanism == Mechanism::TMAR && spec.window_probability) {
    const double w = *spec.window_probability;
    std::size_t inside = 0;
    for (const auto& cell : cells) inside += cell.in_window ? 1 : 0;
    const std::size_t outside = cells.size() - inside;
    double q = 0.0;
    if (outside > 0) {
      q = (spec.rate * static_cast<double>(cells.size()) - w * static_cast<double>(inside)) /
          static_cast<double>(outside);
    } else if (std::abs(w - spec.rate) > 0.02) {
      q = -1.0;
    }
    if (!(q >= 0.0 && q <= 1.0)) {
      throw Error(ErrorCode::CalibrationFailed,
                  "window_probability is incompatible with the target rate");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) prob[c] = cells[c].in_window ? w : q;
  } else if (spec.mechanism != Mechanism::MCAR) {
    const double intercept = calibrate_intercept(cells, spec.slope, spec.rate);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      prob[c] = logistic(intercept + spec.slope * cells[c].covariate);
    }
  }

  // One stream per participant, consumed in cell order.
  std::vector<Rng> streams;
  streams.reserve(data.participants.size());
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    streams.emplace_back(derive_seed(seed, i, 2));
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    if (uniform(streams[cell.participant]) < prob[c]) {
      auto& part = out.participants[cell.participant];
      part.missing(cell.row, cell.col) = true;
      part.y(cell.row, cell.col) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace emass

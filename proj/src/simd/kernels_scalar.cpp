#include <algorithm>
#include <cmath>
#include <limits>

#include "emass/simd/kernels.hpp"

namespace emass::simd {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void add_gaussian(double* logw, const double* mean, std::size_t n, double y, double inv_sd,
                  double log_norm) {
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (y - mean[i]) * inv_sd;
    logw[i] += log_norm - 0.5 * z * z;
  }
}

void add_poisson_identity(double* logw, const double* x, std::size_t n, double y, double scale,
                          double log_factorial) {
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = scale * x[i];
    if (rate > 0.0) {
      logw[i] += y * std::log(rate) - rate - log_factorial;
    } else if (!(rate == 0.0 && y == 0.0)) {
      logw[i] = kNegInf;
    }
  }
}

void add_poisson_log(double* logw, const double* x, std::size_t n, double y, double scale,
                     double log_factorial) {
  const double log_scale = std::log(scale);
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] += y * (log_scale + x[i]) - scale * std::exp(x[i]) - log_factorial;
  }
}

void add_log_sigmoid(double* logw, const double* x, std::size_t n, double slope, double offset) {
  for (std::size_t i = 0; i < n; ++i) {
    const double z = slope * x[i] + offset;
    // log sigmoid(z) = -(max(-z, 0) + log1p(exp(-|z|)))
    logw[i] -= std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  }
}

double max_value(const double* x, std::size_t n) {
  double m = kNegInf;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

double exp_shifted(double* out, const double* logw, std::size_t n, double shift) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(logw[i] - shift);
    sum += out[i];
  }
  return sum;
}

double weighted_sum(const double* w, const double* x, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += w[i] * x[i];
  return sum;
}

double weighted_cross(const double* w, const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += w[i] * x[i] * y[i];
  return sum;
}

double sum_squares(const double* x, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * x[i];
  return sum;
}

void exp_array(double* out, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void log_array(double* out, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",        add_gaussian, add_poisson_identity, add_poisson_log,
      add_log_sigmoid, max_value,    exp_shifted,          weighted_sum,
      weighted_cross,  sum_squares,  exp_array,            log_array,
  };
  return table;
}

}  // namespace emass::simd

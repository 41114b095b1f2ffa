#pragma once

#include <cstddef>
#include <string_view>

// Per-particle inner loops of the particle filter. Every kernel works on
// contiguous double arrays of length n; `logw` accumulators are updated in
// place. Variants must agree with the scalar reference to within a few ulp
// (summation order differs, so reductions are not bit-identical across
// variants, but each variant is deterministic).

namespace emass::simd {

struct KernelTable {
  std::string_view name;

  // logw += log_norm - 0.5 * ((y - mean) * inv_sd)^2
  void (*add_gaussian)(double* logw, const double* mean, std::size_t n, double y,
                       double inv_sd, double log_norm);
  // logw += y log(scale x) - scale x - log_factorial; rate <= 0 gives -inf
  // unless y == 0 and the rate is exactly 0.
  void (*add_poisson_identity)(double* logw, const double* x, std::size_t n, double y,
                               double scale, double log_factorial);
  // logw += y (log(scale) + x) - scale exp(x) - log_factorial
  void (*add_poisson_log)(double* logw, const double* x, std::size_t n, double y,
                          double scale, double log_factorial);
  // logw += log(1 / (1 + exp(-(slope x + offset))))
  void (*add_log_sigmoid)(double* logw, const double* x, std::size_t n, double slope,
                          double offset);
  double (*max_value)(const double* x, std::size_t n);
  // out = exp(logw - shift); returns sum(out)
  double (*exp_shifted)(double* out, const double* logw, std::size_t n, double shift);
  double (*weighted_sum)(const double* w, const double* x, std::size_t n);
  double (*weighted_cross)(const double* w, const double* x, const double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  void (*exp_array)(double* out, const double* x, std::size_t n);
  void (*log_array)(double* out, const double* x, std::size_t n);
};

enum class Isa { Scalar, Avx2 };

const KernelTable& scalar_kernels();
/// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// Best supported variant; EMASS_SIMD=scalar in the environment forces the
/// reference kernels.
const KernelTable& kernels();
Isa active_isa();
/// Overrides the dispatch decision (tests and benchmarks). Falls back to
/// scalar when the requested variant is unavailable.
void select_isa(Isa isa);

}  // namespace emass::simd

// Built with -mavx2 -mfma; only reached through the runtime dispatcher.
#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "emass/simd/kernels.hpp"

namespace emass::simd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline __m256d splat(double v) { return _mm256_set1_pd(v); }

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double horizontal_max(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// 2^k for integral k in [-1022, 1023], held as doubles.
inline __m256d pow2i(__m256d k) {
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i bits = _mm256_cvtepi32_epi64(k32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
}

// exp(x): reduce x = k ln2 + r with |r| <= ln2 / 2, degree-13 Taylor
// polynomial for exp(r), then scale by 2^k in two halves so that
// subnormal results round once.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = splat(1.4426950408889634074);
  const __m256d ln2_hi = splat(6.93147180369123816490e-01);
  const __m256d ln2_lo = splat(1.90821492927058770002e-10);
  const __m256d upper = splat(709.782712893384);
  const __m256d lower = splat(-745.1332191019412);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lower), upper);
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, xc);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  constexpr double c[] = {1.0,
                          1.0,
                          1.0 / 2.0,
                          1.0 / 6.0,
                          1.0 / 24.0,
                          1.0 / 120.0,
                          1.0 / 720.0,
                          1.0 / 5040.0,
                          1.0 / 40320.0,
                          1.0 / 362880.0,
                          1.0 / 3628800.0,
                          1.0 / 39916800.0,
                          1.0 / 479001600.0,
                          1.0 / 6227020800.0};
  __m256d p = splat(c[13]);
  for (int i = 12; i >= 0; --i) p = _mm256_fmadd_pd(p, r, splat(c[i]));

  const __m256d k_half = _mm256_floor_pd(_mm256_mul_pd(k, splat(0.5)));
  const __m256d k_rest = _mm256_sub_pd(k, k_half);
  __m256d result = _mm256_mul_pd(_mm256_mul_pd(p, pow2i(k_half)), pow2i(k_rest));

  result = _mm256_blendv_pd(result, splat(std::numeric_limits<double>::infinity()),
                            _mm256_cmp_pd(x, upper, _CMP_GT_OQ));
  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), _mm256_cmp_pd(x, lower, _CMP_LT_OQ));
  return _mm256_blendv_pd(result, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
}

// Small signed int64 lanes (|v| < 2^51) to double.
inline __m256d int64_to_pd(__m256i v) {
  const __m256d magic = splat(6755399441055744.0);  // 2^52 + 2^51
  const __m256i biased = _mm256_add_epi64(v, _mm256_castpd_si256(magic));
  return _mm256_sub_pd(_mm256_castsi256_pd(biased), magic);
}

// log(x): x = 2^e m with m in [sqrt(2)/2, sqrt(2)), then the classic
// s = f / (2 + f) rational expansion of log(1 + f).
inline __m256d log_pd(__m256d x) {
  const __m256d ln2_hi = splat(6.93147180369123816490e-01);
  const __m256d ln2_lo = splat(1.90821492927058770002e-10);
  const __m256d one = splat(1.0);

  // Subnormals: rescale by 2^54.
  const __m256d tiny = _mm256_cmp_pd(x, splat(2.2250738585072014e-308), _CMP_LT_OQ);
  const __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, splat(18014398509481984.0)), tiny);
  const __m256i bits = _mm256_castpd_si256(xs);

  __m256i exponent = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  exponent = _mm256_sub_epi64(
      exponent, _mm256_and_si256(_mm256_castpd_si256(tiny), _mm256_set1_epi64x(54)));
  const __m256i mantissa_bits = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mantissa_bits);
  __m256d e = int64_to_pd(exponent);
  const __m256d big = _mm256_cmp_pd(m, splat(1.4142135623730951), _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, splat(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, one));

  const __m256d f = _mm256_sub_pd(m, one);
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(splat(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  // Split odd/even terms as in the usual two-polynomial evaluation.
  __m256d t1 = _mm256_fmadd_pd(w, splat(1.531383769920937332e-01), splat(2.222219843214978396e-01));
  t1 = _mm256_fmadd_pd(w, t1, splat(3.999999999940941908e-01));
  t1 = _mm256_mul_pd(w, t1);
  __m256d t2 = _mm256_fmadd_pd(w, splat(1.479819860511658591e-01), splat(1.818357216161805012e-01));
  t2 = _mm256_fmadd_pd(w, t2, splat(2.857142874366239149e-01));
  t2 = _mm256_fmadd_pd(w, t2, splat(6.666666666666735130e-01));
  t2 = _mm256_mul_pd(z, t2);
  const __m256d poly = _mm256_add_pd(t1, t2);
  const __m256d hfsq = _mm256_mul_pd(splat(0.5), _mm256_mul_pd(f, f));

  // e ln2_hi - ((hfsq - (s (hfsq + poly) + e ln2_lo)) - f)
  const __m256d inner = _mm256_fmadd_pd(s, _mm256_add_pd(hfsq, poly), _mm256_mul_pd(e, ln2_lo));
  __m256d result = _mm256_fmsub_pd(e, ln2_hi, _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));

  const __m256d zero = _mm256_setzero_pd();
  result = _mm256_blendv_pd(result, splat(kNegInf), _mm256_cmp_pd(x, zero, _CMP_EQ_OQ));
  result = _mm256_blendv_pd(result, splat(std::numeric_limits<double>::quiet_NaN()),
                            _mm256_cmp_pd(x, zero, _CMP_LT_OQ));
  result = _mm256_blendv_pd(result, x,
                            _mm256_cmp_pd(x, splat(std::numeric_limits<double>::infinity()),
                                          _CMP_EQ_OQ));
  return _mm256_blendv_pd(result, x, _mm256_cmp_pd(x, x, _CMP_UNORD_Q));
}

// log sigmoid(z) = -(max(-z, 0) + log(1 + exp(-|z|)))
inline __m256d log_sigmoid_pd(__m256d z) {
  const __m256d sign = splat(-0.0);
  const __m256d neg_abs = _mm256_or_pd(z, sign);
  const __m256d soft = _mm256_add_pd(_mm256_max_pd(_mm256_sub_pd(_mm256_setzero_pd(), z),
                                                   _mm256_setzero_pd()),
                                     log_pd(_mm256_add_pd(splat(1.0), exp_pd(neg_abs))));
  return _mm256_sub_pd(_mm256_setzero_pd(), soft);
}

void add_gaussian(double* logw, const double* mean, std::size_t n, double y, double inv_sd,
                  double log_norm) {
  const __m256d vy = splat(y);
  const __m256d vs = splat(inv_sd);
  const __m256d vn = splat(log_norm);
  const __m256d half = splat(-0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_mul_pd(_mm256_sub_pd(vy, _mm256_loadu_pd(mean + i)), vs);
    const __m256d term = _mm256_fmadd_pd(half, _mm256_mul_pd(z, z), vn);
    _mm256_storeu_pd(logw + i, _mm256_add_pd(_mm256_loadu_pd(logw + i), term));
  }
  scalar_kernels().add_gaussian(logw + i, mean + i, n - i, y, inv_sd, log_norm);
}

void add_poisson_identity(double* logw, const double* x, std::size_t n, double y, double scale,
                          double log_factorial) {
  const __m256d vy = splat(y);
  const __m256d vs = splat(scale);
  const __m256d vc = splat(log_factorial);
  const __m256d zero = _mm256_setzero_pd();
  // Rate exactly 0 with y == 0 contributes nothing; other rates <= 0 kill the particle.
  const __m256d zero_ok = y == 0.0 ? _mm256_castsi256_pd(_mm256_set1_epi64x(-1)) : zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d rate = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
    const __m256d positive = _mm256_cmp_pd(rate, zero, _CMP_GT_OQ);
    const __m256d safe = _mm256_blendv_pd(splat(1.0), rate, positive);
    const __m256d term =
        _mm256_sub_pd(_mm256_fmsub_pd(vy, log_pd(safe), rate), vc);
    const __m256d current = _mm256_loadu_pd(logw + i);
    const __m256d updated = _mm256_add_pd(current, term);
    const __m256d is_zero = _mm256_and_pd(_mm256_cmp_pd(rate, zero, _CMP_EQ_OQ), zero_ok);
    __m256d out = _mm256_blendv_pd(splat(kNegInf), updated, positive);
    out = _mm256_blendv_pd(out, current, is_zero);
    _mm256_storeu_pd(logw + i, out);
  }
  scalar_kernels().add_poisson_identity(logw + i, x + i, n - i, y, scale, log_factorial);
}

void add_poisson_log(double* logw, const double* x, std::size_t n, double y, double scale,
                     double log_factorial) {
  const double log_scale = std::log(scale);
  const __m256d vy = splat(y);
  const __m256d vs = splat(scale);
  const __m256d vls = splat(log_scale);
  const __m256d vc = splat(log_factorial);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d linear = _mm256_mul_pd(vy, _mm256_add_pd(vls, xv));
    const __m256d term =
        _mm256_sub_pd(_mm256_fnmadd_pd(vs, exp_pd(xv), linear), vc);
    _mm256_storeu_pd(logw + i, _mm256_add_pd(_mm256_loadu_pd(logw + i), term));
  }
  scalar_kernels().add_poisson_log(logw + i, x + i, n - i, y, scale, log_factorial);
}

void add_log_sigmoid(double* logw, const double* x, std::size_t n, double slope, double offset) {
  const __m256d va = splat(slope);
  const __m256d vb = splat(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vb);
    _mm256_storeu_pd(logw + i, _mm256_add_pd(_mm256_loadu_pd(logw + i), log_sigmoid_pd(z)));
  }
  scalar_kernels().add_log_sigmoid(logw + i, x + i, n - i, slope, offset);
}

double max_value(const double* x, std::size_t n) {
  __m256d acc = splat(kNegInf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
  const double head = horizontal_max(acc);
  const double tail = scalar_kernels().max_value(x + i, n - i);
  return head > tail ? head : tail;
}

double exp_shifted(double* out, const double* logw, std::size_t n, double shift) {
  const __m256d vs = splat(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(logw + i), vs));
    _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  return horizontal_sum(acc) + scalar_kernels().exp_shifted(out + i, logw + i, n - i, shift);
}

double weighted_sum(const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i), acc);
  }
  return horizontal_sum(acc) + scalar_kernels().weighted_sum(w + i, x + i, n - i);
}

double weighted_cross(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    acc = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + i), acc);
  }
  return horizontal_sum(acc) + scalar_kernels().weighted_cross(w + i, x + i, y + i, n - i);
}

double sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  return horizontal_sum(acc) + scalar_kernels().sum_squares(x + i, n - i);
}

void exp_array(double* out, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  scalar_kernels().exp_array(out + i, x + i, n - i);
}

void log_array(double* out, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log_pd(_mm256_loadu_pd(x + i)));
  scalar_kernels().log_array(out + i, x + i, n - i);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      "avx2",          add_gaussian, add_poisson_identity, add_poisson_log,
      add_log_sigmoid, max_value,    exp_shifted,          weighted_sum,
      weighted_cross,  sum_squares,  exp_array,            log_array,
  };
  return table;
}

}  // namespace emass::simd

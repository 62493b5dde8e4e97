// Compiled with -mavx2 -mfma. Nothing in this translation unit may be called
// unless the dispatcher has confirmed CPU support.
#include <immintrin.h>

#include <cmath>

#include "countlink/simd/kernels.hpp"

namespace countlink::simd {
namespace {

constexpr std::size_t kLanes = 4;

inline double softplus_tail(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// exp(y) for y <= 0. Range reduction y = k ln2 + r with |r| <= ln2/2, degree-13
// Taylor polynomial; results below exp(-708) are flushed to zero.
inline __m256d exp_nonpositive(__m256d y) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d floor_y = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(y, floor_y, _CMP_LT_OQ);
  y = _mm256_max_pd(y, floor_y);

  const __m256d k = _mm256_round_pd(_mm256_mul_pd(y, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, y);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  const __m256i ki = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(k));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52);
  const __m256d scaled = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, scaled);
}

// log(1 + t) for t in [0, 1].
inline __m256d log1p_unit(__m256d t) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d u = _mm256_add_pd(one, t);
  // Rounding error of 1 + t, carried as a first-order correction.
  const __m256d corr = _mm256_div_pd(_mm256_sub_pd(t, _mm256_sub_pd(u, one)), u);

  const __m256d big = _mm256_cmp_pd(u, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
  const __m256d m = _mm256_blendv_pd(u, _mm256_mul_pd(u, _mm256_set1_pd(0.5)), big);
  const __m256d e = _mm256_and_pd(big, _mm256_set1_pd(0.6931471805599453));

  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(1.0 / 23.0);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 21.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 3.0));
  p = _mm256_fmadd_pd(p, z, one);
  const __m256d log_m = _mm256_mul_pd(_mm256_add_pd(s, s), p);
  return _mm256_add_pd(_mm256_add_pd(e, log_m), corr);
}

// softplus(x) = max(x, 0) + log1p(exp(-|x|))
inline __m256d softplus4(__m256d x) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d neg_abs = _mm256_or_pd(x, sign);
  const __m256d pos = _mm256_max_pd(x, _mm256_setzero_pd());
  return _mm256_add_pd(pos, log1p_unit(exp_nonpositive(neg_abs)));
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline __m256d abs4(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

double softplus_sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) acc = _mm256_add_pd(acc, softplus4(_mm256_loadu_pd(x + i)));
  double total = hsum(acc);
  for (; i < n; ++i) total += softplus_tail(x[i]);
  return total;
}

double softplus_axpy_sum_avx2(const double* base, const double* coef, double delta,
                              std::size_t n) {
  const __m256d d = _mm256_set1_pd(delta);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_fmadd_pd(d, _mm256_loadu_pd(coef + i), _mm256_loadu_pd(base + i));
    acc = _mm256_add_pd(acc, softplus4(v));
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += softplus_tail(base[i] + delta * coef[i]);
  return total;
}

void softplus_axpy_avx2(const double* base, const double* coef, double delta, double* out,
                        std::size_t n) {
  const __m256d d = _mm256_set1_pd(delta);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_fmadd_pd(d, _mm256_loadu_pd(coef + i), _mm256_loadu_pd(base + i));
    _mm256_storeu_pd(out + i, softplus4(v));
  }
  for (; i < n; ++i) out[i] = softplus_tail(base[i] + delta * coef[i]);
}

double abs_diff_sum_avx2(const double* x, double xi, std::size_t n) {
  const __m256d c = _mm256_set1_pd(xi);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes)
    acc = _mm256_add_pd(acc, abs4(_mm256_sub_pd(_mm256_loadu_pd(x + j), c)));
  double total = hsum(acc);
  for (; j < n; ++j) total += std::abs(x[j] - xi);
  return total;
}

double centered_dot_avx2(const double* x, const double* rx, double xi, double cx,
                         const double* y, const double* ry, double yi, double cy,
                         std::size_t n) {
  const __m256d vxi = _mm256_set1_pd(xi);
  const __m256d vyi = _mm256_set1_pd(yi);
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcy = _mm256_set1_pd(cy);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    const __m256d a = _mm256_sub_pd(
        _mm256_sub_pd(abs4(_mm256_sub_pd(_mm256_loadu_pd(x + j), vxi)), _mm256_loadu_pd(rx + j)),
        vcx);
    const __m256d b = _mm256_sub_pd(
        _mm256_sub_pd(abs4(_mm256_sub_pd(_mm256_loadu_pd(y + j), vyi)), _mm256_loadu_pd(ry + j)),
        vcy);
    acc = _mm256_fmadd_pd(a, b, acc);
  }
  double total = hsum(acc);
  for (; j < n; ++j) {
    const double a = std::abs(x[j] - xi) - rx[j] - cx;
    const double b = std::abs(y[j] - yi) - ry[j] - cy;
    total += a * b;
  }
  return total;
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      "avx2",
      softplus_sum_avx2,
      softplus_axpy_sum_avx2,
      softplus_axpy_avx2,
      abs_diff_sum_avx2,
      centered_dot_avx2,
  };
  return table;
}

}  // namespace countlink::simd

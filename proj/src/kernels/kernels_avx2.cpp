#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "ollga/kernels/exp_core.hpp"
#include "ollga/kernels/kernels.hpp"

// AVX2 variants. Each vector lane performs exactly the operation sequence of
// the scalar reference (same reduction constants, same fma placement, same
// two-step 2^k scaling), so outputs match the scalar backend bit for bit.

namespace ollga::kernels::avx2 {

namespace {

using detail::kExpOverflow;
using detail::kExpUnderflow;

inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(detail::kLog2E);
  const __m256d ln2_hi = _mm256_set1_pd(detail::kLn2Hi);
  const __m256d ln2_lo = _mm256_set1_pd(detail::kLn2Lo);

  const __m256d k =
      _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
  r = _mm256_fnmadd_pd(k, ln2_lo, r);
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(detail::kExpP0), z, _mm256_set1_pd(detail::kExpP1));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(detail::kExpP2));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(detail::kExpQ0), z, _mm256_set1_pd(detail::kExpQ1));
  q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(detail::kExpQ2));
  q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(detail::kExpQ3));

  const __m256d one = _mm256_set1_pd(1.0);
  __m256d e = _mm256_add_pd(
      one, _mm256_div_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), p), _mm256_sub_pd(q, p)));

  // 2^k in two steps: hi = floor(k/2), lo = k - hi, both exponents normal.
  const __m256d hi_d = _mm256_floor_pd(_mm256_mul_pd(k, _mm256_set1_pd(0.5)));
  const __m256d lo_d = _mm256_sub_pd(k, hi_d);
  const __m256i hi = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(hi_d));
  const __m256i lo = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(lo_d));
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d m1 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(hi, bias), 52));
  const __m256d m2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(lo, bias), 52));
  e = _mm256_mul_pd(_mm256_mul_pd(e, m1), m2);

  const __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);
  const __m256d over = _mm256_cmp_pd(x, _mm256_set1_pd(kExpOverflow), _CMP_GT_OQ);
  const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  e = _mm256_andnot_pd(under, e);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
  e = _mm256_blendv_pd(e, x, nan_mask);
  return e;
}

inline double reduce4(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

bool compiled() { return true; }

bool supported() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

void exp_batch(const double* x, double* out, std::size_t count) {
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < count; ++i) out[i] = detail::exp_scalar(x[i]);
}

double dot(const double* a, const double* b, std::size_t count) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4)
    vacc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vacc);
  alignas(32) double acc[4];
  _mm256_store_pd(acc, vacc);
  for (std::size_t r = 0; i < count; ++i, ++r) acc[r] = std::fma(a[i], b[i], acc[r]);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double sum(const double* x, std::size_t count) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(x + i));
  alignas(32) double acc[4];
  _mm256_store_pd(acc, vacc);
  for (std::size_t r = 0; i < count; ++i, ++r) acc[r] += x[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace ollga::kernels::avx2

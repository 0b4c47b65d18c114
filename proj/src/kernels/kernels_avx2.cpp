// AVX2 variants of the Monte Carlo inner loops. Compiled with -mavx2 -mfma;
// only reached after a runtime CPU check in dispatch.cpp.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "limsup/kernels.hpp"

namespace limsup {

namespace {

void circle_dist_avx2(const double* a, const double* c, double* out, size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(c + i)),
                              absmask);
    _mm256_storeu_pd(out + i, _mm256_min_pd(t, _mm256_sub_pd(one, t)));
  }
  for (; i < n; ++i) {
    const double t = std::fabs(a[i] - c[i]);
    out[i] = t < 1.0 - t ? t : 1.0 - t;
  }
}

void max_inplace_avx2(double* acc, const double* v, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_max_pd(_mm256_loadu_pd(acc + i), _mm256_loadu_pd(v + i)));
  }
  for (; i < n; ++i) acc[i] = acc[i] > v[i] ? acc[i] : v[i];
}

// log2 via atanh series on the mantissa reduced to [sqrt(2)/2, sqrt(2)),
// exp2 via Taylor on the fractional part. End-to-end relative error of
// z^-t stays below ~1e-14 for the exponent ranges this library uses.
inline __m256d log2_pd(__m256d x) {
  const __m256i expo_mask = _mm256_set1_epi64x(0x7ff0000000000000LL);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3ff0000000000000LL);

  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(_mm256_and_si256(bits, expo_mask), 52);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // If mantissa >= sqrt(2), halve it and bump the exponent.
  const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730951);
  __m256d ge = _mm256_cmp_pd(m, sqrt2, _CMP_GE_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), ge);
  __m256d e = _mm256_sub_pd(
      _mm256_cvtepi32_pd(_mm256_castsi256_si128(_mm256_permutevar8x32_epi32(
          expo, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0)))),
      _mm256_set1_pd(1023.0));
  e = _mm256_add_pd(e, _mm256_and_pd(ge, _mm256_set1_pd(1.0)));

  // s = (m-1)/(m+1); ln m = 2*atanh(s) = 2*(s + s^3/3 + ... + s^19/19)
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  __m256d s2 = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(1.0 / 19.0);
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / 3.0));
  p = _mm256_fmadd_pd(p, s2, one);
  __m256d ln_m = _mm256_mul_pd(_mm256_add_pd(s, s), p);

  const __m256d inv_ln2 = _mm256_set1_pd(1.4426950408889634074);
  return _mm256_fmadd_pd(ln_m, inv_ln2, e);
}

inline __m256d exp2_pd(__m256d y) {
  // n = round(y), f = y - n in [-0.5, 0.5]; 2^f = exp(f*ln2) by Taylor.
  __m256d n = _mm256_round_pd(y, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d f = _mm256_sub_pd(y, n);
  const __m256d ln2 = _mm256_set1_pd(0.6931471805599453094);
  __m256d u = _mm256_mul_pd(f, ln2);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(1.0));

  // scale by 2^n through the exponent field
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i scale_bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(scale_bits));
}

void pow_neg_avx2(const double* z, double* out, size_t n, double t) {
  const __m256d neg_t = _mm256_set1_pd(-t);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(z + i);
    __m256d y = _mm256_mul_pd(neg_t, log2_pd(x));
    _mm256_storeu_pd(out + i, exp2_pd(y));
  }
  for (; i < n; ++i) out[i] = std::pow(z[i], -t);
}

}  // namespace

bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

const Kernels kAvx2Kernels = {circle_dist_avx2, max_inplace_avx2, pow_neg_avx2, "avx2"};

}  // namespace limsup

#endif  // x86_64

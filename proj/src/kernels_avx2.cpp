#include "nebo/kernels.hpp"

#include <cmath>
#include <limits>

#include <immintrin.h>

namespace nebo::kern {
namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

// Cephes-style double-precision exp on 4 lanes. Accurate to ~1-2 ulp on the
// finite range; overflow/underflow saturate to inf/0 like libm.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);

  const __m256d overflow = _mm256_set1_pd(709.782712893384);
  const __m256d underflow = _mm256_set1_pd(-708.396418532264);
  const __m256d xin = x;
  x = _mm256_min_pd(_mm256_max_pd(x, underflow), overflow);

  // n = round(x * log2(e))
  __m256d n = _mm256_floor_pd(_mm256_fmadd_pd(x, log2e, half));
  // r = x - n*ln2, split for accuracy
  x = _mm256_fnmadd_pd(n, c1, x);
  x = _mm256_fnmadd_pd(n, c2, x);

  const __m256d xx = _mm256_mul_pd(x, x);

  __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(3.02994407707441961300e-2));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(9.99999999999999999910e-1));
  p = _mm256_mul_pd(p, x);

  __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.52448340349684104192e-3));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.27265548208155028766e-1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.00000000000000000005e0));

  __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  r = _mm256_fmadd_pd(two, r, one);

  // scale by 2^n through the exponent bits
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(n64));

  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  r = _mm256_blendv_pd(r, inf, _mm256_cmp_pd(xin, overflow, _CMP_GT_OQ));
  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), _mm256_cmp_pd(xin, underflow, _CMP_LT_OQ));
  return r;
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void scaled_sqdist(const double* Xt, std::size_t n, std::size_t d, const double* q,
                   const double* inv_len, double* out) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) _mm256_storeu_pd(out + j, _mm256_setzero_pd());
  for (; j < n; ++j) out[j] = 0.0;

  for (std::size_t k = 0; k < d; ++k) {
    const __m256d qk = _mm256_set1_pd(q[k]);
    const __m256d il = _mm256_set1_pd(inv_len[k]);
    const double* xk = Xt + k * n;
    j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d diff = _mm256_mul_pd(_mm256_sub_pd(qk, _mm256_loadu_pd(xk + j)), il);
      const __m256d acc = _mm256_fmadd_pd(diff, diff, _mm256_loadu_pd(out + j));
      _mm256_storeu_pd(out + j, acc);
    }
    for (; j < n; ++j) {
      const double diff = (q[k] - xk[j]) * inv_len[k];
      out[j] += diff * diff;
    }
  }
}

void matern52_from_sqdist(double* v, std::size_t n, double signal_variance) {
  const __m256d sv = _mm256_set1_pd(signal_variance);
  const __m256d s5 = _mm256_set1_pd(kSqrt5);
  const __m256d fft = _mm256_set1_pd(5.0 / 3.0);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d r2 = _mm256_loadu_pd(v + j);
    const __m256d r = _mm256_sqrt_pd(r2);
    const __m256d poly = _mm256_fmadd_pd(fft, r2, _mm256_fmadd_pd(s5, r, one));
    const __m256d e = exp_pd(_mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), s5), r));
    _mm256_storeu_pd(v + j, _mm256_mul_pd(sv, _mm256_mul_pd(poly, e)));
  }
  for (; j < n; ++j) {
    const double r2 = v[j];
    const double r = std::sqrt(r2);
    v[j] = signal_variance * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
  }
}

void feasibility_weight(const double* c, std::size_t n, double* w) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d e = exp_pd(_mm256_loadu_pd(c + j));
    _mm256_storeu_pd(w + j, _mm256_div_pd(one, _mm256_add_pd(one, e)));
  }
  for (; j < n; ++j) w[j] = 1.0 / (1.0 + std::exp(c[j]));
}

// axpy-style row update: bi -= lij * bj over m columns
inline void row_fnma(double* bi, const double* bj, double lij, std::size_t m) {
  const __m256d l = _mm256_set1_pd(lij);
  std::size_t c = 0;
  for (; c + 4 <= m; c += 4) {
    _mm256_storeu_pd(bi + c, _mm256_fnmadd_pd(l, _mm256_loadu_pd(bj + c),
                                              _mm256_loadu_pd(bi + c)));
  }
  for (; c < m; ++c) bi[c] -= lij * bj[c];
}

inline void row_scale(double* bi, double s, std::size_t m) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t c = 0;
  for (; c + 4 <= m; c += 4)
    _mm256_storeu_pd(bi + c, _mm256_mul_pd(sv, _mm256_loadu_pd(bi + c)));
  for (; c < m; ++c) bi[c] *= s;
}

void solve_lower_multi(const double* L, std::size_t n, double* B, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* bi = B + i * m;
    const double* li = L + i * n;
    for (std::size_t j = 0; j < i; ++j) row_fnma(bi, B + j * m, li[j], m);
    row_scale(bi, 1.0 / li[i], m);
  }
}

void solve_lower_transpose_multi(const double* L, std::size_t n, double* B, std::size_t m) {
  for (std::size_t ii = n; ii-- > 0;) {
    double* bi = B + ii * m;
    for (std::size_t j = ii + 1; j < n; ++j) row_fnma(bi, B + j * m, L[j * n + ii], m);
    row_scale(bi, 1.0 / L[ii * n + ii], m);
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void weighted_colsum(const double* v, const double* W, std::size_t n, std::size_t m,
                     double* out) {
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) _mm256_storeu_pd(out + j, _mm256_setzero_pd());
  for (; j < m; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) axpy(v[i], W + i * m, out, m);
}

void colsum_squares_acc(const double* W, std::size_t n, std::size_t m, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* wi = W + i * m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const __m256d w = _mm256_loadu_pd(wi + j);
      _mm256_storeu_pd(out + j, _mm256_fmadd_pd(w, w, _mm256_loadu_pd(out + j)));
    }
    for (; j < m; ++j) out[j] += wi[j] * wi[j];
  }
}

}  // namespace

const Ops* avx2_ops_impl() {
  static const Ops ops{
      "avx2",
      scaled_sqdist,
      matern52_from_sqdist,
      feasibility_weight,
      solve_lower_multi,
      solve_lower_transpose_multi,
      dot,
      axpy,
      weighted_colsum,
      colsum_squares_acc,
  };
  return &ops;
}

}  // namespace nebo::kern

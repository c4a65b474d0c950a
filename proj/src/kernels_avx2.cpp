#include "reactmix/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

// AVX2 kernels, 4 doubles per vector. Unaligned loads throughout: row slices
// of the mixed-representation arrays are only 16-byte aligned. Reductions
// keep one vector accumulator folded at the end, a fixed association, so a
// given build is reproducible run to run.

namespace reactmix::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  double a = _mm_cvtsd_f64(lo);
  double b = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  return a > b ? a : b;
}

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  double a = _mm_cvtsd_f64(lo);
  double b = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  return a < b ? a : b;
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

bool all_finite(const double* x, std::size_t n) {
  std::size_t i = 0;
  __m256d inf = _mm256_set1_pd(HUGE_VAL);
  __m256d ok = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask);
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(v, inf, _CMP_LT_OQ));
  }
  if (_mm256_movemask_pd(ok) != 0xf) return false;
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void scale(double* x, double a, std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), av));
  for (; i < n; ++i) x[i] *= a;
}

// [f0,f1,f2,f3] -> ([f0,f0,f1,f1], [f2,f2,f3,f3])
inline void expand_factor(const double* f, __m256d& lo, __m256d& hi) {
  __m256d fv = _mm256_loadu_pd(f);
  lo = _mm256_permute4x64_pd(fv, 0x50);
  hi = _mm256_permute4x64_pd(fv, 0xFA);
}

void cx_scale_modes(double* x, const double* f, std::size_t nc) {
  std::size_t k = 0;
  for (; k + 4 <= nc; k += 4) {
    __m256d lo, hi;
    expand_factor(f + k, lo, hi);
    double* p = x + 2 * k;
    _mm256_storeu_pd(p, _mm256_mul_pd(_mm256_loadu_pd(p), lo));
    _mm256_storeu_pd(p + 4, _mm256_mul_pd(_mm256_loadu_pd(p + 4), hi));
  }
  for (; k < nc; ++k) {
    x[2 * k] *= f[k];
    x[2 * k + 1] *= f[k];
  }
}

void cx_factor_axpy(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= nc; k += 4) {
    __m256d lo, hi;
    expand_factor(f + k, lo, hi);
    std::size_t p = 2 * k;
    __m256d t0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w + p), _mm256_loadu_pd(u + p));
    __m256d t1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w + p + 4), _mm256_loadu_pd(u + p + 4));
    _mm256_storeu_pd(v + p, _mm256_mul_pd(lo, t0));
    _mm256_storeu_pd(v + p + 4, _mm256_mul_pd(hi, t1));
  }
  for (; k < nc; ++k) {
    v[2 * k] = f[k] * (u[2 * k] + a * w[2 * k]);
    v[2 * k + 1] = f[k] * (u[2 * k + 1] + a * w[2 * k + 1]);
  }
}

void cx_factor_xpay(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= nc; k += 4) {
    __m256d lo, hi;
    expand_factor(f + k, lo, hi);
    std::size_t p = 2 * k;
    __m256d t0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w + p),
                                 _mm256_mul_pd(lo, _mm256_loadu_pd(u + p)));
    __m256d t1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(w + p + 4),
                                 _mm256_mul_pd(hi, _mm256_loadu_pd(u + p + 4)));
    _mm256_storeu_pd(v + p, t0);
    _mm256_storeu_pd(v + p + 4, t1);
  }
  for (; k < nc; ++k) {
    v[2 * k] = f[k] * u[2 * k] + a * w[2 * k];
    v[2 * k + 1] = f[k] * u[2 * k + 1] + a * w[2 * k + 1];
  }
}

void add_scaled_pair(double* v, double a, const double* x, const double* y,
                     std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d s = _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(v + i, _mm256_fmadd_pd(av, s, _mm256_loadu_pd(v + i)));
  }
  for (; i < n; ++i) v[i] += a * (x[i] + y[i]);
}

void xpay(double* v, const double* x, double a, const double* y,
          std::size_t n) {
  __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(v + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(y + i),
                                            _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) v[i] = x[i] + a * y[i];
}

void cx_mult_iramp(double* m, double b, const double* ramp, std::size_t nc) {
  __m256d bv = _mm256_set1_pd(b);
  std::size_t k = 0;
  for (; k + 2 <= nc; k += 2) {
    double* p = m + 2 * k;
    __m256d v = _mm256_loadu_pd(p);
    __m256d sw = _mm256_permute_pd(v, 0x5);  // swap re/im in each pair
    __m256d rv = _mm256_mul_pd(bv, _mm256_loadu_pd(ramp + 2 * k));
    _mm256_storeu_pd(p, _mm256_mul_pd(sw, rv));
  }
  for (; k < nc; ++k) {
    double re = m[2 * k], im = m[2 * k + 1];
    m[2 * k] = b * ramp[2 * k] * im;
    m[2 * k + 1] = b * ramp[2 * k + 1] * re;
  }
}

void advect_rhs(double* rhs, double s, const double* ux, const double* uy,
                const double* dfx, const double* dfy, std::size_t n) {
  __m256d ns = _mm256_set1_pd(-s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_fmadd_pd(_mm256_loadu_pd(uy + i), _mm256_loadu_pd(dfy + i),
                                _mm256_mul_pd(_mm256_loadu_pd(ux + i),
                                              _mm256_loadu_pd(dfx + i)));
    _mm256_storeu_pd(rhs + i, _mm256_mul_pd(ns, t));
  }
  for (; i < n; ++i) rhs[i] = -s * (ux[i] * dfx[i] + uy[i] * dfy[i]);
}

void advect_rhs_1u(double* rhs, double s, const double* u, const double* df,
                   std::size_t n) {
  __m256d ns = _mm256_set1_pd(-s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(u + i), _mm256_loadu_pd(df + i));
    _mm256_storeu_pd(rhs + i, _mm256_mul_pd(ns, t));
  }
  for (; i < n; ++i) rhs[i] = -s * (u[i] * df[i]);
}

void sink_axpy(double* rhs, double e, const double* a, const double* b,
               std::size_t n) {
  __m256d ne = _mm256_set1_pd(-e);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(rhs + i, _mm256_fmadd_pd(ne, t, _mm256_loadu_pd(rhs + i)));
  }
  for (; i < n; ++i) rhs[i] -= e * (a[i] * b[i]);
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_abs(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double sum_sq(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_prod(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_min(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_min_pd(_mm256_loadu_pd(x + i),
                                           _mm256_loadu_pd(y + i)));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] < y[i] ? x[i] : y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask));
  double m = hmax(acc);
  for (; i < n; ++i) {
    double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

double min_val(const double* x, std::size_t n) {
  __m256d acc = _mm256_set1_pd(x[0]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + i));
  double m = hmin(acc);
  for (; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

}  // namespace

const Ops* avx2_ops() {
  static const Ops ops = {
      "avx2",         all_finite,    scale,    cx_scale_modes, cx_factor_axpy,
      cx_factor_xpay, add_scaled_pair, xpay, cx_mult_iramp, advect_rhs, advect_rhs_1u,
      sink_axpy,      sum,           sum_abs,  sum_sq,         sum_prod,
      sum_min,        max_abs,       min_val,
  };
  return &ops;
}

}  // namespace reactmix::kernels

#else

namespace reactmix::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace reactmix::kernels

#endif

#include "reactmix/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

// NEON kernels, 2 doubles per vector. Same loop structure as the AVX2 file;
// reductions keep one vector accumulator folded at the end.

namespace reactmix::kernels {
namespace {

bool all_finite(const double* x, std::size_t n) {
  std::size_t i = 0;
  float64x2_t inf = vdupq_n_f64(HUGE_VAL);
  uint64x2_t ok = vdupq_n_u64(~0ULL);
  for (; i + 2 <= n; i += 2)
    ok = vandq_u64(ok, vcltq_f64(vabsq_f64(vld1q_f64(x + i)), inf));
  if (vgetq_lane_u64(ok, 0) == 0 || vgetq_lane_u64(ok, 1) == 0) return false;
  for (; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void scale(double* x, double a, std::size_t n) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), av));
  for (; i < n; ++i) x[i] *= a;
}

void cx_scale_modes(double* x, const double* f, std::size_t nc) {
  std::size_t k = 0;
  for (; k + 2 <= nc; k += 2) {
    float64x2_t fv = vld1q_f64(f + k);
    double* p = x + 2 * k;
    vst1q_f64(p, vmulq_f64(vld1q_f64(p), vdupq_laneq_f64(fv, 0)));
    vst1q_f64(p + 2, vmulq_f64(vld1q_f64(p + 2), vdupq_laneq_f64(fv, 1)));
  }
  for (; k < nc; ++k) {
    x[2 * k] *= f[k];
    x[2 * k + 1] *= f[k];
  }
}

void cx_factor_axpy(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= nc; k += 2) {
    float64x2_t fv = vld1q_f64(f + k);
    std::size_t p = 2 * k;
    float64x2_t t0 = vfmaq_f64(vld1q_f64(u + p), av, vld1q_f64(w + p));
    float64x2_t t1 = vfmaq_f64(vld1q_f64(u + p + 2), av, vld1q_f64(w + p + 2));
    vst1q_f64(v + p, vmulq_f64(vdupq_laneq_f64(fv, 0), t0));
    vst1q_f64(v + p + 2, vmulq_f64(vdupq_laneq_f64(fv, 1), t1));
  }
  for (; k < nc; ++k) {
    v[2 * k] = f[k] * (u[2 * k] + a * w[2 * k]);
    v[2 * k + 1] = f[k] * (u[2 * k + 1] + a * w[2 * k + 1]);
  }
}

void cx_factor_xpay(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= nc; k += 2) {
    float64x2_t fv = vld1q_f64(f + k);
    std::size_t p = 2 * k;
    float64x2_t t0 = vfmaq_f64(vmulq_f64(vdupq_laneq_f64(fv, 0), vld1q_f64(u + p)),
                               av, vld1q_f64(w + p));
    float64x2_t t1 = vfmaq_f64(vmulq_f64(vdupq_laneq_f64(fv, 1), vld1q_f64(u + p + 2)),
                               av, vld1q_f64(w + p + 2));
    vst1q_f64(v + p, t0);
    vst1q_f64(v + p + 2, t1);
  }
  for (; k < nc; ++k) {
    v[2 * k] = f[k] * u[2 * k] + a * w[2 * k];
    v[2 * k + 1] = f[k] * u[2 * k + 1] + a * w[2 * k + 1];
  }
}

void add_scaled_pair(double* v, double a, const double* x, const double* y,
                     std::size_t n) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t s = vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    vst1q_f64(v + i, vfmaq_f64(vld1q_f64(v + i), av, s));
  }
  for (; i < n; ++i) v[i] += a * (x[i] + y[i]);
}

void xpay(double* v, const double* x, double a, const double* y,
          std::size_t n) {
  float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(v + i, vfmaq_f64(vld1q_f64(x + i), av, vld1q_f64(y + i)));
  for (; i < n; ++i) v[i] = x[i] + a * y[i];
}

void cx_mult_iramp(double* m, double b, const double* ramp, std::size_t nc) {
  float64x2_t bv = vdupq_n_f64(b);
  std::size_t k = 0;
  for (; k < nc; ++k) {
    double* p = m + 2 * k;
    float64x2_t v = vld1q_f64(p);
    float64x2_t sw = vextq_f64(v, v, 1);
    float64x2_t rv = vmulq_f64(bv, vld1q_f64(ramp + 2 * k));
    vst1q_f64(p, vmulq_f64(sw, rv));
  }
}

void advect_rhs(double* rhs, double s, const double* ux, const double* uy,
                const double* dfx, const double* dfy, std::size_t n) {
  float64x2_t ns = vdupq_n_f64(-s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vfmaq_f64(vmulq_f64(vld1q_f64(ux + i), vld1q_f64(dfx + i)),
                              vld1q_f64(uy + i), vld1q_f64(dfy + i));
    vst1q_f64(rhs + i, vmulq_f64(ns, t));
  }
  for (; i < n; ++i) rhs[i] = -s * (ux[i] * dfx[i] + uy[i] * dfy[i]);
}

void advect_rhs_1u(double* rhs, double s, const double* u, const double* df,
                   std::size_t n) {
  float64x2_t ns = vdupq_n_f64(-s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vld1q_f64(u + i), vld1q_f64(df + i));
    vst1q_f64(rhs + i, vmulq_f64(ns, t));
  }
  for (; i < n; ++i) rhs[i] = -s * (u[i] * df[i]);
}

void sink_axpy(double* rhs, double e, const double* a, const double* b,
               std::size_t n) {
  float64x2_t ne = vdupq_n_f64(-e);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t t = vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    vst1q_f64(rhs + i, vfmaq_f64(vld1q_f64(rhs + i), ne, t));
  }
  for (; i < n; ++i) rhs[i] -= e * (a[i] * b[i]);
}

double sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_abs(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double sum_sq(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_prod(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_min(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vaddq_f64(acc, vminq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] < y[i] ? x[i] : y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
  double m = vmaxvq_f64(acc);
  for (; i < n; ++i) {
    double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

double min_val(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(x[0]);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vminq_f64(acc, vld1q_f64(x + i));
  double m = vminvq_f64(acc);
  for (; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

}  // namespace

const Ops* neon_ops() {
  static const Ops ops = {
      "neon",         all_finite,    scale,    cx_scale_modes, cx_factor_axpy,
      cx_factor_xpay, add_scaled_pair, xpay, cx_mult_iramp, advect_rhs, advect_rhs_1u,
      sink_axpy,      sum,           sum_abs,  sum_sq,         sum_prod,
      sum_min,        max_abs,       min_val,
  };
  return &ops;
}

}  // namespace reactmix::kernels

#else

namespace reactmix::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace reactmix::kernels

#endif

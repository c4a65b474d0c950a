#include <cmath>
#include <cstddef>

#include "reactmix/kernels.hpp"

// Scalar reference kernels. Plain loops, fixed left-to-right association in
// the reductions; the SIMD variants are tested against these.

namespace reactmix::kernels {
namespace {

bool all_finite(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

void scale(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void cx_scale_modes(double* x, const double* f, std::size_t nc) {
  for (std::size_t k = 0; k < nc; ++k) {
    x[2 * k] *= f[k];
    x[2 * k + 1] *= f[k];
  }
}

void cx_factor_axpy(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  for (std::size_t k = 0; k < nc; ++k) {
    v[2 * k] = f[k] * (u[2 * k] + a * w[2 * k]);
    v[2 * k + 1] = f[k] * (u[2 * k + 1] + a * w[2 * k + 1]);
  }
}

void cx_factor_xpay(double* v, const double* f, const double* u, double a,
                    const double* w, std::size_t nc) {
  for (std::size_t k = 0; k < nc; ++k) {
    v[2 * k] = f[k] * u[2 * k] + a * w[2 * k];
    v[2 * k + 1] = f[k] * u[2 * k + 1] + a * w[2 * k + 1];
  }
}

void add_scaled_pair(double* v, double a, const double* x, const double* y,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] += a * (x[i] + y[i]);
}

void xpay(double* v, const double* x, double a, const double* y,
          std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = x[i] + a * y[i];
}

void cx_mult_iramp(double* m, double b, const double* ramp, std::size_t nc) {
  // (re, im) -> i * b*k * (re, im) = (-b*k*im, b*k*re); ramp = [-k, k, ...]
  for (std::size_t k = 0; k < nc; ++k) {
    double re = m[2 * k], im = m[2 * k + 1];
    m[2 * k] = b * ramp[2 * k] * im;
    m[2 * k + 1] = b * ramp[2 * k + 1] * re;
  }
}

void advect_rhs(double* rhs, double s, const double* ux, const double* uy,
                const double* dfx, const double* dfy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    rhs[i] = -s * (ux[i] * dfx[i] + uy[i] * dfy[i]);
}

void advect_rhs_1u(double* rhs, double s, const double* u, const double* df,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) rhs[i] = -s * (u[i] * df[i]);
}

void sink_axpy(double* rhs, double e, const double* a, const double* b,
               std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= e * (a[i] * b[i]);
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double sum_abs(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double sum_sq(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sum_prod(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_min(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] < y[i] ? x[i] : y[i];
  return s;
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::fabs(x[i]);
    if (a > m) m = a;
  }
  return m;
}

double min_val(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] < m) m = x[i];
  return m;
}

}  // namespace

const Ops& ref() {
  static const Ops ops = {
      "scalar",       all_finite,    scale,    cx_scale_modes, cx_factor_axpy,
      cx_factor_xpay, add_scaled_pair, xpay, cx_mult_iramp, advect_rhs, advect_rhs_1u,
      sink_axpy,      sum,           sum_abs,  sum_sq,         sum_prod,
      sum_min,        max_abs,       min_val,
  };
  return ops;
}

}  // namespace reactmix::kernels

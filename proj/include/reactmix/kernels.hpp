#pragma once

#include <cstddef>
#include <vector>

namespace reactmix::kernels {

// Hot inner loops of the solver. Complex arrays are interleaved re,im pairs
// viewed as doubles; "nc" counts complex elements, "n" counts doubles.
//
// A scalar reference implementation always exists. SIMD variants (AVX2 on
// x86-64, NEON on aarch64) are compiled into separate translation units and
// one implementation is picked at load time from CPU features; the choice can
// be forced with the environment variable REACTMIX_KERNELS=scalar|avx2|neon.
// Within one implementation every reduction uses a fixed association, so
// results are reproducible run to run on the same machine.
struct Ops {
  const char* name;

  bool (*all_finite)(const double* x, std::size_t n);
  void (*scale)(double* x, double a, std::size_t n);

  // x_k *= f_k for complex x, real per-mode factor f (integrating factor).
  void (*cx_scale_modes)(double* x, const double* f, std::size_t nc);
  // v_k = f_k * (u_k + a * w_k)       (stage state through the half-step map)
  void (*cx_factor_axpy)(double* v, const double* f, const double* u, double a,
                         const double* w, std::size_t nc);
  // v_k = f_k * u_k + a * w_k
  void (*cx_factor_xpay)(double* v, const double* f, const double* u, double a,
                         const double* w, std::size_t nc);
  // v += a * (x + y)
  void (*add_scaled_pair)(double* v, double a, const double* x, const double* y,
                          std::size_t n);
  // v = x + a * y   (v may alias x)
  void (*xpay)(double* v, const double* x, double a, const double* y,
               std::size_t n);
  // m_k *= i * b * ramp_k on one row of a mixed-representation array.
  // ramp holds the sign-embedded pattern [-k_0, k_0, -k_1, k_1, ...] so the
  // complex rotation becomes a shuffle and one multiply.
  void (*cx_mult_iramp)(double* m, double b, const double* ramp, std::size_t nc);

  // rhs = -s * (ux*dfx + uy*dfy)
  void (*advect_rhs)(double* rhs, double s, const double* ux, const double* uy,
                     const double* dfx, const double* dfy, std::size_t n);
  // rhs = -s * u*df
  void (*advect_rhs_1u)(double* rhs, double s, const double* u,
                        const double* df, std::size_t n);
  // rhs -= e * a*b   (absorbing sink)
  void (*sink_axpy)(double* rhs, double e, const double* a, const double* b,
                    std::size_t n);

  double (*sum)(const double* x, std::size_t n);
  double (*sum_abs)(const double* x, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  double (*sum_prod)(const double* x, const double* y, std::size_t n);
  double (*sum_min)(const double* x, const double* y, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
  double (*min_val)(const double* x, std::size_t n);
};

// Scalar reference kernels.
const Ops& ref();

// Implementation selected for this process (see above).
const Ops& active();

// Every implementation compiled in and runnable on this CPU, reference first.
// Used by the equivalence tests.
std::vector<const Ops*> available();

}  // namespace reactmix::kernels

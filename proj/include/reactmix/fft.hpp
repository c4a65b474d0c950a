#pragma once

#include <complex>

#include "reactmix/aligned.hpp"
#include "reactmix/grid.hpp"

// Forward declarations so fftw3.h stays out of the public headers.
struct fftw_plan_s;

namespace reactmix {

using cx = std::complex<double>;

// Transform engine for one grid. Owns FFTW plans and scratch; coefficients
// follow the engine's native r2c layout (rows ky wrapped, columns kx in
// [0, nx/2], Hermitian half), normalized so entry (0,0) is the grid mean.
//
// Plans are created with deterministic heuristics (no self-timing), so equal
// inputs give bit-equal outputs across executions on one machine.
//
// Not thread safe; give each worker its own instance. Plan creation is
// internally serialized, so instances may be built concurrently.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(Grid2D g);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;
  // Movable: plans run through the new-array interface, and moving the
  // scratch vectors does not relocate their heap storage.
  SpectralWorkspace(SpectralWorkspace&&) noexcept;
  SpectralWorkspace& operator=(SpectralWorkspace&&) = delete;

  const Grid2D& grid() const { return g_; }

  // physical values -> normalized coefficients (input preserved)
  void forward(const double* phys, cx* spec);
  // coefficients -> physical values (input preserved via scratch copy)
  void backward(const cx* spec, double* phys);
  // same, but clobbers spec (saves the copy on hot paths)
  void backward_destructive(cx* spec, double* phys);

  // In-place transforms along the y direction only, one per kx column.
  // col_backward takes coefficients to the mixed representation F(kx, y_j);
  // col_forward returns, scaled by ny (fold 1/ny into the next multiplier).
  // With banded=true only the columns kx <= dealias_kx are transformed,
  // which is all a dealiased state populates.
  void col_backward(cx* m, bool banded = false);
  void col_forward(cx* m, bool banded = false);

  // d/dx and d/dy as spectral multipliers, in place. in==out allowed.
  void deriv_x(const cx* in, cx* out);
  void deriv_y(const cx* in, cx* out);

  // Zero every mode outside the 2/3-rule band |kx| <= nx/3, |ky| <= ny/3.
  void dealias(cx* spec) const;

  // L2 norm (grid-average convention) from coefficients, by Parseval with
  // the half-spectrum column weights.
  double l2(const cx* spec) const;
  double mean(const cx* spec) const { return spec[0].real(); }

  // sign-embedded kx ramp [-k0, k0, -k1, k1, ...] used by the shear multiply
  const double* kx_ramp() const { return kx_ramp_.data(); }

 private:
  Grid2D g_;
  fftw_plan_s* r2c_ = nullptr;
  fftw_plan_s* c2r_ = nullptr;
  fftw_plan_s* col_f_ = nullptr;
  fftw_plan_s* col_b_ = nullptr;
  fftw_plan_s* col_f_cut_ = nullptr;
  fftw_plan_s* col_b_cut_ = nullptr;
  aligned_vector<double> scratch_r_;
  aligned_vector<cx> scratch_c_;
  aligned_vector<double> kx_ramp_;    // 2*(nx/2+1) doubles
  aligned_vector<double> unit_ramp_;  // [-1, 1, -1, 1, ...] for deriv_y
};

// Exact coefficient shuffle realizing f(x,y) -> f(y,x) on a square grid in
// the r2c half layout (conjugate partners looked up through Hermitian
// symmetry). An involution, bit exact.
void spectral_transpose(const cx* src, cx* dst, const Grid2D& g);

// 1D counterpart on the periodic unit interval.
class LineWorkspace {
 public:
  explicit LineWorkspace(Grid1D g);
  ~LineWorkspace();
  LineWorkspace(const LineWorkspace&) = delete;
  LineWorkspace& operator=(const LineWorkspace&) = delete;
  LineWorkspace(LineWorkspace&&) noexcept;
  LineWorkspace& operator=(LineWorkspace&&) = delete;

  const Grid1D& grid() const { return g_; }

  void forward(const double* phys, cx* spec);   // normalized by 1/n
  void backward(const cx* spec, double* phys);  // input preserved
  void deriv(const cx* in, cx* out);
  void dealias(cx* spec) const;
  double l2(const cx* spec) const;

 private:
  Grid1D g_;
  fftw_plan_s* r2c_ = nullptr;
  fftw_plan_s* c2r_ = nullptr;
  aligned_vector<double> scratch_r_;
  aligned_vector<cx> scratch_c_;
  aligned_vector<double> unit_ramp_;
};

}  // namespace reactmix

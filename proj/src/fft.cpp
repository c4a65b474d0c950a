#include "reactmix/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <algorithm>
#include <cstring>
#include <mutex>

#include "reactmix/kernels.hpp"

namespace reactmix {

namespace {

// The FFTW planner is not thread safe; executions are.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Deterministic planning: heuristic algorithm choice, no self-timing, so the
// same transform uses the same algorithm in every process.
constexpr unsigned kPlanFlags = FFTW_ESTIMATE;

fftw_complex* fc(cx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

SpectralWorkspace::SpectralWorkspace(Grid2D g)
    : g_(g),
      scratch_r_(g.size()),
      scratch_c_(g.spectral_size()),
      kx_ramp_(2 * g.kx_count()),
      unit_ramp_(2 * g.kx_count()) {
  for (int i = 0; i < g_.kx_count(); ++i) {
    kx_ramp_[2 * i] = -double(i);
    kx_ramp_[2 * i + 1] = double(i);
    unit_ramp_[2 * i] = -1.0;
    unit_ramp_[2 * i + 1] = 1.0;
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  r2c_ = fftw_plan_dft_r2c_2d(
      g_.ny, g_.nx, scratch_r_.data(), fc(scratch_c_.data()), kPlanFlags);
  c2r_ = fftw_plan_dft_c2r_2d(
      g_.ny, g_.nx, fc(scratch_c_.data()), scratch_r_.data(), kPlanFlags);
  int len[] = {g_.ny};
  int h = g_.kx_count();
  col_f_ = fftw_plan_many_dft(
      1, len, h, fc(scratch_c_.data()), nullptr, h, 1, fc(scratch_c_.data()),
      nullptr, h, 1, FFTW_FORWARD, kPlanFlags);
  col_b_ = fftw_plan_many_dft(
      1, len, h, fc(scratch_c_.data()), nullptr, h, 1, fc(scratch_c_.data()),
      nullptr, h, 1, FFTW_BACKWARD, kPlanFlags);
  int hb = g_.dealias_kx() + 1;
  col_f_cut_ = fftw_plan_many_dft(
      1, len, hb, fc(scratch_c_.data()), nullptr, h, 1, fc(scratch_c_.data()),
      nullptr, h, 1, FFTW_FORWARD, kPlanFlags);
  col_b_cut_ = fftw_plan_many_dft(
      1, len, hb, fc(scratch_c_.data()), nullptr, h, 1, fc(scratch_c_.data()),
      nullptr, h, 1, FFTW_BACKWARD, kPlanFlags);
  if (!r2c_ || !c2r_ || !col_f_ || !col_b_ || !col_f_cut_ || !col_b_cut_)
    throw Error("FFT plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
  if (!r2c_) return;  // moved from
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(r2c_);
  fftw_destroy_plan(c2r_);
  fftw_destroy_plan(col_f_);
  fftw_destroy_plan(col_b_);
  fftw_destroy_plan(col_f_cut_);
  fftw_destroy_plan(col_b_cut_);
}

SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&& o) noexcept
    : g_(o.g_),
      r2c_(o.r2c_),
      c2r_(o.c2r_),
      col_f_(o.col_f_),
      col_b_(o.col_b_),
      col_f_cut_(o.col_f_cut_),
      col_b_cut_(o.col_b_cut_),
      scratch_r_(std::move(o.scratch_r_)),
      scratch_c_(std::move(o.scratch_c_)),
      kx_ramp_(std::move(o.kx_ramp_)),
      unit_ramp_(std::move(o.unit_ramp_)) {
  o.r2c_ = o.c2r_ = nullptr;
  o.col_f_ = o.col_b_ = o.col_f_cut_ = o.col_b_cut_ = nullptr;
}

void SpectralWorkspace::forward(const double* phys, cx* spec) {
  // r2c preserves its input; execute directly on the caller's buffer.
  fftw_execute_dft_r2c(r2c_,
                       const_cast<double*>(phys), fc(spec));
  kernels::active().scale(reinterpret_cast<double*>(spec),
                          1.0 / (double(g_.nx) * g_.ny),
                          2 * g_.spectral_size());
}

void SpectralWorkspace::backward(const cx* spec, double* phys) {
  std::memcpy(scratch_c_.data(), spec, g_.spectral_size() * sizeof(cx));
  fftw_execute_dft_c2r(c2r_,
                       fc(scratch_c_.data()), phys);
}

void SpectralWorkspace::backward_destructive(cx* spec, double* phys) {
  fftw_execute_dft_c2r(c2r_, fc(spec), phys);
}

void SpectralWorkspace::col_backward(cx* m, bool banded) {
  fftw_execute_dft(banded ? col_b_cut_ : col_b_, fc(m), fc(m));
}

void SpectralWorkspace::col_forward(cx* m, bool banded) {
  fftw_execute_dft(banded ? col_f_cut_ : col_f_, fc(m), fc(m));
}

void SpectralWorkspace::deriv_x(const cx* in, cx* out) {
  if (out != in)
    std::memcpy(out, in, g_.spectral_size() * sizeof(cx));
  const auto& k = kernels::active();
  int h = g_.kx_count();
  double twopi = 2.0 * 3.14159265358979323846;
  for (int j = 0; j < g_.ny; ++j)
    k.cx_mult_iramp(reinterpret_cast<double*>(out + std::size_t(j) * h), twopi,
                    kx_ramp_.data(), h);
}

void SpectralWorkspace::deriv_y(const cx* in, cx* out) {
  if (out != in)
    std::memcpy(out, in, g_.spectral_size() * sizeof(cx));
  const auto& k = kernels::active();
  int h = g_.kx_count();
  double twopi = 2.0 * 3.14159265358979323846;
  for (int j = 0; j < g_.ny; ++j)
    k.cx_mult_iramp(reinterpret_cast<double*>(out + std::size_t(j) * h),
                    twopi * g_.ky_of_row(j), unit_ramp_.data(), h);
}

void SpectralWorkspace::dealias(cx* spec) const {
  int h = g_.kx_count();
  int cut_x = g_.dealias_kx();
  int cut_y = g_.dealias_ky();
  for (int j = 0; j < g_.ny; ++j) {
    cx* row = spec + std::size_t(j) * h;
    if (std::abs(g_.ky_of_row(j)) > cut_y)
      std::fill(row, row + h, cx(0.0, 0.0));
    else
      std::fill(row + cut_x + 1, row + h, cx(0.0, 0.0));
  }
}

double SpectralWorkspace::l2(const cx* spec) const {
  // Parseval in the half layout: interior kx columns count twice, kx=0 and
  // kx=nx/2 once.
  const auto& k = kernels::active();
  int h = g_.kx_count();
  double s = 0.0;
  for (int j = 0; j < g_.ny; ++j) {
    const double* row = reinterpret_cast<const double*>(spec + std::size_t(j) * h);
    double full = k.sum_sq(row, 2 * h);
    double edge = row[0] * row[0] + row[1] * row[1] +
                  row[2 * h - 2] * row[2 * h - 2] +
                  row[2 * h - 1] * row[2 * h - 1];
    s += 2.0 * full - edge;
  }
  return std::sqrt(s);
}

void spectral_transpose(const cx* src, cx* dst, const Grid2D& g) {
  if (g.nx != g.ny)
    throw Error("spectral transpose needs a square grid");
  if (src == dst)
    throw Error("spectral transpose is out of place");
  const int n = g.nx;
  const std::size_t h = g.kx_count();
  // dst entry (column a, row of value b) is the coefficient of wavenumber
  // (b, a) in src. For b < 0 that column is not stored; Hermitian symmetry
  // of a real field gives it as the conjugate at (-b, -a).
  for (int j = 0; j < n; ++j) {
    const int b = g.ky_of_row(j);
    cx* out = dst + std::size_t(j) * h;
    if (b >= 0) {
      for (std::size_t a = 0; a < h; ++a)
        out[a] = src[a * h + b];
    } else {
      for (std::size_t a = 0; a < h; ++a) {
        const std::size_t row = (a == 0) ? 0 : std::size_t(n) - a;
        out[a] = std::conj(src[row * h + std::size_t(-b)]);
      }
    }
  }
}

LineWorkspace::LineWorkspace(Grid1D g)
    : g_(g), scratch_r_(g.n), scratch_c_(g.k_count()), unit_ramp_(2 * g.k_count()) {
  for (int i = 0; i < g_.k_count(); ++i) {
    unit_ramp_[2 * i] = -double(i);
    unit_ramp_[2 * i + 1] = double(i);
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  r2c_ = fftw_plan_dft_r2c_1d(
      g_.n, scratch_r_.data(), fc(scratch_c_.data()), kPlanFlags);
  c2r_ = fftw_plan_dft_c2r_1d(
      g_.n, fc(scratch_c_.data()), scratch_r_.data(), kPlanFlags);
  if (!r2c_ || !c2r_) throw Error("FFT plan creation failed");
}

LineWorkspace::~LineWorkspace() {
  if (!r2c_) return;  // moved from
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(r2c_);
  fftw_destroy_plan(c2r_);
}

LineWorkspace::LineWorkspace(LineWorkspace&& o) noexcept
    : g_(o.g_),
      r2c_(o.r2c_),
      c2r_(o.c2r_),
      scratch_r_(std::move(o.scratch_r_)),
      scratch_c_(std::move(o.scratch_c_)),
      unit_ramp_(std::move(o.unit_ramp_)) {
  o.r2c_ = o.c2r_ = nullptr;
}

void LineWorkspace::forward(const double* phys, cx* spec) {
  fftw_execute_dft_r2c(r2c_,
                       const_cast<double*>(phys), fc(spec));
  kernels::active().scale(reinterpret_cast<double*>(spec), 1.0 / g_.n,
                          2 * std::size_t(g_.k_count()));
}

void LineWorkspace::backward(const cx* spec, double* phys) {
  std::memcpy(scratch_c_.data(), spec, std::size_t(g_.k_count()) * sizeof(cx));
  fftw_execute_dft_c2r(c2r_, fc(scratch_c_.data()),
                       phys);
}

void LineWorkspace::deriv(const cx* in, cx* out) {
  if (out != in)
    std::memcpy(out, in, std::size_t(g_.k_count()) * sizeof(cx));
  double twopi = 2.0 * 3.14159265358979323846;
  kernels::active().cx_mult_iramp(reinterpret_cast<double*>(out), twopi,
                                  unit_ramp_.data(), g_.k_count());
}

void LineWorkspace::dealias(cx* spec) const {
  std::fill(spec + g_.dealias_k() + 1, spec + g_.k_count(), cx(0.0, 0.0));
}

double LineWorkspace::l2(const cx* spec) const {
  const double* row = reinterpret_cast<const double*>(spec);
  int h = g_.k_count();
  double full = kernels::active().sum_sq(row, 2 * h);
  double edge = row[0] * row[0] + row[1] * row[1] +
                row[2 * h - 2] * row[2 * h - 2] + row[2 * h - 1] * row[2 * h - 1];
  return std::sqrt(2.0 * full - edge);
}

}  // namespace reactmix

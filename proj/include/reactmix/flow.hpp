#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reactmix/field.hpp"
#include "reactmix/grid.hpp"

namespace reactmix {

// Smooth [0,1] ramp: 0 for s <= 0, 1 for s >= 1, and in between
// g(s) / (g(s) + g(1-s)) with g(s) = exp(-1/s). Infinitely flat at both ends.
double smooth_ramp(double s);

// Envelope of one switching block of length P: ramps up over the first third,
// is identically 1 on the middle third, ramps down over the last third, and
// vanishes outside [0, P].
double block_envelope(double t, double P);

// 1D velocity profile with the analytic facts the solver and the resolution
// policy need. p is periodic on [-1/2, 1/2).
struct ShearProfile {
  std::function<double(double)> p;
  std::string desc;
  double amplitude = 1.0;  // scale factor already applied inside p
  double sup = 0.0;        // sup |p|
  double sup_slope = 0.0;  // sup |p'|
  int vanishing_order = 0; // maximal vanishing order of p' over critical points
};

// amplitude * sin(2 pi k y). Maximal vanishing order 1 (simple critical points).
ShearProfile sin_profile(double amplitude = 1.0, int k = 1);

// amplitude * (sin 2 pi y)^(j+1), j >= 1. Critical point at y=0 where
// derivatives 1..j of the profile vanish and derivative j+1 does not, so the
// maximal vanishing order is j. Verified by finite differences at
// construction for j <= 4 (the estimates degenerate beyond that).
ShearProfile flat_critical_profile(int j, double amplitude = 1.0);

// Finite-difference estimate of p^(m)(y0), central stencils, m <= 6.
double fd_derivative(const std::function<double(double)>& p, double y0, int m,
                     double h = 1e-4);

// Incompressible velocity field on the periodic unit square. Divergence is
// checked spectrally at construction (t=0 plus eight deterministic pseudo-
// random times); fields that are not divergence free are rejected.
class FlowField {
 public:
  enum class Kind { zero, shear_x, shear_y, alternating, custom, frames };

  static FlowField zero();
  static FlowField shear_x(ShearProfile p);  // u = (p(y), 0)
  static FlowField shear_y(ShearProfile p);  // u = (0, p(x))

  // Relaxation-enhancing switching shear: blocks of length P = K / sqrt(nu);
  // even blocks carry (env * amplitude * sin(2 pi y), 0), odd blocks
  // (0, env * amplitude * sin(2 pi x)), env the block envelope. K >= 1.
  static FlowField alternating(double nu, double K, double amplitude = 1.0);

  // Arbitrary callable u(x, y, t) -> (ux, uy) with supplied sup-norms.
  static FlowField custom(
      std::function<void(double, double, double, double&, double&)> fn,
      double sup_speed, double sup_slope, double t_check_max = 1.0,
      std::string desc = "custom");

  // Grid-sampled frames, piecewise constant in time: frame i applies on
  // [times[i], times[i+1]), the last frame onward.
  static FlowField frames(Grid2D g, std::vector<double> times,
                          std::vector<std::pair<Field2D, Field2D>> uv,
                          std::string desc = "frames");

  Kind kind() const { return kind_; }
  const std::string& desc() const { return desc_; }

  // Fill physical arrays with u at time t.
  void sample(const Grid2D& g, double t, double* ux, double* uy) const;

  double max_speed(double t) const;             // sup_x |u(x, t)|
  double max_speed(double t0, double t1) const; // sup over a time window
  double max_speed_bound() const;               // sup over all times
  double max_slope_bound() const;               // sup |grad u|, all times

  // Fast-path classification: at time t the field is a pure shear
  // scale * p(.) along one axis, or it is not.
  struct ShearAt {
    bool is_shear = false;
    bool along_x = true;   // true: u=(s p(y),0); false: u=(0, s p(x))
    double scale = 0.0;    // envelope factor, profile amplitude not included
    const ShearProfile* profile = nullptr;
  };
  ShearAt shear_at(double t) const;

  // Switching-flow bookkeeping (Kind::alternating only).
  double block_period() const;
  double envelope(double t) const;  // active block envelope at t
  int block_index(double t) const;

  const ShearProfile* profile() const {
    return profile_ ? profile_.get() : nullptr;
  }

 private:
  FlowField() = default;
  void check_divergence(double t_max);

  Kind kind_ = Kind::zero;
  std::string desc_ = "zero";
  std::shared_ptr<ShearProfile> profile_;
  double P_ = 0.0;          // alternating block length
  double amplitude_ = 0.0;  // alternating amplitude
  std::function<void(double, double, double, double&, double&)> fn_;
  double fn_sup_ = 0.0, fn_slope_ = 0.0, fn_tmax_ = 1.0;
  std::shared_ptr<ShearProfile> alt_px_, alt_py_;
  // frames
  std::shared_ptr<Grid2D> frames_grid_;
  std::vector<double> frame_times_;
  std::shared_ptr<std::vector<std::pair<Field2D, Field2D>>> frames_;
  double frames_sup_ = 0.0, frames_slope_ = 0.0;
};

}  // namespace reactmix

#include "reactmix/flow.hpp"

#include <cmath>
#include <random>

#include "reactmix/errors.hpp"
#include "reactmix/kernels.hpp"

namespace reactmix {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDivTol = 1e-10;

double g_of(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
}  // namespace

double smooth_ramp(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double a = g_of(s);
  double b = g_of(1.0 - s);
  return a / (a + b);
}

double block_envelope(double t, double P) {
  if (t <= 0.0 || t >= P) return 0.0;
  if (t < P / 3.0) return smooth_ramp(3.0 * t / P);
  if (t <= 2.0 * P / 3.0) return 1.0;
  return smooth_ramp(3.0 * (P - t) / P);
}

double fd_derivative(const std::function<double(double)>& p, double y0, int m,
                     double h) {
  // Central stencils, O(h^2) truncation. Offsets are integers or
  // half-integers times h depending on the parity of m.
  auto f = [&](double o) { return p(y0 + o * h); };
  switch (m) {
    case 0:
      return f(0.0);
    case 1:
      return (f(1) - f(-1)) / (2.0 * h);
    case 2:
      return (f(1) - 2.0 * f(0) + f(-1)) / (h * h);
    case 3:
      return (-0.5 * f(-2) + f(-1) - f(1) + 0.5 * f(2)) / (h * h * h);
    case 4:
      return (f(-2) - 4.0 * f(-1) + 6.0 * f(0) - 4.0 * f(1) + f(2)) /
             (h * h * h * h);
    case 5:
      return (-0.5 * f(-3) + 2.0 * f(-2) - 2.5 * f(-1) + 2.5 * f(1) -
              2.0 * f(2) + 0.5 * f(3)) /
             std::pow(h, 5);
    case 6:
      return (f(-3) - 6.0 * f(-2) + 15.0 * f(-1) - 20.0 * f(0) + 15.0 * f(1) -
              6.0 * f(2) + f(3)) /
             std::pow(h, 6);
    default:
      throw ConfigError("finite-difference order out of range");
  }
}

namespace {

// Confirms that derivatives 1..j of p vanish at y0 and derivative j+1 does
// not, within 1e-6 * (2 pi)^(j+1) * amplitude.
void verify_flatness(const std::function<double(double)>& p, int j,
                     double amplitude, double y0) {
  double tol = 1e-6 * std::pow(2.0 * kPi, j + 1) * std::fabs(amplitude);
  for (int m = 1; m <= j; ++m) {
    double d = fd_derivative(p, y0, m);
    if (std::fabs(d) > tol)
      throw ConfigError("profile fails vanishing-order check: derivative " +
                        std::to_string(m) + " = " + std::to_string(d));
  }
  double d = fd_derivative(p, y0, j + 1);
  if (std::fabs(d) <= tol)
    throw ConfigError("profile fails vanishing-order check: derivative " +
                      std::to_string(j + 1) + " vanishes too");
}

}  // namespace

ShearProfile sin_profile(double amplitude, int k) {
  if (k < 1) throw ConfigError("profile wavenumber must be >= 1");
  ShearProfile s;
  double a = amplitude;
  s.p = [a, k](double y) { return a * std::sin(2.0 * kPi * k * y); };
  s.desc = "sin(" + std::to_string(k) + ")*" + std::to_string(amplitude);
  s.amplitude = amplitude;
  s.sup = std::fabs(amplitude);
  s.sup_slope = std::fabs(amplitude) * 2.0 * kPi * k;
  s.vanishing_order = 1;
  return s;
}

ShearProfile flat_critical_profile(int j, double amplitude) {
  if (j < 1) throw ConfigError("vanishing order must be >= 1");
  ShearProfile s;
  double a = amplitude;
  int e = j + 1;
  s.p = [a, e](double y) { return a * std::pow(std::sin(2.0 * kPi * y), e); };
  s.desc = "sin^" + std::to_string(e) + "*" + std::to_string(amplitude);
  s.amplitude = amplitude;
  s.sup = std::fabs(amplitude);
  // p' = a (j+1) 2 pi sin^j cos; its sup is below a (j+1) 2 pi.
  double m = 0.0;
  for (int i = 0; i <= 4096; ++i) {
    double y = -0.5 + i / 4096.0;
    double d = a * e * 2.0 * kPi * std::pow(std::sin(2.0 * kPi * y), e - 1) *
               std::cos(2.0 * kPi * y);
    m = std::max(m, std::fabs(d));
  }
  s.sup_slope = m;
  s.vanishing_order = j;
  if (j <= 4) verify_flatness(s.p, j, amplitude, 0.0);
  return s;
}

FlowField FlowField::zero() {
  FlowField f;
  f.kind_ = Kind::zero;
  f.desc_ = "zero";
  return f;
}

FlowField FlowField::shear_x(ShearProfile p) {
  FlowField f;
  f.kind_ = Kind::shear_x;
  f.desc_ = "shear-x " + p.desc;
  f.profile_ = std::make_shared<ShearProfile>(std::move(p));
  f.check_divergence(1.0);
  return f;
}

FlowField FlowField::shear_y(ShearProfile p) {
  FlowField f;
  f.kind_ = Kind::shear_y;
  f.desc_ = "shear-y " + p.desc;
  f.profile_ = std::make_shared<ShearProfile>(std::move(p));
  f.check_divergence(1.0);
  return f;
}

FlowField FlowField::alternating(double nu, double K, double amplitude) {
  if (!(nu > 0.0)) throw ConfigError("alternating flow needs nu > 0");
  if (!(K >= 1.0)) throw ConfigError("alternating flow needs K >= 1");
  FlowField f;
  f.kind_ = Kind::alternating;
  f.P_ = K / std::sqrt(nu);
  f.amplitude_ = amplitude;
  f.desc_ = "alternating K=" + std::to_string(K) + " P=" + std::to_string(f.P_);
  f.alt_px_ = std::make_shared<ShearProfile>(sin_profile(amplitude));
  f.alt_py_ = std::make_shared<ShearProfile>(sin_profile(amplitude));
  f.check_divergence(2.0 * f.P_);
  return f;
}

FlowField FlowField::custom(
    std::function<void(double, double, double, double&, double&)> fn,
    double sup_speed, double sup_slope, double t_check_max, std::string desc) {
  FlowField f;
  f.kind_ = Kind::custom;
  f.fn_ = std::move(fn);
  f.fn_sup_ = sup_speed;
  f.fn_slope_ = sup_slope;
  f.fn_tmax_ = t_check_max;
  f.desc_ = std::move(desc);
  f.check_divergence(t_check_max);
  return f;
}

FlowField FlowField::frames(Grid2D g, std::vector<double> times,
                            std::vector<std::pair<Field2D, Field2D>> uv,
                            std::string desc) {
  if (times.empty() || times.size() != uv.size())
    throw ConfigError("frame times and fields must align and be nonempty");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw ConfigError("frame times must increase");
  FlowField f;
  f.kind_ = Kind::frames;
  f.frames_grid_ = std::make_shared<Grid2D>(g);
  f.frame_times_ = std::move(times);
  for (auto& p : uv) {
    if (p.first.rep != Rep::physical || p.second.rep != Rep::physical ||
        !(p.first.grid == g) || !(p.second.grid == g))
      throw ConfigError("frames must be physical fields on the stated grid");
  }
  f.frames_ = std::make_shared<std::vector<std::pair<Field2D, Field2D>>>(
      std::move(uv));
  f.desc_ = std::move(desc);
  const auto& k = kernels::active();
  SpectralWorkspace ws(g);
  aligned_vector<cx> cu(g.spectral_size()), cv(g.spectral_size());
  double sup = 0.0, slope = 0.0;
  for (auto& p : *f.frames_) {
    sup = std::max(sup, std::hypot(k.max_abs(p.first.phys.data(), g.size()),
                                   k.max_abs(p.second.phys.data(), g.size())));
    ws.forward(p.first.phys.data(), cu.data());
    ws.forward(p.second.phys.data(), cv.data());
    aligned_vector<cx> d(g.spectral_size());
    aligned_vector<double> dp(g.size());
    for (auto* src : {&cu, &cv}) {
      ws.deriv_x(src->data(), d.data());
      ws.backward(d.data(), dp.data());
      slope = std::max(slope, k.max_abs(dp.data(), g.size()));
      ws.deriv_y(src->data(), d.data());
      ws.backward(d.data(), dp.data());
      slope = std::max(slope, k.max_abs(dp.data(), g.size()));
    }
  }
  f.frames_sup_ = sup;
  f.frames_slope_ = slope;
  f.check_divergence(f.frame_times_.back() + 1.0);
  return f;
}

void FlowField::sample(const Grid2D& g, double t, double* ux, double* uy) const {
  std::size_t n = g.size();
  switch (kind_) {
    case Kind::zero:
      std::fill(ux, ux + n, 0.0);
      std::fill(uy, uy + n, 0.0);
      return;
    case Kind::shear_x: {
      for (int j = 0; j < g.ny; ++j) {
        double v = profile_->p(g.y(j));
        for (int i = 0; i < g.nx; ++i) ux[g.index(i, j)] = v;
      }
      std::fill(uy, uy + n, 0.0);
      return;
    }
    case Kind::shear_y: {
      std::fill(ux, ux + n, 0.0);
      for (int i = 0; i < g.nx; ++i) {
        double v = profile_->p(g.x(i));
        for (int j = 0; j < g.ny; ++j) uy[g.index(i, j)] = v;
      }
      return;
    }
    case Kind::alternating: {
      auto sh = shear_at(t);
      std::fill(ux, ux + n, 0.0);
      std::fill(uy, uy + n, 0.0);
      if (sh.scale == 0.0) return;
      if (sh.along_x) {
        for (int j = 0; j < g.ny; ++j) {
          double v = sh.scale * sh.profile->p(g.y(j));
          for (int i = 0; i < g.nx; ++i) ux[g.index(i, j)] = v;
        }
      } else {
        for (int i = 0; i < g.nx; ++i) {
          double v = sh.scale * sh.profile->p(g.x(i));
          for (int j = 0; j < g.ny; ++j) uy[g.index(i, j)] = v;
        }
      }
      return;
    }
    case Kind::custom: {
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          fn_(g.x(i), g.y(j), t, ux[g.index(i, j)], uy[g.index(i, j)]);
      return;
    }
    case Kind::frames: {
      if (!(g == *frames_grid_))
        throw ConfigError("frame flow sampled on a different grid");
      std::size_t idx = 0;
      while (idx + 1 < frame_times_.size() && t >= frame_times_[idx + 1]) ++idx;
      const auto& p = (*frames_)[idx];
      std::copy(p.first.phys.begin(), p.first.phys.end(), ux);
      std::copy(p.second.phys.begin(), p.second.phys.end(), uy);
      return;
    }
  }
}

double FlowField::max_speed(double t) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::shear_x:
    case Kind::shear_y:
      return profile_->sup;
    case Kind::alternating:
      return envelope(t) * std::fabs(amplitude_);
    case Kind::custom:
      return fn_sup_;
    case Kind::frames:
      return frames_sup_;
  }
  return 0.0;
}

double FlowField::max_speed(double t0, double t1) const {
  if (kind_ != Kind::alternating) return max_speed(t0);
  // The envelope is monotone on each third of a block, so the sup over a
  // window is at an endpoint unless the window touches a plateau.
  int b0 = block_index(t0), b1 = block_index(t1);
  for (int b = b0; b <= b1; ++b) {
    double lo = b * P_ + P_ / 3.0, hi = b * P_ + 2.0 * P_ / 3.0;
    if (t0 < hi && t1 > lo) return std::fabs(amplitude_);
  }
  return std::max(envelope(t0), envelope(t1)) * std::fabs(amplitude_);
}

double FlowField::max_speed_bound() const {
  if (kind_ == Kind::alternating) return std::fabs(amplitude_);
  return max_speed(0.0);
}

double FlowField::max_slope_bound() const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::shear_x:
    case Kind::shear_y:
      return profile_->sup_slope;
    case Kind::alternating:
      return std::fabs(amplitude_) * 2.0 * kPi;
    case Kind::custom:
      return fn_slope_;
    case Kind::frames:
      return frames_slope_;
  }
  return 0.0;
}

FlowField::ShearAt FlowField::shear_at(double t) const {
  ShearAt s;
  switch (kind_) {
    case Kind::zero:
      s.is_shear = true;
      s.along_x = true;
      s.scale = 0.0;
      return s;
    case Kind::shear_x:
      s.is_shear = true;
      s.along_x = true;
      s.scale = 1.0;
      s.profile = profile_.get();
      return s;
    case Kind::shear_y:
      s.is_shear = true;
      s.along_x = false;
      s.scale = 1.0;
      s.profile = profile_.get();
      return s;
    case Kind::alternating: {
      int b = block_index(t);
      s.is_shear = true;
      s.along_x = (b % 2 == 0);
      s.scale = block_envelope(t - b * P_, P_);
      s.profile = (s.along_x ? alt_px_ : alt_py_).get();
      return s;
    }
    default:
      return s;  // not a shear
  }
}

double FlowField::block_period() const {
  if (kind_ != Kind::alternating)
    throw ConfigError("block_period() applies to switching flows only");
  return P_;
}

double FlowField::envelope(double t) const {
  if (kind_ != Kind::alternating) return kind_ == Kind::zero ? 0.0 : 1.0;
  int b = block_index(t);
  return block_envelope(t - b * P_, P_);
}

int FlowField::block_index(double t) const {
  return int(std::floor(t / P_));
}

void FlowField::check_divergence(double t_max) {
  Grid2D g = (kind_ == Kind::frames) ? *frames_grid_ : Grid2D::square(64);
  SpectralWorkspace ws(g);
  aligned_vector<double> ux(g.size()), uy(g.size()), dp(g.size());
  aligned_vector<cx> c(g.spectral_size()), d(g.spectral_size());
  const auto& k = kernels::active();

  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(0.0, t_max);
  std::vector<double> times = {0.0};
  for (int i = 0; i < 8; ++i) times.push_back(uni(rng));

  for (double t : times) {
    sample(g, t, ux.data(), uy.data());
    double div = 0.0;
    ws.forward(ux.data(), c.data());
    ws.deriv_x(c.data(), d.data());
    ws.backward(d.data(), dp.data());
    aligned_vector<double> dsum = dp;
    ws.forward(uy.data(), c.data());
    ws.deriv_y(c.data(), d.data());
    ws.backward(d.data(), dp.data());
    for (std::size_t i = 0; i < g.size(); ++i) dsum[i] += dp[i];
    div = k.max_abs(dsum.data(), g.size());
    double scale = std::max(1.0, k.max_abs(ux.data(), g.size()) +
                                     k.max_abs(uy.data(), g.size()));
    if (div > kDivTol * scale)
      throw ConfigError("velocity field is not divergence free (|div| = " +
                        std::to_string(div) + " at t = " + std::to_string(t) +
                        ")");
  }
}

}  // namespace reactmix

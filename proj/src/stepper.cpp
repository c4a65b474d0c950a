#include "reactmix/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "reactmix/kernels.hpp"

namespace reactmix {

namespace {

constexpr double kPi = 3.14159265358979323846;

double* dv(aligned_vector<cx>& v) { return reinterpret_cast<double*>(v.data()); }

}  // namespace

void HeatFactor::ensure(double h) {
  if (h == h_) return;
  // exp(-4 pi^2 nu |k|^2 h / 2) per mode
  const double base = -2.0 * kPi * kPi * nu_ * h;
  const int hx = g_.kx_count();
  for (int j = 0; j < g_.ny; ++j) {
    const double ky = g_.ky_of_row(j);
    double* row = e_.data() + std::size_t(j) * hx;
    for (int a = 0; a < hx; ++a)
      row[a] = std::exp(base * (double(a) * a + ky * ky));
  }
  h_ = h;
}

TransportEngine::TransportEngine(Grid2D g, std::shared_ptr<const FlowField> flow,
                                 StepperConfig cfg)
    : g_(g),
      flow_(std::move(flow)),
      cfg_(cfg),
      ws_(g),
      tr_(g.spectral_size()),
      dfx_(g.size()),
      dfy_(g.size()),
      ux_(g.size()),
      uy_(g.size()),
      rhs_(g.size()),
      ptab_(g.ny) {
  if (!flow_) throw ConfigError("transport needs a flow (use FlowField::zero)");
  if (!(cfg_.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg_.cfl_advect > 0.0) || !(cfg_.cfl_react > 0.0))
    throw ConfigError("stability numbers must be positive");
  const double lim = max_stable_dt();
  if (cfg_.dt > lim * (1.0 + 1e-9)) throw CflError("advective", cfg_.dt, lim);
}

double TransportEngine::max_stable_dt() const {
  const double u = flow_->max_speed_bound();
  if (u <= 0.0) return std::numeric_limits<double>::infinity();
  return cfg_.cfl_advect * std::min(g_.dx(), g_.dy()) / u;
}

StepPlan TransportEngine::plan_step(double t, double h) const {
  if (!(h > 0.0) || !std::isfinite(h))
    throw ConfigError("step size must be positive and finite");
  StepPlan p;
  p.t0 = t;
  p.h = h;
  const double u = flow_->max_speed(t, t + h);
  if (u > 0.0) {
    const double lim = cfg_.cfl_advect * std::min(g_.dx(), g_.dy()) / u;
    if (h > lim * (1.0 + 1e-9)) throw CflError("advective", h, lim);
  }
  p.stage[0] = flow_->shear_at(t);
  p.stage[1] = flow_->shear_at(t + 0.5 * h);
  p.stage[2] = flow_->shear_at(t + h);

  const bool classified =
      p.stage[0].is_shear && p.stage[1].is_shear && p.stage[2].is_shear;
  if (!classified) {
    p.path = StepPath::general;
    return p;
  }
  bool any_active = false, all_x = true, all_y = true;
  for (const auto& s : p.stage) {
    if (s.scale == 0.0) continue;
    any_active = true;
    (s.along_x ? all_y : all_x) = false;
  }
  if (!any_active) {
    p.path = StepPath::pure_heat;
    p.transposed = transposed_;  // frame is irrelevant; avoid a shuffle
    return p;
  }
  // Shear along y runs in the transposed frame, which needs a square grid.
  // Stages in distinct blocks of a switching flow cannot both be active at
  // step sizes within the advective bound, but fall back rather than assume.
  if (cfg_.force_general_path || !(all_x || all_y) ||
      (all_y && g_.nx != g_.ny)) {
    p.path = StepPath::general;
    return p;
  }
  p.path = StepPath::mixed_shear;
  p.transposed = !all_x;
  return p;
}

void TransportEngine::transpose_state(cx* a) {
  spectral_transpose(a, tr_.data(), g_);
  std::memcpy(a, tr_.data(), g_.spectral_size() * sizeof(cx));
}

void TransportEngine::ensure_frame(const StepPlan& plan,
                                   std::span<cx* const> states) {
  if (plan.transposed == transposed_) return;
  for (cx* s : states) transpose_state(s);
  transposed_ = plan.transposed;
}

void TransportEngine::to_canonical(std::span<cx* const> states) {
  if (!transposed_) return;
  for (cx* s : states) transpose_state(s);
  transposed_ = false;
}

void TransportEngine::ensure_profile_table(const ShearProfile* p) {
  if (ptab_for_ == p) return;
  if (!p || !p->p) throw Error("shear stage carries no profile");
  // Node values over 1/ny: the column round trip scales by ny, folded here.
  // In the transposed frame the nodes are the x nodes, which coincide.
  for (int j = 0; j < g_.ny; ++j)
    ptab_[j] = p->p(g_.y(j)) / double(g_.ny);
  ptab_for_ = p;
}

void TransportEngine::advect_stage(const StepPlan& plan, int time_index,
                                   const cx* in, cx* out) {
  const std::size_t nc = g_.spectral_size();
  const auto& k = kernels::active();

  if (plan.path == StepPath::mixed_shear) {
    const FlowField::ShearAt& s = plan.stage[time_index];
    if (s.scale == 0.0) {
      std::fill(out, out + nc, cx(0.0, 0.0));
      return;
    }
    ensure_profile_table(s.profile);
    if (out != in) std::memcpy(out, in, nc * sizeof(cx));
    const bool banded = cfg_.dealias;
    const int ncols = banded ? g_.dealias_kx() + 1 : g_.kx_count();
    const int hx = g_.kx_count();
    ws_.col_backward(out, banded);
    for (int j = 0; j < g_.ny; ++j) {
      const double b = -2.0 * kPi * s.scale * ptab_[j];
      k.cx_mult_iramp(reinterpret_cast<double*>(out + std::size_t(j) * hx), b,
                      ws_.kx_ramp(), ncols);
    }
    ws_.col_forward(out, banded);
    if (cfg_.dealias) ws_.dealias(out);
    return;
  }

  const double ts = plan.t0 + (time_index == 0   ? 0.0
                               : time_index == 1 ? 0.5 * plan.h
                                                 : plan.h);
  std::memcpy(tr_.data(), in, nc * sizeof(cx));
  ws_.deriv_x(tr_.data(), tr_.data());
  ws_.backward_destructive(tr_.data(), dfx_.data());
  std::memcpy(tr_.data(), in, nc * sizeof(cx));
  ws_.deriv_y(tr_.data(), tr_.data());
  ws_.backward_destructive(tr_.data(), dfy_.data());
  flow_->sample(g_, ts, ux_.data(), uy_.data());
  k.advect_rhs(rhs_.data(), 1.0, ux_.data(), uy_.data(), dfx_.data(),
               dfy_.data(), g_.size());
  ws_.forward(rhs_.data(), out);
  if (cfg_.dealias) ws_.dealias(out);
}

ScalarTransport::ScalarTransport(Grid2D g, std::shared_ptr<const FlowField> flow,
                                 double nu, StepperConfig cfg)
    : engine_(g, std::move(flow), cfg),
      heat_(g, nu),
      c_(g.spectral_size()),
      kd_(g.spectral_size()),
      vs_(g.spectral_size()),
      acc_(g.spectral_size()),
      ec_(g.spectral_size()) {
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw ConfigError("viscosity must be finite and nonnegative");
}

void ScalarTransport::set_state(const Field2D& f) {
  if (!(f.grid == grid())) throw ConfigError("state grid does not match");
  cx* st[] = {c_.data()};
  engine_.to_canonical(st);
  Field2D s = to_spectral(f, engine_.workspace());
  std::memcpy(c_.data(), s.spec.data(), grid().spectral_size() * sizeof(cx));
  if (engine_.config().dealias) engine_.workspace().dealias(c_.data());
}

void ScalarTransport::step() { step(engine_.config().dt); }

void ScalarTransport::step(double h) {
  StepPlan plan = engine_.plan_step(t_, h);
  cx* st[] = {c_.data()};
  engine_.ensure_frame(plan, st);
  heat_.ensure(h);
  const double* e = heat_.data();
  const auto& k = kernels::active();
  const std::size_t nc = grid().spectral_size();

  if (plan.path == StepPath::pure_heat) {
    // Stage derivatives vanish identically; two exact half-step factors.
    k.cx_scale_modes(dv(c_), e, nc);
    k.cx_scale_modes(dv(c_), e, nc);
  } else {
    // Four-stage scheme on the integrating-factor transformed state:
    //   c' = E (E (c + h/6 k1) + h/3 (k2 + k3)) + h/6 k4
    // with E the half-step diffusion factor and k1..k4 the advection stage
    // derivatives at t, t+h/2, t+h/2, t+h.
    engine_.advect_stage(plan, 0, c_.data(), kd_.data());
    k.xpay(dv(acc_), dv(c_), h / 6.0, dv(kd_), 2 * nc);
    k.cx_factor_axpy(dv(vs_), e, dv(c_), h / 2.0, dv(kd_), nc);
    engine_.advect_stage(plan, 1, vs_.data(), kd_.data());
    k.cx_factor_xpay(dv(acc_), e, dv(acc_), h / 3.0, dv(kd_), nc);
    std::memcpy(ec_.data(), c_.data(), nc * sizeof(cx));
    k.cx_scale_modes(dv(ec_), e, nc);
    k.xpay(dv(vs_), dv(ec_), h / 2.0, dv(kd_), 2 * nc);
    engine_.advect_stage(plan, 1, vs_.data(), kd_.data());
    k.xpay(dv(acc_), dv(acc_), h / 3.0, dv(kd_), 2 * nc);
    k.cx_factor_axpy(dv(vs_), e, dv(ec_), h, dv(kd_), nc);
    engine_.advect_stage(plan, 2, vs_.data(), kd_.data());
    k.cx_factor_xpay(dv(c_), e, dv(acc_), h / 6.0, dv(kd_), nc);
  }
  t_ += h;
  if (!k.all_finite(dv(c_), 2 * nc))
    throw NumericsError("transport state left the finite range near t=" +
                            std::to_string(t_),
                        t_ - h);
}

void ScalarTransport::advance_to(double t_end) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end));
  if (t_end < t_ - tol) throw ConfigError("cannot advance backwards in time");
  while (t_end - t_ > tol) {
    double h = engine_.config().dt;
    const double rem = t_end - t_;
    if (rem < h * (1.0 + 1e-9)) h = rem;
    step(h);
  }
  t_ = t_end;
}

Field2D ScalarTransport::snapshot_spectral() {
  cx* st[] = {c_.data()};
  engine_.to_canonical(st);
  Field2D f(grid(), Rep::spectral);
  std::memcpy(f.spec.data(), c_.data(), grid().spectral_size() * sizeof(cx));
  return f;
}

Field2D ScalarTransport::snapshot() {
  Field2D s = snapshot_spectral();
  return to_physical(s, engine_.workspace());
}

double ScalarTransport::mass() const { return c_[0].real(); }

double ScalarTransport::l2() { return engine_.workspace().l2(c_.data()); }

double ScalarTransport::l2_x_avg() {
  cx* st[] = {c_.data()};
  engine_.to_canonical(st);
  // The x average keeps exactly the kx = 0 column, one entry per ky.
  const int hx = grid().kx_count();
  double s = 0.0;
  for (int j = 0; j < grid().ny; ++j)
    s += std::norm(c_[std::size_t(j) * hx]);
  return std::sqrt(s);
}

double ScalarTransport::l2_remainder() {
  cx* st[] = {c_.data()};
  engine_.to_canonical(st);
  const auto& k = kernels::active();
  const int hx = grid().kx_count();
  double s = 0.0;
  for (int j = 0; j < grid().ny; ++j) {
    const double* row =
        reinterpret_cast<const double*>(c_.data() + std::size_t(j) * hx);
    const double tail = k.sum_sq(row + 2, 2 * std::size_t(hx - 1));
    const double nyq = row[2 * hx - 2] * row[2 * hx - 2] +
                       row[2 * hx - 1] * row[2 * hx - 1];
    s += 2.0 * tail - nyq;
  }
  return std::sqrt(std::max(0.0, s));
}

std::vector<TransportSample> run_until(ScalarTransport& st, double t_end,
                                       int every_k_steps) {
  if (every_k_steps < 1) throw ConfigError("sampling stride must be >= 1");
  std::vector<TransportSample> out;
  out.push_back({st.time(), st.snapshot()});
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end));
  long count = 0;
  while (t_end - st.time() > tol) {
    double h = st.config().dt;
    const double rem = t_end - st.time();
    if (rem < h * (1.0 + 1e-9)) h = rem;
    st.step(h);
    ++count;
    const bool last = t_end - st.time() <= tol;
    if (last) st.set_time(t_end);
    if (last || count % every_k_steps == 0)
      out.push_back({st.time(), st.snapshot()});
  }
  return out;
}

}  // namespace reactmix

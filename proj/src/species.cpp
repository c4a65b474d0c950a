#include "reactmix/species.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "reactmix/kernels.hpp"

namespace reactmix {

namespace {

double* dv(aligned_vector<cx>& v) { return reinterpret_cast<double*>(v.data()); }

}  // namespace

ReactingSystem::ReactingSystem(Grid2D g, std::shared_ptr<const FlowField> flow,
                               std::vector<double> nus, std::vector<double> eps,
                               StepperConfig cfg)
    : engine_(g, std::move(flow), cfg),
      eps_(std::move(eps)),
      k_(int(nus.size())),
      rhs_(g.size()),
      sspec_(g.spectral_size()),
      diff_(g.size()) {
  if (k_ < 1) throw ConfigError("a reacting system needs at least one species");
  if (eps_.size() != std::size_t(k_) * k_)
    throw ConfigError("reaction matrix must be " + std::to_string(k_) + "x" +
                      std::to_string(k_));
  for (double nu : nus)
    if (!(nu > 0.0) || !(nu <= 1.0))
      throw ConfigError("species diffusivities must lie in (0, 1]");
  for (int a = 0; a < k_; ++a)
    for (int b = 0; b < k_; ++b) {
      const double e = eps_[std::size_t(a) * k_ + b];
      if (!std::isfinite(e) || e < 0.0)
        throw ConfigError("reaction coefficients must be finite and >= 0");
      if (a == b && e != 0.0)
        throw ConfigError("reaction matrix diagonal must be zero");
    }

  species_.reserve(k_);
  for (int a = 0; a < k_; ++a) species_.emplace_back(g, nus[std::size_t(a)]);
  for (int a = 0; a < k_; ++a)
    for (int b = 0; b < k_; ++b)
      if (eps_[std::size_t(a) * k_ + b] > 0.0) {
        species_[a].sink_active = true;
        species_[a].needs_phys = true;
        species_[b].needs_phys = true;
      }
  q_.assign(k_, 0.0);
}

ReactingSystem ReactingSystem::pair(Grid2D g,
                                    std::shared_ptr<const FlowField> flow,
                                    double nu1, double nu2, double eps,
                                    StepperConfig cfg) {
  if (!std::isfinite(eps) || eps < 0.0 || eps > 1.0)
    throw ConfigError("two-species coupling must lie in [0, 1]");
  return ReactingSystem(g, std::move(flow), {nu1, nu2}, {0.0, eps, eps, 0.0},
                        cfg);
}

int ReactingSystem::check(int a) const {
  if (a < 0 || a >= k_) throw ConfigError("species index out of range");
  return a;
}

int ReactingSystem::check_twin(int a) const {
  check(a);
  if (twins_.empty()) throw ConfigError("no twins have been spawned");
  return a;
}

std::vector<cx*> ReactingSystem::state_list() {
  std::vector<cx*> ptrs;
  ptrs.reserve(species_.size() + twins_.size());
  for (auto& ch : species_) ptrs.push_back(ch.c.data());
  for (auto& ch : twins_) ptrs.push_back(ch.c.data());
  return ptrs;
}

void ReactingSystem::canonical() {
  auto ptrs = state_list();
  engine_.to_canonical(ptrs);
}

void ReactingSystem::set_state(int a, const Field2D& f) {
  check(a);
  if (!(f.grid == grid()))
    throw ConfigError("field grid does not match the system grid");
  canonical();
  Channel& ch = species_[a];
  auto& ws = engine_.workspace();
  if (f.rep == Rep::spectral) {
    std::memcpy(ch.c.data(), f.spec.data(),
                grid().spectral_size() * sizeof(cx));
    ws.backward(ch.c.data(), ch.phys.data());
    neg_scale_ = std::max(
        neg_scale_, kernels::active().max_abs(ch.phys.data(), grid().size()));
  } else {
    neg_scale_ = std::max(
        neg_scale_, kernels::active().max_abs(f.phys.data(), grid().size()));
    ws.forward(f.phys.data(), ch.c.data());
  }
  if (engine_.config().dealias) ws.dealias(ch.c.data());
}

void ReactingSystem::set_sink_sign(double s) {
  if (s != 1.0 && s != -1.0)
    throw ConfigError("sink sign hook accepts only +1 or -1");
  sink_sign_ = s;
}

double ReactingSystem::sink_stage(Channel& ch, int a) {
  const auto& k = kernels::active();
  const std::size_t n = grid().size();
  const std::size_t nc = grid().spectral_size();
  auto& ws = engine_.workspace();
  std::fill(rhs_.begin(), rhs_.end(), 0.0);
  double q_rate = 0.0;
  for (int b = 0; b < k_; ++b) {
    const double e = eps_[std::size_t(a) * k_ + b];
    if (e == 0.0) continue;
    const double* pa = ch.phys.data();
    const double* pb = species_[b].phys.data();
    k.sink_axpy(rhs_.data(), sink_sign_ * e, pa, pb, n);
    // ledger integrates the definitional +eps n_a n_b even when the hook
    // flipped the sink, so corruption shows up in the identity checks
    q_rate += e * k.sum_prod(pa, pb, n) / double(n);
  }
  ws.forward(rhs_.data(), sspec_.data());
  k.xpay(dv(ch.kd), dv(ch.kd), 1.0,
         reinterpret_cast<const double*>(sspec_.data()), 2 * nc);
  if (engine_.config().dealias) ws.dealias(ch.kd.data());
  return q_rate;
}

void ReactingSystem::step() { step(engine_.config().dt); }

void ReactingSystem::step(double h) {
  if (!(h > 0.0)) throw ConfigError("step size must be positive");
  StepPlan plan = engine_.plan_step(t_, h);
  auto ptrs = state_list();
  engine_.ensure_frame(plan, ptrs);

  const auto& k = kernels::active();
  auto& ws = engine_.workspace();
  const std::size_t n = grid().size();
  const std::size_t nc = grid().spectral_size();
  const int total = int(species_.size() + twins_.size());

  // Start-of-step physical pass: negativity and reaction-rate guards on the
  // species, and the stage-one sink factors. Norms are frame independent, so
  // this is valid in either orientation.
  std::vector<double> linf(k_, 0.0);
  for (int a = 0; a < k_; ++a) {
    Channel& ch = species_[a];
    ws.backward(ch.c.data(), ch.phys.data());
    const double mn = k.min_val(ch.phys.data(), n);
    if (mn < -negativity_tolerance())
      throw NumericsError("density " + std::to_string(a + 1) +
                              " fell to " + std::to_string(mn) + " at t=" +
                              std::to_string(t_) +
                              " (beyond the negativity tolerance)",
                          t_);
    linf[a] = k.max_abs(ch.phys.data(), n);
  }
  for (int a = 0; a < k_; ++a) {
    if (!species_[a].sink_active) continue;
    double rate = 0.0;
    for (int b = 0; b < k_; ++b)
      rate += eps_[std::size_t(a) * k_ + b] * linf[b];
    if (h * rate > engine_.config().cfl_react)
      throw CflError("reactive", h, engine_.config().cfl_react / rate);
  }

  for (auto& ch : species_) ch.heat.ensure(h);
  for (auto& ch : twins_) ch.heat.ensure(h);

  std::vector<double> qs(k_, 0.0);
  static constexpr double stage_w[4] = {1.0, 2.0, 2.0, 1.0};
  static constexpr int stage_tidx[4] = {0, 1, 1, 2};

  auto skip = [&](const Channel& ch) {
    return plan.path == StepPath::pure_heat && !ch.sink_active &&
           !ch.needs_phys;
  };

  for (int s = 0; s < 4; ++s) {
    // stage states of every sink participant in physical space (stage one
    // reuses the guard pass above)
    if (s > 0)
      for (auto& ch : species_)
        if (ch.needs_phys) ws.backward(ch.vs.data(), ch.phys.data());

    for (int i = 0; i < total; ++i) {
      Channel& ch = chan(i);
      if (skip(ch)) continue;
      const cx* state = s == 0 ? ch.c.data() : ch.vs.data();
      if (plan.path != StepPath::pure_heat)
        engine_.advect_stage(plan, stage_tidx[s], state, ch.kd.data());
      else
        std::fill(ch.kd.begin(), ch.kd.end(), cx(0.0, 0.0));
      if (ch.sink_active) qs[i] += stage_w[s] * sink_stage(ch, i);

      const double* e = ch.heat.data();
      switch (s) {
        case 0:
          k.xpay(dv(ch.acc), dv(ch.c), h / 6.0, dv(ch.kd), 2 * nc);
          k.cx_factor_axpy(dv(ch.vs), e, dv(ch.c), h / 2.0, dv(ch.kd), nc);
          break;
        case 1:
          k.cx_factor_xpay(dv(ch.acc), e, dv(ch.acc), h / 3.0, dv(ch.kd), nc);
          std::memcpy(ch.ec.data(), ch.c.data(), nc * sizeof(cx));
          k.cx_scale_modes(dv(ch.ec), e, nc);
          k.xpay(dv(ch.vs), dv(ch.ec), h / 2.0, dv(ch.kd), 2 * nc);
          break;
        case 2:
          k.xpay(dv(ch.acc), dv(ch.acc), h / 3.0, dv(ch.kd), 2 * nc);
          k.cx_factor_axpy(dv(ch.vs), e, dv(ch.ec), h, dv(ch.kd), nc);
          break;
        case 3:
          k.cx_factor_xpay(dv(ch.c), e, dv(ch.acc), h / 6.0, dv(ch.kd), nc);
          break;
      }
    }
  }

  for (int i = 0; i < total; ++i) {
    Channel& ch = chan(i);
    if (!skip(ch)) continue;
    const double* e = ch.heat.data();
    k.cx_scale_modes(dv(ch.c), e, nc);
    k.cx_scale_modes(dv(ch.c), e, nc);
  }

  for (int i = 0; i < total; ++i)
    if (!k.all_finite(dv(chan(i).c), 2 * nc))
      throw NumericsError("channel " + std::to_string(i + 1) +
                              " left the finite range near t=" +
                              std::to_string(t_ + h),
                          t_);

  for (int a = 0; a < k_; ++a) q_[a] += h / 6.0 * qs[a];
  t_ += h;
}

void ReactingSystem::advance_to(double t_end) {
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

Field2D ReactingSystem::snapshot_spectral(int a) {
  check(a);
  canonical();
  Field2D f(grid(), Rep::spectral);
  std::memcpy(f.spec.data(), species_[a].c.data(),
              grid().spectral_size() * sizeof(cx));
  return f;
}

Field2D ReactingSystem::snapshot(int a) {
  return to_physical(snapshot_spectral(a), engine_.workspace());
}

Field2D ReactingSystem::twin_snapshot(int a) {
  check_twin(a);
  canonical();
  Field2D f(grid(), Rep::spectral);
  std::memcpy(f.spec.data(), twins_[a].c.data(),
              grid().spectral_size() * sizeof(cx));
  return to_physical(f, engine_.workspace());
}

double ReactingSystem::mass(int a) const {
  return species_[check(a)].c[0].real();
}

std::vector<double> ReactingSystem::masses() const {
  std::vector<double> m(k_);
  for (int a = 0; a < k_; ++a) m[std::size_t(a)] = species_[a].c[0].real();
  return m;
}

double ReactingSystem::mass_all() const {
  double s = 0.0;
  for (const auto& ch : species_) s += ch.c[0].real();
  return s;
}

double ReactingSystem::l2(int a) {
  return engine_.workspace().l2(species_[check(a)].c.data());
}

double ReactingSystem::linf(int a) {
  check(a);
  Channel& ch = species_[a];
  engine_.workspace().backward(ch.c.data(), ch.phys.data());
  return kernels::active().max_abs(ch.phys.data(), grid().size());
}

double ReactingSystem::min_value(int a) {
  check(a);
  Channel& ch = species_[a];
  engine_.workspace().backward(ch.c.data(), ch.phys.data());
  return kernels::active().min_val(ch.phys.data(), grid().size());
}

double ReactingSystem::l2_x_avg(int a) {
  check(a);
  canonical();
  const int hx = grid().kx_count();
  const cx* c = species_[a].c.data();
  double s = 0.0;
  for (int j = 0; j < grid().ny; ++j) s += std::norm(c[std::size_t(j) * hx]);
  return std::sqrt(s);
}

double ReactingSystem::l2_remainder(int a) {
  check(a);
  canonical();
  const auto& k = kernels::active();
  const int hx = grid().kx_count();
  const cx* c = species_[a].c.data();
  double s = 0.0;
  for (int j = 0; j < grid().ny; ++j) {
    const double* row = reinterpret_cast<const double*>(c + std::size_t(j) * hx);
    const double tail = k.sum_sq(row + 2, 2 * std::size_t(hx - 1));
    const double nyq = row[2 * hx - 2] * row[2 * hx - 2] +
                       row[2 * hx - 1] * row[2 * hx - 1];
    s += 2.0 * tail - nyq;
  }
  return std::sqrt(std::max(0.0, s));
}

double ReactingSystem::reacted_mass() const {
  if (k_ != 2)
    throw ConfigError("the scalar reacted-mass ledger is two-species only");
  return q_[0];
}

double ReactingSystem::reacted_mass_all() const {
  double s = 0.0;
  for (double q : q_) s += q;
  return s;
}

void ReactingSystem::spawn_twins() {
  twins_.clear();
  twins_.reserve(k_);
  for (int a = 0; a < k_; ++a) {
    twins_.emplace_back(grid(), species_[a].heat.nu());
    std::memcpy(twins_.back().c.data(), species_[a].c.data(),
                grid().spectral_size() * sizeof(cx));
  }
  twin_t0_ = t_;
}

double ReactingSystem::twin_spawn_time() const {
  if (twins_.empty()) throw ConfigError("no twins have been spawned");
  return twin_t0_;
}

double ReactingSystem::twin_mass(int a) const {
  return twins_[std::size_t(check_twin(a))].c[0].real();
}

double ReactingSystem::twin_gap_l1(int a) {
  check_twin(a);
  canonical();
  auto& ws = engine_.workspace();
  const auto& k = kernels::active();
  const std::size_t n = grid().size();
  ws.backward(species_[a].c.data(), species_[a].phys.data());
  ws.backward(twins_[a].c.data(), diff_.data());
  k.xpay(diff_.data(), diff_.data(), -1.0, species_[a].phys.data(), n);
  return k.sum_abs(diff_.data(), n) / double(n);
}

double ReactingSystem::twin_min_gap(int a) {
  check_twin(a);
  canonical();
  auto& ws = engine_.workspace();
  const auto& k = kernels::active();
  const std::size_t n = grid().size();
  ws.backward(species_[a].c.data(), species_[a].phys.data());
  ws.backward(twins_[a].c.data(), diff_.data());
  k.xpay(diff_.data(), diff_.data(), -1.0, species_[a].phys.data(), n);
  return k.min_val(diff_.data(), n);
}

}  // namespace reactmix

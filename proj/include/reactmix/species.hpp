#pragma once

#include <memory>
#include <vector>

#include "reactmix/errors.hpp"
#include "reactmix/field.hpp"
#include "reactmix/flow.hpp"
#include "reactmix/stepper.hpp"

namespace reactmix {

// Coupled absorbing-reaction system on the periodic unit square,
//
//   dn_a/dt + u.grad(n_a) = nu_a lap(n_a) - n_a sum_b eps_ab n_b,
//
// stepped jointly so all channels share one advection engine, one step plan
// and one frame. Passive twins (spawn_twins) ride along as extra channels
// with no sink; started from the reacting state they dominate it pointwise,
// which the twin_min_gap measure makes checkable.
//
// Bookkeeping contract: the reacted-mass ledgers use the same four-stage
// quadrature as the sink itself, so
//
//   Q_a(t) - Q_a(t0) = mass_a(t0) - mass_a(t)
//
// holds to round-off at every step boundary, not merely to scheme order.
// The ledger always integrates +eps n_a n_b regardless of sink_sign, so a
// deliberately corrupted sink (the verification suite's mutation hook)
// breaks the identity visibly instead of being absorbed into Q.
class ReactingSystem {
 public:
  // eps is k x k row-major: entry (a,b) multiplies n_a n_b in species a's
  // sink. Entries must be finite and nonnegative, the diagonal exactly zero
  // (no self-reaction). Diffusivities must lie in (0, 1].
  ReactingSystem(Grid2D g, std::shared_ptr<const FlowField> flow,
                 std::vector<double> nus, std::vector<double> eps,
                 StepperConfig cfg = {});

  // Two-species convenience with symmetric coupling eps in [0, 1]; eps = 0
  // degenerates to two independent passive scalars (used by controls).
  static ReactingSystem pair(Grid2D g, std::shared_ptr<const FlowField> flow,
                             double nu1, double nu2, double eps,
                             StepperConfig cfg = {});

  const Grid2D& grid() const { return engine_.grid(); }
  const StepperConfig& config() const { return engine_.config(); }
  const FlowField& flow() const { return engine_.flow(); }
  int species_count() const { return k_; }
  double nu(int a) const { return species_[check(a)].heat.nu(); }
  double eps(int a, int b) const { return eps_[check(a) * k_ + check(b)]; }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }

  // Loads one species' density at the current time (either representation;
  // dealiasing band applied on entry). Also raises the negativity tolerance
  // scale to this field's sup norm.
  void set_state(int a, const Field2D& f);

  void step();          // one step of the configured dt
  void step(double h);  // one step of size h
  void advance_to(double t_end);

  Field2D snapshot(int a);           // physical values, canonical frame
  Field2D snapshot_spectral(int a);  // half-layout coefficients, canonical

  double mass(int a) const;     // grid mean; equals the L1 norm when n >= 0
  std::vector<double> masses() const;
  double mass_all() const;      // sum of species masses
  double l2(int a);
  double linf(int a);
  double min_value(int a);
  double l2_x_avg(int a);       // L2 norm of the x average <n_a>(y)
  double l2_remainder(int a);   // L2 norm of n_a - <n_a>

  // Cumulative mass removed from species a by its sink.
  double reacted_mass(int a) const { return q_[check(a)]; }
  // Two-species Q(t); the two per-species ledgers agree to round-off when
  // eps is symmetric, and this returns the first.
  double reacted_mass() const;
  double reacted_mass_all() const;  // sum over species, pairs with mass_all

  // Appends one passive channel per species, initialized from the current
  // densities. Respawning replaces the previous twins.
  void spawn_twins();
  bool has_twins() const { return !twins_.empty(); }
  double twin_spawn_time() const;
  Field2D twin_snapshot(int a);
  double twin_mass(int a) const;
  double twin_gap_l1(int a);   // mean |twin_a - n_a|; equals the mass a lost
  double twin_min_gap(int a);  // min over the grid of twin_a - n_a

  // Densities must stay above -tolerance; a step that lands below aborts
  // with a diagnostic. The scale is the largest sup norm loaded so far.
  double negativity_tolerance() const { return 1e-8 * neg_scale_; }

  // Test hook for the verification suite: -1 flips the sink sign so the
  // identity checks demonstrably fail. Only +1 and -1 are accepted.
  void set_sink_sign(double s);

 private:
  struct Channel {
    Channel(Grid2D g, double nu_c)
        : heat(g, nu_c),
          c(g.spectral_size()),
          acc(g.spectral_size()),
          vs(g.spectral_size()),
          ec(g.spectral_size()),
          kd(g.spectral_size()),
          phys(g.size()) {}
    HeatFactor heat;
    aligned_vector<cx> c, acc, vs, ec, kd;
    aligned_vector<double> phys;
    bool sink_active = false;  // row of eps has a positive entry
    bool needs_phys = false;   // appears in any positive eps entry
  };

  int check(int a) const;
  int check_twin(int a) const;
  Channel& chan(int i) { return i < k_ ? species_[i] : twins_[i - k_]; }
  std::vector<cx*> state_list();
  void canonical();
  double sink_stage(Channel& ch, int a);  // builds kd addend, returns q rate

  TransportEngine engine_;
  std::vector<double> eps_;
  int k_ = 0;
  double t_ = 0.0;
  double sink_sign_ = 1.0;
  double neg_scale_ = 0.0;
  double twin_t0_ = 0.0;
  std::vector<Channel> species_;
  std::vector<Channel> twins_;
  std::vector<double> q_;          // per-species reacted mass
  aligned_vector<double> rhs_;     // shared sink scratch (physical)
  aligned_vector<cx> sspec_;       // shared sink scratch (spectral)
  aligned_vector<double> diff_;    // twin gap scratch
};

}  // namespace reactmix

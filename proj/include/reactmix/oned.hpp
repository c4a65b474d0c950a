#pragma once

#include <string>
#include <vector>

#include "reactmix/fft.hpp"
#include "reactmix/field.hpp"
#include "reactmix/species.hpp"
#include "reactmix/stepper.hpp"

namespace reactmix {

// Zero set of the profile difference q = n1 - n2 at one instant. Each
// retained location brackets a genuine sign change of the band-limited
// interpolant; zeros the interpolant only touches (slope below the
// tangential threshold) are excluded from the flux sum and counted in
// tangential_skipped. flux = nu * sum of |dq/dy| over retained crossings,
// the rate at which diffusion feeds mass across the interface.
struct CrossingReport {
  double t = 0.0;
  std::vector<double> locations;  // crossing positions in [-1/2, 1/2)
  std::vector<double> slopes;     // |dq/dy| at each retained crossing
  int tangential_skipped = 0;
  double flux = 0.0;
  int count() const { return int(locations.size()); }
};

std::string crossing_csv_header();  // "t,count,flux"
std::string crossing_csv_row(const CrossingReport& r);

// Companion one-dimensional reacting pair
//
//   d/dt n_a = nu d^2/dy^2 n_a - eps n1 n2,        a = 1, 2,
//
// integrated with the same integrating-factor RK4 as the 2D system. Under a
// shear along x the x averages of a 2D pair obey exactly this system plus a
// fluctuation coupling, which makes the companion a quantitative comparison
// object: the difference n1 - n2 obeys the pure heat equation (the identical
// sink cancels), so it stays equal to the averaged 2D difference, and its
// sign changes carry the diffusive flux that feeds the minority species.
// The ledger I(t) accumulates eps * integral(n1 n2) with the same stage
// weights as the integrator, so it matches the per-species mass drop to
// round-off.
class OneDSystem {
 public:
  OneDSystem(Grid1D g, double nu, double eps, StepperConfig cfg = {},
             double t0 = 0.0);

  const Grid1D& grid() const { return g_; }
  const StepperConfig& config() const { return cfg_; }
  double nu() const { return nu_; }
  double eps() const { return eps_; }
  double time() const { return t_; }
  double spawn_time() const { return t0_; }
  double reacted_mass() const { return ledger_; }

  // Loads one profile (a = 0 or 1), either representation; the dealiasing
  // band is applied on entry when enabled.
  void set_profile(int a, const Field1D& f);

  Field1D profile(int a);        // physical snapshot
  Field1D difference();          // spectral snapshot of n1 - n2
  Field1D difference_profile();  // the same, sampled on the grid

  double mass(int a);
  double linf(int a);
  double min_value(int a);
  double min_mass();          // || min(n1, n2) ||_1 by the grid quadrature

  void step();                // one step of the configured dt
  void step(double h);
  void advance_to(double t_end);

 private:
  int check(int a) const;
  void ensure_heat(double h);
  void to_phys(const aligned_vector<cx>& c, aligned_vector<double>& p);

  Grid1D g_;
  StepperConfig cfg_;
  double nu_, eps_;
  double t_ = 0.0, t0_ = 0.0;
  double ledger_ = 0.0;
  double neg_scale_ = 0.0;
  LineWorkspace ws_;
  double heat_h_ = -1.0;
  aligned_vector<double> e_;                 // per-mode half-step heat factor
  aligned_vector<cx> c_[2], acc_[2], vs_[2], ec_[2], kd_;
  aligned_vector<double> p_[2], rhs_;
};

// Seeds the companion system from the current x averages of a two-species
// run. Requires exactly two species, equal viscosities, and a flow under
// which x averaging commutes with the dynamics (no flow, or a static shear
// along x); anything else is rejected. A positive dt_override replaces the
// inherited step size: line steps are cheap, and audits that integrate
// fluxes in time (the min-mass balance) lose O(dt^2) accuracy otherwise.
OneDSystem spawn_1d(ReactingSystem& sys, double dt_override = 0.0);

// Max over y of |(n1 - n2)(y) - (<n1> - <n2>)(y)| between a 2D run and its
// companion at the same time. Both differences obey the heat equation from
// shared initial data, so this vanishes in the continuum; discretely it
// stays at round-off level when both systems step in lockstep.
double translation_check(ReactingSystem& sys2d, OneDSystem& sys1d);

// One lockstep sample of the pair of systems: the L1 distances between the
// averaged 2D densities and the companion profiles, and the fluctuation
// interaction integral(|<n1' n2'>|) dy, where n' = n - <n> is the part the
// shear acts on.
struct DeviationSample {
  double t = 0.0;
  double dist1 = 0.0, dist2 = 0.0;
  double fluct_interaction = 0.0;
};
DeviationSample deviation_sample(ReactingSystem& sys2d, OneDSystem& sys1d);

// Growth of the averaged-vs-companion L1 distances over a trajectory against
// the accumulated fluctuation interaction: lhs_a = dist_a(end) - dist_a(0)
// must stay below rhs = eps * integral of fluct_interaction dt (trapezoid).
struct DeviationBound {
  double lhs1 = 0.0, lhs2 = 0.0, rhs = 0.0;
};
DeviationBound deviation_bound_check(const std::vector<DeviationSample>& traj,
                                     double eps);

// Locates the sign changes of n1 - n2 on the current state: grid bracketing
// plus bisection on the band-limited interpolant to 1e-12 in y, slope
// evaluated spectrally at each root. Tangential zeros (slope below
// 1e-8 * density scale) are excluded and counted.
CrossingReport crossings(OneDSystem& sys);

// Advances the system to t_end sampling every step, and checks the exchange
// identity for the smaller-density mass: the drop of ||min(n1, n2)||_1 must
// equal the reacted mass minus the time integral of the crossing flux.
// The endpoint masses are integrated piecewise between the located roots
// with the exact antiderivative of the band-limited state, so the kink of
// min(n1, n2) costs no quadrature error; the flux integral is a per-step
// trapezoid and carries the only O(dt^2) term of the audit.
struct BalanceResult {
  double residual = 0.0;       // | min drop + ledger delta - flux integral |
  double min_start = 0.0, min_end = 0.0;
  double ledger_delta = 0.0;
  double flux_integral = 0.0;  // trapezoid over steps
  std::vector<CrossingReport> reports;
};
BalanceResult min_mass_balance(OneDSystem& sys, double t_end);

}  // namespace reactmix

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "reactmix/fft.hpp"
#include "reactmix/field.hpp"
#include "reactmix/flow.hpp"
#include "reactmix/grid.hpp"

namespace reactmix {

struct StepperConfig {
  double dt = 1e-3;
  bool dealias = true;
  // Courant number for the advective step bound dt <= cfl_advect * dx / |u|.
  double cfl_advect = 0.5;
  // Bound on the reaction rate resolved per step: dt * eps * max|n| <=
  // cfl_react (enforced by the reacting system, carried here so one config
  // describes a run).
  double cfl_react = 0.1;
  // Disable the pure-shear fast path; used by the path equivalence tests.
  bool force_general_path = false;
};

// How one step will evaluate the advection term.
enum class StepPath {
  pure_heat,    // u = 0 on the whole step: exact integrating factor only
  mixed_shear,  // single-axis shear: banded column transforms, no r2c pair
  general       // physical-space u.grad(n) from sampled velocities
};

struct StepPlan {
  double t0 = 0.0;
  double h = 0.0;
  StepPath path = StepPath::general;
  bool transposed = false;               // frame the state must be in
  FlowField::ShearAt stage[3];           // shear data at t0, t0+h/2, t0+h
};

// Table of exp(-4 pi^2 nu |k|^2 h / 2), the diffusion propagator over half a
// step, in the half-spectrum layout. Rebuilt only when h changes.
class HeatFactor {
 public:
  HeatFactor(Grid2D g, double nu) : g_(g), nu_(nu), e_(g.spectral_size()) {}
  void ensure(double h);
  const double* data() const { return e_.data(); }
  double nu() const { return nu_; }

 private:
  Grid2D g_;
  double nu_;
  double h_ = -1.0;
  aligned_vector<double> e_;
};

// Advection machinery shared by the passive stepper and the reacting system:
// step planning (path choice, CFL checks), the frame bookkeeping that lets
// shear along y reuse the shear-along-x code through an exact spectral
// transpose, and the advection stage derivative itself. Viscosity does not
// enter; diffusion lives in the callers' HeatFactor tables.
class TransportEngine {
 public:
  TransportEngine(Grid2D g, std::shared_ptr<const FlowField> flow,
                  StepperConfig cfg);

  const Grid2D& grid() const { return g_; }
  const FlowField& flow() const { return *flow_; }
  const StepperConfig& config() const { return cfg_; }
  SpectralWorkspace& workspace() { return ws_; }
  bool transposed() const { return transposed_; }

  // Verifies the advective step bound over [t, t+h] and picks path and frame.
  // Throws CflError when h is too large for the window's peak speed.
  StepPlan plan_step(double t, double h) const;

  // Brings every listed state array into the plan's frame (exact coefficient
  // shuffle; a later shuffle back loses nothing). All spectral state that
  // will touch this engine must be listed.
  void ensure_frame(const StepPlan& plan, std::span<cx* const> states);
  void to_canonical(std::span<cx* const> states);

  // out = dealiased advection stage derivative -u.grad(in) at stage time
  // index 0..2 (t0, t0+h/2, t0+h), honoring the plan's path and frame.
  void advect_stage(const StepPlan& plan, int time_index, const cx* in,
                    cx* out);

  // Largest dt the advective bound allows for this flow, or +inf when the
  // flow is zero.
  double max_stable_dt() const;

 private:
  void transpose_state(cx* a);
  void ensure_profile_table(const ShearProfile* p);

  Grid2D g_;
  std::shared_ptr<const FlowField> flow_;
  StepperConfig cfg_;
  SpectralWorkspace ws_;
  bool transposed_ = false;

  aligned_vector<cx> tr_;        // transpose target / deriv scratch
  aligned_vector<double> dfx_, dfy_, ux_, uy_, rhs_;
  const ShearProfile* ptab_for_ = nullptr;
  aligned_vector<double> ptab_;  // p(y_j) / ny, folds the col_forward scale
};

// Passive scalar advected by the flow and diffused with viscosity nu, stepped
// with the classical four-stage scheme under the exact diffusion integrating
// factor. With u = 0 every step reduces to the exact heat propagator.
class ScalarTransport {
 public:
  ScalarTransport(Grid2D g, std::shared_ptr<const FlowField> flow, double nu,
                  StepperConfig cfg);

  const Grid2D& grid() const { return engine_.grid(); }
  const StepperConfig& config() const { return engine_.config(); }
  double nu() const { return heat_.nu(); }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }

  // Loads a field (either representation) as the state at the current time.
  // The dealiasing band is applied on entry when enabled.
  void set_state(const Field2D& f);

  void step();          // one step of the configured dt
  void step(double h);  // one step of size h
  void advance_to(double t_end);  // full steps plus one shortened final step

  Field2D snapshot();           // physical values, canonical frame
  Field2D snapshot_spectral();  // half-layout coefficients, canonical frame

  double mass() const;    // grid mean, frame independent
  double l2();            // sqrt(mean(n^2))
  double l2_x_avg();      // L2 norm of the x average <n>(y)
  double l2_remainder();  // L2 norm of n - <n>

 private:
  TransportEngine engine_;
  HeatFactor heat_;
  double t_ = 0.0;
  aligned_vector<cx> c_, kd_, vs_, acc_, ec_;
};

struct TransportSample {
  double t = 0.0;
  Field2D field;
};

// Advances to t_end, collecting the initial state, every k-th full step, and
// the final time. t_end = 3 dt with k = 1 yields four samples.
std::vector<TransportSample> run_until(ScalarTransport& st, double t_end,
                                       int every_k_steps = 1);

}  // namespace reactmix

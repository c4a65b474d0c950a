#pragma once

// Experiment configuration: a strict JSON schema describing one campaign
// (which experiment to run, on what grid, with which flow, over which
// parameter lists), plus dotted-key overrides and a stable content hash.
//
// Parsing is strict: unknown keys anywhere in the document are rejected with
// a message listing the valid keys for that section, type mismatches name
// the offending key, and syntax errors carry line and column.  After
// validation the effective configuration (user values merged over defaults)
// is re-serialized with sorted keys; the FNV-1a 64-bit hash of that
// serialization identifies the run and is stamped on every output row.

#include <cstdint>
#include <string>
#include <vector>

#include "reactmix/diagnostics.hpp"
#include "reactmix/stepper.hpp"

namespace reactmix {

enum class ExperimentKind {
  ed_rate_sweep,        // passive-scalar decay rates across nu; log-log slope
  alternating_halving,  // period-over-period contraction under switched shear
  halflife_sweep,       // reacted-mass half-lives across (nu, eps)
  multispecies,         // k-species bookkeeping run
  shear_regime,         // two-species shear run with companion-profile audit
  verify_suite,         // canned invariant checks, machine-readable report
};

std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);

// Flow constructor selection.  "type" picks the velocity field; the profile
// fields only apply to the sheared types.
struct FlowSpec {
  std::string type = "zero";    // zero | shear-x | shear-y | alternating
  std::string profile = "sin";  // sin | flat-critical
  double amplitude = 1.0;
  int wavenumber = 1;  // sin profile: u(y) = amplitude * sin(2*pi*wavenumber*y)
  int flatness = 1;    // flat-critical profile: vanishing order at the critical point
  double K = 2.0;      // alternating flow: block length K / sqrt(nu)
};

// Initial-data presets.  All presets are smooth, nonnegative where they feed
// reacting runs, and deterministic given the seed.
struct InitialSpec {
  std::string preset = "uniform";
  // uniform:          n_a = value everywhere.
  // separated-blobs:  periodized Gaussians centered at (-separation, 0) and
  //                   (+separation, 0), width sigma, height amplitude,
  //                   tails truncated below 1e-14.
  // y-blobs:          same but x-independent (centers -separation, +separation
  //                   in y), so the run stays exactly one-dimensional under an
  //                   x-shear.
  // x-sine:           amplitude * sin(2 pi x) * (1 + 0.5 cos(2 pi y));
  //                   zero x-average on every horizontal line (passive runs).
  // y-sine:           amplitude * sin(2 pi wavenumber y) (passive runs).
  // random-modes:     band-limited field with unit-normal coefficients on
  //                   modes |k| <= modes, zero x-average rows only, drawn
  //                   from the seed (passive runs).
  double sigma = 0.08;
  double separation = 0.25;
  double amplitude = 1.0;
  double value = 1.0;
  int modes = 3;
};

// Time discretization and budget policy.
struct TimeSpec {
  double dt = 0.0;       // 0: derive from the advective bound with `safety`
  double t_end = 1.0;    // model-time horizon (per cell)
  int record_every = 8;  // diagnostics cadence in steps
  int periods = 4;       // alternating-halving: switching periods measured
  double wall_max_s = 0.0;  // per-cell wall-clock cap; 0 = uncapped
  double safety = 0.8;      // fraction of the advective bound used when dt==0
  double fit_lo = 0.2;      // decay-fit window as fractions of the horizon
  double fit_hi = 0.9;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::verify_suite;
  int grid = 64;
  FlowSpec flow;
  std::vector<double> nu = {1e-3};  // each in (0, 1]
  std::vector<double> eps = {0.5};  // each >= 0
  std::vector<double> k_list;       // alternating-halving sweep; empty -> {flow.K}
  int species = 2;
  std::vector<double> eps_matrix;  // row-major species x species; empty -> symmetric pair
  InitialSpec initial;
  TimeSpec time;
  StepperConfig stepper;
  AssumptionThresholds thresholds;
  double c_cal = 1.0;  // calibration constant in the characteristic times
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int jobs = 1;            // worker-pool width for sweep cells
  bool mutate_sink = false;  // verify-suite fault injection: flip the sink sign

  std::string canonical;  // sorted-key serialization of the effective document
  std::string hash;       // FNV-1a 64 of `canonical`, 16 hex digits
};

// Parses a JSON document, optionally applying dotted-key overrides
// ("flow.type=alternating", "nu=[1e-3,3e-4]") left to right before
// validation.  Override values are parsed as JSON when possible and taken as
// strings otherwise.  Throws ConfigError on any syntax, schema, or range
// violation.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});

// Reads the file and forwards to parse_config_text.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

// Effective-document serialization for a config assembled in code (tests,
// defaults); fills `canonical` and `hash` and validates ranges.
void finalize_config(ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

// Hash of this configuration restricted to a single sweep cell: the nu/eps/K
// lists are replaced by one-element lists holding the cell's values.  Every
// emitted summary row carries its cell hash so rows remain attributable
// after files are merged.
std::string cell_hash(const ExperimentConfig& cfg, double nu, double eps, double K);

}  // namespace reactmix

#pragma once

// Campaign driver.  Takes a validated ExperimentConfig, expands its
// parameter lists into cells, runs the cells on a small worker pool, and
// writes three kinds of artifact into the output directory:
//
//   * one CSV per cell with the run's time series (fixed column order),
//   * summary.csv with one row per cell (fixed column order per campaign),
//   * manifest.json naming every file written, with per-cell status.
//
// Determinism contract: the same configuration (including seed) produces
// byte-identical per-cell and summary CSVs.  Workers write no shared state;
// each cell owns its file, and the summary is assembled by the caller thread
// in parameter-list order after all cells finish.  Removing a cell from a
// sweep therefore changes no other cell's output.  Every CSV row carries the
// cell-restricted config hash so merged tables stay attributable.
//
// Exit-code convention (mirrored by the command-line tool): 0 when every
// cell completed, 2 when any cell failed or was censored by a budget, and
// configuration errors throw before anything is written.

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "reactmix/config.hpp"
#include "reactmix/field.hpp"
#include "reactmix/flow.hpp"
#include "reactmix/grid.hpp"

namespace reactmix {

inline constexpr const char* kCodeVersion = "1.0.0";

// Velocity field selected by the config.  The alternating flow needs the
// cell's diffusivity (its block length is K / sqrt(nu)); k_override > 0
// replaces spec.K for sweeps over K.
std::shared_ptr<const FlowField> build_flow(const FlowSpec& spec, double nu,
                                            double k_override = 0.0);

// Initial density for species `a` of `count` under the configured preset.
// All presets are deterministic given the seed; see InitialSpec for the
// catalogue.  Species index only matters for the blob presets (each species
// gets its own center) and for sign alternation in x-sine pairs.
Field2D build_initial(const Grid2D& g, const InitialSpec& spec, int a, int count,
                      std::uint64_t seed);

// Time step per the policy: an explicit time.dt wins; otherwise
// safety * cfl_advect * dx / max|u| (capped by `cap` when cap > 0).  Flows
// with no advective bound (zero velocity) fall back to cap or t_end / 64.
double choose_dt(const ExperimentConfig& cfg, const FlowField& flow, double cap = 0.0);

// Resolution policy: the finest length scale the run can generate is about
// sqrt(nu / sup|grad u|); the grid must put at least four cells under it.
// Violating cells still run but their rows are marked under_resolved = 1.
bool under_resolved(const Grid2D& g, const FlowField& flow, double nu);

// Ordinary least squares y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct CellOutcome {
  std::string name;  // parameter-derived identifier, doubles as the file stem
  std::string hash;  // cell-restricted config hash
  std::string csv;   // per-cell series file, relative to out_dir ("" if none)
  bool ok = true;
  bool censored = false;  // stopped by a model-time or wall-clock budget
  std::string note;       // human-readable failure / censoring / marking detail
  // Summary columns in campaign order; every cell of a campaign reports the
  // same keys so the summary CSV is rectangular.
  std::vector<std::pair<std::string, double>> stats;
};

struct CampaignResult {
  ExperimentKind kind = ExperimentKind::verify_suite;
  std::string out_dir;
  std::string summary_path;
  std::string manifest_path;
  std::vector<CellOutcome> cells;
  // Campaign-level numbers (rate-vs-nu slopes, affine-fit coefficients, ...);
  // also echoed into the manifest.
  std::vector<std::pair<std::string, double>> totals;
  int exit_code = 0;
};

// Runs the campaign selected by cfg.kind and writes its artifacts under
// cfg.out_dir (created if missing).  Per-cell failures are recorded, not
// thrown; configuration problems throw ConfigError before any file exists.
// `log`, when set, receives one progress line per finished cell.
CampaignResult run_campaign(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Runs `fn(cell_index)` for indices [0, n) on `jobs` threads.  Blocks until
// all cells finish; exceptions must be handled inside fn.
void run_cells(int jobs, int n, const std::function<void(int)>& fn);

}  // namespace reactmix

#include "reactmix/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "reactmix/diagnostics.hpp"
#include "reactmix/errors.hpp"
#include "reactmix/kernels.hpp"
#include "reactmix/oned.hpp"
#include "reactmix/species.hpp"
#include "reactmix/stepper.hpp"

namespace fs = std::filesystem;

namespace reactmix {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Short stable decimal form for file names and cell names.
std::string param_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
  out << content;
}

// Periodized Gaussian bump on the unit circle, height 1 at z = 0.
double periodized_gaussian(double z, double sigma) {
  const int m = static_cast<int>(std::ceil(8.5 * sigma + 0.5)) + 1;
  double s = 0.0;
  for (int i = -m; i <= m; ++i) {
    double d = z - i;
    s += std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return s;
}

struct WallBudget {
  explicit WallBudget(double cap_s)
      : cap(cap_s), start(std::chrono::steady_clock::now()) {}
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
  bool expired() const { return cap > 0.0 && elapsed() > cap; }
  double cap;
  std::chrono::steady_clock::time_point start;
};

// The passive campaigns need data the shear can act on without a mean drift
// along x; reject presets that put mass into the x average.
void require_zero_x_average(const Field2D& f0, const std::string& preset) {
  Field1D avg = x_average(f0);
  double linf_avg = stats(avg).linf;
  double linf_f = 0.0;
  for (double v : f0.phys) linf_f = std::max(linf_f, std::abs(v));
  if (linf_avg > 1e-10 * std::max(linf_f, 1e-300))
    throw ConfigError("initial preset '" + preset +
                      "' has a nonzero x average; sheared decay campaigns need "
                      "zero-x-average data (x-sine or random-modes)");
}

std::string sanitize_note(std::string s) {
  for (char& c : s) {
    if (c == ',') c = ';';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

double stat_of(const CellOutcome& cell, const std::string& key) {
  for (const auto& [k, v] : cell.stats)
    if (k == key) return v;
  return kNaN;
}

// ---------------------------------------------------------------------------
// Artifact writers.  The summary collects the union of stat keys in first
// appearance order, so all cells of a campaign produce one rectangular table.
// ---------------------------------------------------------------------------

std::string summary_csv(const std::vector<CellOutcome>& cells) {
  std::vector<std::string> keys;
  for (const auto& c : cells)
    for (const auto& [k, v] : c.stats)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  std::string out = "name";
  for (const auto& k : keys) out += "," + k;
  out += ",ok,censored,note,hash\n";
  for (const auto& c : cells) {
    out += c.name;
    for (const auto& k : keys) out += "," + csv_number(stat_of(c, k));
    out += c.ok ? ",1" : ",0";
    out += c.censored ? ",1" : ",0";
    out += "," + sanitize_note(c.note);
    out += "," + c.hash + "\n";
  }
  return out;
}

std::string utc_now() {
  std::time_t tt =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

void write_manifest(const ExperimentConfig& cfg, CampaignResult& result,
                    double wall_seconds) {
  nlohmann::json m;
  m["kind"] = to_string(cfg.kind);
  m["code_version"] = kCodeVersion;
  m["config_hash"] = cfg.hash;
  m["config"] = nlohmann::json::parse(cfg.canonical);
  m["generated_at_utc"] = utc_now();
  m["wall_seconds"] = wall_seconds;
  m["summary_csv"] = "summary.csv";
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json e;
    e["name"] = c.name;
    e["hash"] = c.hash;
    e["csv"] = c.csv;
    e["ok"] = c.ok;
    e["censored"] = c.censored;
    e["note"] = c.note;
    cells.push_back(e);
  }
  m["cells"] = cells;
  nlohmann::json totals = nlohmann::json::object();
  for (const auto& [k, v] : result.totals) {
    if (std::isfinite(v))
      totals[k] = v;
    else
      totals[k] = nullptr;
  }
  m["totals"] = totals;
  m["exit_code"] = result.exit_code;
  write_file(result.manifest_path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Campaign implementations.  Each returns its cells (files already written)
// and appends campaign-level totals.
// ---------------------------------------------------------------------------

// Theoretical decay exponent of the dissipation-rate-vs-nu power law for the
// configured velocity profile: (j+1)/(j+3) with j the vanishing order of the
// profile's derivative at its critical points, and 1 for no flow at all.
double expected_exponent(const FlowSpec& flow) {
  if (flow.type == "zero") return 1.0;
  int j = flow.profile == "flat-critical" ? flow.flatness : 1;
  return (j + 1.0) / (j + 3.0);
}

// Runs a passive scalar until l2 drops below `stop_frac` of its initial
// value (or t_end / budget), recording (t, l2) every record_every steps.
struct PassiveDecay {
  Series series;
  bool censored = false;
  std::string note;
};

PassiveDecay run_passive_decay(ScalarTransport& st, double dt, double t_end,
                               int record_every, double stop_frac,
                               const WallBudget& budget) {
  PassiveDecay out;
  const double l2_0 = st.l2();
  out.series.emplace_back(st.time(), l2_0);
  long long step = 0;
  while (st.time() < t_end - 1e-12) {
    st.step(dt);
    ++step;
    if (step % record_every == 0 || st.time() >= t_end - 1e-12) {
      double v = st.l2();
      out.series.emplace_back(st.time(), v);
      if (stop_frac > 0.0 && v <= stop_frac * l2_0) break;
      if (budget.expired()) {
        out.censored = true;
        out.note = "wall-clock budget exhausted at t = " + param_str(st.time());
        break;
      }
    }
  }
  return out;
}

std::string series_csv(const Series& s, const std::string& value_name,
                       const std::string& hash) {
  std::string out = "t," + value_name + ",hash\n";
  for (const auto& [t, v] : s)
    out += csv_number(t) + "," + csv_number(v) + "," + hash + "\n";
  return out;
}

CellOutcome ed_rate_cell(const ExperimentConfig& cfg, double nu,
                         const fs::path& out_dir) {
  CellOutcome cell;
  cell.name = "nu" + param_str(nu);
  cell.hash = cell_hash(cfg, nu, cfg.eps.empty() ? 0.0 : cfg.eps[0], cfg.flow.K);
  try {
    Grid2D g(cfg.grid, cfg.grid);
    auto flow = build_flow(cfg.flow, nu);
    Field2D f0 = build_initial(g, cfg.initial, 0, 1, cfg.seed);
    if (flow->kind() != FlowField::Kind::zero)
      require_zero_x_average(f0, cfg.initial.preset);
    bool marked = under_resolved(g, *flow, nu);

    StepperConfig sc = cfg.stepper;
    sc.dt = choose_dt(cfg, *flow);
    ScalarTransport st(g, flow, nu, sc);
    st.set_state(f0);

    WallBudget budget(cfg.time.wall_max_s);
    PassiveDecay run = run_passive_decay(st, sc.dt, cfg.time.t_end,
                                         cfg.time.record_every, 0.05, budget);
    cell.censored = run.censored;
    cell.note = run.note;
    if (marked) {
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += "under-resolved";
    }

    cell.csv = cell.name + ".csv";
    write_file(out_dir / cell.csv, series_csv(run.series, "l2", cell.hash));

    // A failed fit is a recorded per-cell outcome, not a sweep abort; the
    // series file and the resolution marking survive it.
    const double t_stop = run.series.back().first;
    double rate = kNaN, r_squared = kNaN, samples = 0.0;
    try {
      RateFit fit = fit_decay_rate(run.series, cfg.time.fit_lo * t_stop,
                                   cfg.time.fit_hi * t_stop);
      rate = fit.rate;
      r_squared = fit.r_squared;
      samples = static_cast<double>(fit.samples);
    } catch (const Error& e) {
      cell.ok = false;
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += std::string("fit failed: ") + e.what();
    }
    cell.stats = {{"nu", nu},
                  {"rate", rate},
                  {"r_squared", r_squared},
                  {"samples", samples},
                  {"t_stop", t_stop},
                  {"bare_rate", kTwoPi * kTwoPi * nu},
                  {"under_resolved", marked ? 1.0 : 0.0}};
    // bare_rate is 4 pi^2 nu: the no-flow decay rate of the slowest mode,
    // the reference value for control arms.
  } catch (const Error& e) {
    cell.ok = false;
    cell.note = e.what();
    cell.stats = {{"nu", nu},
                  {"rate", kNaN},
                  {"r_squared", kNaN},
                  {"samples", 0.0},
                  {"t_stop", kNaN},
                  {"bare_rate", kTwoPi * kTwoPi * nu},
                  {"under_resolved", kNaN}};
  }
  return cell;
}

void ed_rate_sweep(const ExperimentConfig& cfg, CampaignResult& result,
                   const fs::path& out_dir, std::ostream* log) {
  result.cells.resize(cfg.nu.size());
  run_cells(cfg.jobs, static_cast<int>(cfg.nu.size()), [&](int i) {
    result.cells[i] = ed_rate_cell(cfg, cfg.nu[i], out_dir);
    if (log) {
      static std::mutex mu;
      std::lock_guard<std::mutex> lock(mu);
      *log << "[cell] " << result.cells[i].name
           << (result.cells[i].ok ? " ok" : " failed") << "\n";
    }
  });

  std::vector<double> lx, ly;
  for (const auto& c : result.cells) {
    double rate = stat_of(c, "rate");
    if (c.ok && !c.censored && rate > 0.0) {
      lx.push_back(std::log(stat_of(c, "nu")));
      ly.push_back(std::log(rate));
    }
  }
  if (lx.size() >= 2) {
    LineFit lf = linear_fit(lx, ly);
    result.totals = {{"slope", lf.slope},
                     {"slope_r_squared", lf.r_squared},
                     {"expected_exponent", expected_exponent(cfg.flow)},
                     {"cells_fit", static_cast<double>(lx.size())}};
  } else {
    result.totals = {{"slope", kNaN},
                     {"slope_r_squared", kNaN},
                     {"expected_exponent", expected_exponent(cfg.flow)},
                     {"cells_fit", static_cast<double>(lx.size())}};
  }
}

CellOutcome halving_cell(const ExperimentConfig& cfg, double K, bool flow_on,
                         const fs::path& out_dir) {
  const double nu = cfg.nu[0];
  CellOutcome cell;
  cell.name = "K" + param_str(K) + (flow_on ? "" : "-flowoff");
  cell.hash = cell_hash(cfg, nu, cfg.eps.empty() ? 0.0 : cfg.eps[0], K);
  const int periods = cfg.time.periods;
  try {
    Grid2D g(cfg.grid, cfg.grid);
    auto flow = flow_on
                    ? build_flow(FlowSpec{"alternating", cfg.flow.profile,
                                          cfg.flow.amplitude, cfg.flow.wavenumber,
                                          cfg.flow.flatness, K},
                                 nu)
                    : std::make_shared<const FlowField>(FlowField::zero());
    Field2D f0 = build_initial(g, cfg.initial, 0, 1, cfg.seed);
    require_zero_x_average(f0, cfg.initial.preset);
    bool marked = flow_on && under_resolved(g, *flow, nu);

    const double period = 2.0 * K / std::sqrt(nu);
    StepperConfig sc = cfg.stepper;
    double dt0 = flow_on ? choose_dt(cfg, *flow) : period / 256.0;
    // Snap the step so switching-period boundaries land exactly on steps.
    const long long spp =
        std::max<long long>(1, static_cast<long long>(std::ceil(period / dt0)));
    sc.dt = period / static_cast<double>(spp);

    ScalarTransport st(g, flow, nu, sc);
    st.set_state(f0);

    Series dense;
    std::vector<double> boundary;
    boundary.push_back(st.l2());
    dense.emplace_back(0.0, boundary[0]);
    WallBudget budget(cfg.time.wall_max_s);
    bool censored = false;
    for (long long step = 1; step <= spp * periods; ++step) {
      st.step(sc.dt);
      if (step % cfg.time.record_every == 0 || step % spp == 0)
        dense.emplace_back(st.time(), st.l2());
      if (step % spp == 0) {
        boundary.push_back(st.l2());
        if (budget.expired() &&
            static_cast<int>(boundary.size()) - 1 < periods) {
          censored = true;
          cell.note = "wall-clock budget exhausted after " +
                      std::to_string(boundary.size() - 1) + " periods";
          break;
        }
      }
    }
    cell.censored = censored;
    if (marked) {
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += "under-resolved";
    }

    cell.csv = cell.name + ".csv";
    write_file(out_dir / cell.csv, series_csv(dense, "l2", cell.hash));

    cell.stats = {{"K", K},
                  {"flow_on", flow_on ? 1.0 : 0.0},
                  {"period", period}};
    double max_ratio = 0.0;
    for (int p = 1; p <= periods; ++p) {
      double r = (static_cast<int>(boundary.size()) > p && boundary[p - 1] > 0.0)
                     ? boundary[p] / boundary[p - 1]
                     : kNaN;
      cell.stats.emplace_back("ratio" + std::to_string(p), r);
      if (std::isfinite(r)) max_ratio = std::max(max_ratio, r);
    }
    bool complete = static_cast<int>(boundary.size()) > periods;
    cell.stats.emplace_back("max_ratio", complete ? max_ratio : kNaN);
    cell.stats.emplace_back("halved",
                            complete && max_ratio <= 0.5 ? 1.0 : 0.0);

    double rate_fit = kNaN;
    if (dense.size() >= 12) {
      try {
        RateFit fit = fit_decay_rate(dense, 0.0, dense.back().first + 1.0);
        rate_fit = fit.rate;
      } catch (const Error&) {
      }
    }
    cell.stats.emplace_back("rate_fit", rate_fit);
    cell.stats.emplace_back("rate_bound", std::log(2.0) * std::sqrt(nu) / (2.0 * K));
    cell.stats.emplace_back("flowoff_expected",
                            std::exp(-2.0 * kTwoPi * kTwoPi * K * std::sqrt(nu)));
    cell.stats.emplace_back("under_resolved", marked ? 1.0 : 0.0);
  } catch (const Error& e) {
    cell.ok = false;
    cell.note = e.what();
    if (cell.stats.empty()) cell.stats = {{"K", K}, {"flow_on", flow_on ? 1. : 0.}};
  }
  return cell;
}

void alternating_halving(const ExperimentConfig& cfg, CampaignResult& result,
                         const fs::path& out_dir, std::ostream* log) {
  std::vector<double> ks = cfg.k_list.empty()
                               ? std::vector<double>{cfg.flow.K}
                               : cfg.k_list;
  struct Job {
    double K;
    bool flow_on;
  };
  std::vector<Job> jobs;
  for (double k : ks) {
    jobs.push_back({k, true});
    jobs.push_back({k, false});
  }
  result.cells.resize(jobs.size());
  run_cells(cfg.jobs, static_cast<int>(jobs.size()), [&](int i) {
    result.cells[i] = halving_cell(cfg, jobs[i].K, jobs[i].flow_on, out_dir);
    if (log) {
      static std::mutex mu;
      std::lock_guard<std::mutex> lock(mu);
      *log << "[cell] " << result.cells[i].name
           << (result.cells[i].ok ? " ok" : " failed") << "\n";
    }
  });

  // Campaign question: does some K contract every measured period by half?
  double best_k = kNaN;
  for (const auto& c : result.cells)
    if (c.ok && !c.censored && stat_of(c, "flow_on") == 1.0 &&
        stat_of(c, "halved") == 1.0 && !(best_k <= stat_of(c, "K")))
      best_k = stat_of(c, "K");
  result.totals = {{"halving_K", best_k}};
}

CellOutcome halflife_cell(const ExperimentConfig& cfg, double nu, double eps,
                          const fs::path& out_dir) {
  CellOutcome cell;
  cell.name = "nu" + param_str(nu) + "-eps" + param_str(eps);
  cell.hash = cell_hash(cfg, nu, eps, cfg.flow.K);
  try {
    Grid2D g(cfg.grid, cfg.grid);
    auto flow = build_flow(cfg.flow, nu);
    bool marked =
        flow->kind() != FlowField::Kind::zero && under_resolved(g, *flow, nu);

    StepperConfig sc = cfg.stepper;
    sc.dt = choose_dt(cfg, *flow);
    ReactingSystem sys = ReactingSystem::pair(g, flow, nu, nu, eps, sc);
    sys.set_state(0, build_initial(g, cfg.initial, 0, 2, cfg.seed));
    sys.set_state(1, build_initial(g, cfg.initial, 1, 2, cfg.seed));

    Field2D s0 = sys.snapshot(0), s1 = sys.snapshot(1);
    const double overlap0 = overlap_mass(s0, s1);
    const double m0 = sys.mass(0);

    std::string rows = csv_header(2) + ",hash\n";
    Series mass_series;
    auto record = [&]() {
      DiagnosticsRecord r = probe(sys, cfg.thresholds);
      rows += csv_row(r) + "," + cell.hash + "\n";
      mass_series.emplace_back(r.t, r.mass[0]);
    };
    record();

    WallBudget budget(cfg.time.wall_max_s);
    long long step = 0;
    bool reached = false;
    while (sys.time() < cfg.time.t_end - 1e-12) {
      sys.step(sc.dt);
      ++step;
      if (step % cfg.time.record_every == 0 ||
          sys.time() >= cfg.time.t_end - 1e-12) {
        record();
        if (mass_series.back().second <= 0.5 * m0) {
          reached = true;
          break;
        }
        if (budget.expired()) {
          cell.censored = true;
          cell.note = "wall-clock budget exhausted at t = " + param_str(sys.time());
          break;
        }
      }
    }
    HalfLife hl = half_life(mass_series, 0.5);
    if (!reached && !hl.reached && !cell.censored) {
      cell.censored = true;
      cell.note = "half-life not reached by t_end = " + param_str(cfg.time.t_end);
    }
    if (marked) {
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += "under-resolved";
    }

    cell.csv = cell.name + ".csv";
    write_file(out_dir / cell.csv, rows);

    cell.stats = {{"nu", nu},
                  {"eps", eps},
                  {"inv_eps", eps > 0.0 ? 1.0 / eps : kNaN},
                  {"t_half", hl.reached ? hl.t : kNaN},
                  {"t_last", mass_series.back().first},
                  {"overlap0", overlap0},
                  {"under_resolved", marked ? 1.0 : 0.0}};
  } catch (const Error& e) {
    cell.ok = false;
    cell.note = e.what();
    cell.stats = {{"nu", nu},       {"eps", eps},          {"inv_eps", kNaN},
                  {"t_half", kNaN}, {"t_last", kNaN},      {"overlap0", kNaN},
                  {"under_resolved", kNaN}};
  }
  return cell;
}

void halflife_sweep(const ExperimentConfig& cfg, CampaignResult& result,
                    const fs::path& out_dir, std::ostream* log) {
  struct Job {
    double nu, eps;
  };
  std::vector<Job> jobs;
  for (double nu : cfg.nu)
    for (double eps : cfg.eps) jobs.push_back({nu, eps});
  result.cells.resize(jobs.size());
  run_cells(cfg.jobs, static_cast<int>(jobs.size()), [&](int i) {
    result.cells[i] = halflife_cell(cfg, jobs[i].nu, jobs[i].eps, out_dir);
    if (log) {
      static std::mutex mu;
      std::lock_guard<std::mutex> lock(mu);
      *log << "[cell] " << result.cells[i].name
           << (result.cells[i].ok ? " ok" : " failed") << "\n";
    }
  });

  // Affine law: T_half against 1/eps over the uncensored reacting cells.
  std::vector<double> x, y;
  for (const auto& c : result.cells) {
    double t_half = stat_of(c, "t_half");
    double inv_eps = stat_of(c, "inv_eps");
    if (c.ok && !c.censored && std::isfinite(t_half) && std::isfinite(inv_eps)) {
      x.push_back(inv_eps);
      y.push_back(t_half);
    }
  }
  if (x.size() >= 2) {
    LineFit lf = linear_fit(x, y);
    result.totals = {{"affine_slope", lf.slope},
                     {"affine_intercept", lf.intercept},
                     {"affine_r_squared", lf.r_squared},
                     {"cells_fit", static_cast<double>(x.size())}};
  } else {
    result.totals = {{"affine_slope", kNaN},
                     {"affine_intercept", kNaN},
                     {"affine_r_squared", kNaN},
                     {"cells_fit", static_cast<double>(x.size())}};
  }
}

void multispecies_run(const ExperimentConfig& cfg, CampaignResult& result,
                      const fs::path& out_dir, std::ostream*) {
  CellOutcome cell;
  cell.name = "run";
  cell.hash = cfg.hash;
  try {
    const int k = cfg.species;
    std::vector<double> eps_mat = cfg.eps_matrix;
    if (eps_mat.empty()) {
      if (k != 2)
        throw ConfigError("multispecies with species != 2 needs 'eps_matrix'");
      eps_mat = {0.0, cfg.eps[0], cfg.eps[0], 0.0};
    }
    std::vector<double> nus(static_cast<std::size_t>(k), cfg.nu[0]);
    if (static_cast<int>(cfg.nu.size()) == k) nus = cfg.nu;

    Grid2D g(cfg.grid, cfg.grid);
    auto flow = build_flow(cfg.flow, nus[0]);
    StepperConfig sc = cfg.stepper;
    sc.dt = choose_dt(cfg, *flow);
    ReactingSystem sys(g, flow, nus, eps_mat, sc);
    for (int a = 0; a < k; ++a)
      sys.set_state(a, build_initial(g, cfg.initial, a, k, cfg.seed));

    const double m_all_0 = sys.mass_all();
    double first_b1 = -1.0, first_b2 = -1.0;
    std::string rows = csv_header(k) + ",hash\n";
    auto record = [&]() {
      DiagnosticsRecord r = probe(sys, cfg.thresholds);
      rows += csv_row(r) + "," + cell.hash + "\n";
      if (!r.b1_ok && first_b1 < 0.0) first_b1 = r.t;
      if (!r.b2_ok && first_b2 < 0.0) first_b2 = r.t;
    };
    record();

    WallBudget budget(cfg.time.wall_max_s);
    long long step = 0;
    while (sys.time() < cfg.time.t_end - 1e-12) {
      sys.step(std::min(sc.dt, cfg.time.t_end - sys.time()));
      ++step;
      if (step % cfg.time.record_every == 0 ||
          sys.time() >= cfg.time.t_end - 1e-12) {
        record();
        if (budget.expired()) {
          cell.censored = true;
          cell.note = "wall-clock budget exhausted at t = " + param_str(sys.time());
          break;
        }
      }
    }

    cell.csv = "run.csv";
    write_file(out_dir / cell.csv, rows);

    double min_mass = sys.mass(0);
    for (int a = 1; a < k; ++a) min_mass = std::min(min_mass, sys.mass(a));
    double q_all_residual =
        std::abs(sys.reacted_mass_all() - (m_all_0 - sys.mass_all())) /
        std::max(m_all_0, 1e-300);
    cell.stats = {{"species", static_cast<double>(k)},
                  {"t_end", sys.time()},
                  {"q_all", sys.reacted_mass_all()},
                  {"q_all_residual", q_all_residual},
                  {"mass_all_end", sys.mass_all()},
                  {"min_mass_end", min_mass},
                  {"mass_ratio_end", min_mass > 0.0 ? sys.mass_all() / min_mass
                                                    : kNaN},
                  {"first_b1_violation", first_b1},
                  {"first_b2_violation", first_b2}};
  } catch (const Error& e) {
    cell.ok = false;
    cell.note = e.what();
  }
  result.cells.push_back(std::move(cell));
}

void shear_regime_run(const ExperimentConfig& cfg, CampaignResult& result,
                      const fs::path& out_dir, std::ostream* log) {
  CellOutcome cell;
  cell.name = "run";
  cell.hash = cfg.hash;
  const double nu = cfg.nu[0];
  const double eps = cfg.eps[0];
  try {
    if (cfg.flow.type != "shear-x" && cfg.flow.type != "zero")
      throw ConfigError(
          "the shear-regime campaign needs flow.type 'shear-x' or 'zero' so "
          "the averaged companion dynamics is exact");
    Grid2D g(cfg.grid, cfg.grid);
    auto flow = build_flow(cfg.flow, nu);
    bool marked =
        flow->kind() != FlowField::Kind::zero && under_resolved(g, *flow, nu);

    StepperConfig sc = cfg.stepper;
    sc.dt = choose_dt(cfg, *flow);
    ReactingSystem sys = ReactingSystem::pair(g, flow, nu, nu, eps, sc);
    sys.set_state(0, build_initial(g, cfg.initial, 0, 2, cfg.seed));
    sys.set_state(1, build_initial(g, cfg.initial, 1, 2, cfg.seed));
    if (sys.mass(0) > sys.mass(1) + 1e-12 * sys.mass(1))
      throw ConfigError(
          "shear-regime precondition violated: species 1 must not start with "
          "more mass than species 2");

    Field2D s0 = sys.snapshot(0), s1 = sys.snapshot(1);
    const double overlap0 = overlap_mass(s0, s1);
    const double m1_0 = sys.mass(0);
    double scale = 0.0;
    for (double v : s0.phys) scale = std::max(scale, std::abs(v));
    for (double v : s1.phys) scale = std::max(scale, std::abs(v));

    if (overlap0 <= 0.0) {
      cell.note = "degenerate: zero initial overlap, comparison skipped";
      cell.stats = {{"nu", nu},       {"eps", eps},     {"overlap0", 0.0},
                    {"rate", kNaN},   {"t0", kNaN},     {"t1", kNaN},
                    {"c_cal_pass", kNaN}, {"consumed", 0.0}, {"target", 0.0}};
      result.cells.push_back(std::move(cell));
      return;
    }

    // The data is x-independent and the flow an x-shear, so the x-averaged
    // dynamics relaxes at the bare heat rate of the slowest transverse mode.
    const double rate = kTwoPi * kTwoPi * nu;
    const double sum_l2 = sys.l2(0) + sys.l2(1);

    // ---- companion-audit battery over [0, t_end] -------------------------
    const double t_battery = cfg.time.t_end;
    // The balance audit integrates the crossing flux with a per-step
    // trapezoid, so its residual carries an O(dt^2) quadrature error on top
    // of the identity being checked. Line steps are cheap; run the audit
    // companion at a refined step so the quadrature error stays well under
    // the reported residual scale.
    OneDSystem balance_sys = spawn_1d(sys, sc.dt / 8.0);
    BalanceResult balance = min_mass_balance(balance_sys, t_battery);
    std::string cross_rows = crossing_csv_header() + ",hash\n";
    for (const auto& rep : balance.reports)
      cross_rows += crossing_csv_row(rep) + "," + cell.hash + "\n";
    write_file(out_dir / "crossings.csv", cross_rows);

    OneDSystem companion = spawn_1d(sys);
    std::string batt_rows = "t,translation,dist1,dist2,margin1,margin2,hash\n";
    std::string diag_rows = csv_header(2) + ",hash\n";
    double translation_max = 0.0, margin_max = 0.0;
    double cum = 0.0;
    DeviationSample prev = deviation_sample(sys, companion);
    const double d1_0 = prev.dist1, d2_0 = prev.dist2;
    auto battery_record = [&]() {
      double tr = translation_check(sys, companion);
      translation_max = std::max(translation_max, tr);
      DeviationSample s = deviation_sample(sys, companion);
      cum += 0.5 * (s.t - prev.t) * (s.fluct_interaction + prev.fluct_interaction);
      double m1 = (s.dist1 - d1_0) - eps * cum;
      double m2 = (s.dist2 - d2_0) - eps * cum;
      margin_max = std::max({margin_max, m1, m2});
      prev = s;
      batt_rows += csv_number(s.t) + "," + csv_number(tr) + "," +
                   csv_number(s.dist1) + "," + csv_number(s.dist2) + "," +
                   csv_number(m1) + "," + csv_number(m2) + "," + cell.hash + "\n";
      DiagnosticsRecord r = probe(sys, cfg.thresholds);
      diag_rows += csv_row(r) + "," + cell.hash + "\n";
    };
    battery_record();

    WallBudget budget(cfg.time.wall_max_s);
    long long step = 0;
    while (sys.time() < t_battery - 1e-12) {
      double h = std::min(sc.dt, t_battery - sys.time());
      sys.step(h);
      companion.step(h);
      ++step;
      if (step % cfg.time.record_every == 0 || sys.time() >= t_battery - 1e-12)
        battery_record();
      if (budget.expired()) {
        cell.censored = true;
        cell.note = "wall-clock budget exhausted during audit at t = " +
                    param_str(sys.time());
        break;
      }
    }
    write_file(out_dir / "battery.csv", batt_rows);

    // ---- characteristic-horizon ladder -----------------------------------
    const double target = overlap0 / 12.0;
    double c = cfg.c_cal, c_pass = kNaN, consumed = 0.0;
    double t0 = kNaN, t1 = kNaN;
    std::string ladder_note;
    if (eps > 0.0) {
      for (int rung = 0; rung < 13 && !cell.censored; ++rung) {
        CharacteristicTimes ct =
            characteristic_times(rate, eps, c, sum_l2, overlap0);
        if (rung == 0) {
          t0 = ct.t0;
          t1 = ct.t1;
        }
        double horizon = ct.t0 + ct.t1;
        while (sys.time() < horizon - 1e-12) {
          sys.step(std::min(sc.dt, horizon - sys.time()));
          ++step;
          if (step % cfg.time.record_every == 0 ||
              sys.time() >= horizon - 1e-12) {
            DiagnosticsRecord r = probe(sys, cfg.thresholds);
            diag_rows += csv_row(r) + "," + cell.hash + "\n";
            if (budget.expired()) {
              cell.censored = true;
              cell.note = "wall-clock budget exhausted in the horizon ladder "
                          "at t = " + param_str(sys.time());
              break;
            }
          }
        }
        if (cell.censored) break;
        consumed = m1_0 - sys.mass(0);
        if (consumed >= target) {
          c_pass = c;
          break;
        }
        c *= 2.0;
      }
      if (!cell.censored && !std::isfinite(c_pass)) {
        cell.ok = false;
        ladder_note = "consumed mass " + param_str(consumed) +
                      " below target " + param_str(target) +
                      " for every calibration tried up to " + param_str(c / 2.0);
      }
    } else {
      consumed = m1_0 - sys.mass(0);
      cell.ok = false;
      ladder_note = "zero coupling: no mass is consumed, target " +
                    param_str(target) + " unreachable";
    }
    if (!ladder_note.empty()) {
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += ladder_note;
    }
    if (marked) {
      cell.note += cell.note.empty() ? "" : "; ";
      cell.note += "under-resolved";
    }

    cell.csv = "run.csv";
    write_file(out_dir / cell.csv, diag_rows);

    cell.stats = {{"nu", nu},
                  {"eps", eps},
                  {"overlap0", overlap0},
                  {"rate", rate},
                  {"t0", t0},
                  {"t1", t1},
                  {"c_cal_pass", c_pass},
                  {"consumed", consumed},
                  {"target", target},
                  {"translation_max_rel",
                   scale > 0.0 ? translation_max / scale : 0.0},
                  {"deviation_margin_max_rel",
                   scale > 0.0 ? margin_max / scale : 0.0},
                  {"balance_residual_rel",
                   scale > 0.0 ? balance.residual / scale : 0.0},
                  {"crossings_final",
                   balance.reports.empty()
                       ? kNaN
                       : static_cast<double>(balance.reports.back().count())},
                  {"under_resolved", marked ? 1.0 : 0.0}};
    if (log) *log << "[cell] run " << (cell.ok ? "ok" : "failed") << "\n";
  } catch (const Error& e) {
    cell.ok = false;
    cell.note = e.what();
  }
  result.cells.push_back(std::move(cell));
}

// ---------------------------------------------------------------------------
// Verification suite: canned small instances exercising each documented
// invariant, reported as machine-readable rows.  cfg.mutate_sink flips the
// absorbing-sink sign inside the bookkeeping check, which must then fail.
// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double residual = kNaN;
  double tol = 0.0;
  bool pass = false;
  std::string note;
};

Check run_check(const std::string& name, double tol,
                const std::function<double()>& fn) {
  Check c;
  c.name = name;
  c.tol = tol;
  try {
    c.residual = fn();
    c.pass = c.residual <= tol;
  } catch (const Error& e) {
    c.pass = false;
    c.note = e.what();
  }
  return c;
}

void verify_suite(const ExperimentConfig& cfg, CampaignResult& result,
                  const fs::path&, std::ostream* log) {
  std::vector<Check> checks;
  auto add = [&](const std::string& name, double tol,
                 const std::function<double()>& fn) {
    checks.push_back(run_check(name, tol, fn));
    if (log)
      *log << "[check] " << checks.back().name
           << (checks.back().pass ? " pass" : " FAIL") << "\n";
  };

  const StepperConfig fast{.dt = 2e-3};

  // Exact diffusion of a single Fourier mode through the stepper.
  add("heat-mode-decay", 1e-9, [&]() {
    Grid2D g(32, 32);
    double nu = 1e-3;
    ScalarTransport st(g, std::make_shared<const FlowField>(FlowField::zero()),
                       nu, fast);
    st.set_state(Field2D::from_function(g, [](double x, double y) {
      return std::cos(kTwoPi * (x + 2.0 * y));
    }));
    double l2_0 = st.l2();
    st.advance_to(0.5);
    double expect = l2_0 * std::exp(-kTwoPi * kTwoPi * nu * 5.0 * 0.5);
    return std::abs(st.l2() - expect) / expect;
  });

  // The advection term moves no mass (mode zero of the dealiased product).
  add("advect-mass-conservation", 1e-10, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ScalarTransport st(g, flow, 0.05, fast);
    st.set_state(Field2D::from_function(g, [](double x, double y) {
      return 1.2 + std::sin(kTwoPi * x) * std::cos(kTwoPi * y) +
             0.4 * std::cos(kTwoPi * y);
    }));
    double m0 = st.mass();
    st.advance_to(0.5);
    return std::abs(st.mass() - m0) / std::abs(m0);
  });

  // Reacted-mass ledger equals the mass each species lost.  The mutation
  // hook corrupts the sink's sign; the ledger keeps its definition, so the
  // identity must then break by about twice the reacted mass.
  add("q-identity", 1e-6, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.5, fast);
    InitialSpec blobs;
    blobs.preset = "separated-blobs";
    blobs.sigma = 0.12;
    blobs.separation = 0.2;
    sys.set_state(0, build_initial(g, blobs, 0, 2, cfg.seed));
    sys.set_state(1, build_initial(g, blobs, 1, 2, cfg.seed));
    if (cfg.mutate_sink) sys.set_sink_sign(-1.0);
    std::vector<double> m0 = sys.masses();
    sys.advance_to(0.5);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      worst = std::max(worst, std::abs(sys.reacted_mass(a) -
                                       (m0[static_cast<std::size_t>(a)] -
                                        sys.mass(a))) /
                                  m0[static_cast<std::size_t>(a)]);
    return worst;
  });

  // Total-mass pairing of the all-species ledger.
  add("q-all-identity", 1e-6, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    std::vector<double> eps_mat = {0.0, 0.4, 0.0, 0.4, 0.0, 0.3, 0.0, 0.3, 0.0};
    ReactingSystem sys(g, flow, {0.05, 0.05, 0.05}, eps_mat, fast);
    for (int a = 0; a < 3; ++a) {
      double v = 0.8 + 0.1 * a;
      sys.set_state(a, Field2D::from_function(g, [v](double x, double y) {
        return v * (1.0 + 0.3 * std::sin(kTwoPi * x) * std::sin(kTwoPi * y));
      }));
    }
    double m0 = sys.mass_all();
    sys.advance_to(0.4);
    return std::abs(sys.reacted_mass_all() - (m0 - sys.mass_all())) / m0;
  });

  // Identical species under symmetric coupling stay identical.
  add("symmetric-depletion", 1e-9, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.6, fast);
    auto f0 = Field2D::from_function(g, [](double x, double y) {
      return 1.0 + 0.5 * std::cos(kTwoPi * x) * std::sin(kTwoPi * y);
    });
    sys.set_state(0, f0);
    sys.set_state(1, f0);
    sys.advance_to(0.5);
    Field2D a = sys.snapshot(0), b = sys.snapshot(1);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.phys.size(); ++i)
      worst = std::max(worst, std::abs(a.phys[i] - b.phys[i]));
    return worst;
  });

  // Passive twins spawned from the current state dominate their species.
  add("twin-min-gap", 1e-7, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.7, fast);
    InitialSpec blobs;
    blobs.preset = "separated-blobs";
    blobs.sigma = 0.15;
    blobs.separation = 0.15;
    sys.set_state(0, build_initial(g, blobs, 0, 2, cfg.seed));
    sys.set_state(1, build_initial(g, blobs, 1, 2, cfg.seed));
    sys.spawn_twins();
    sys.advance_to(0.5);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      worst = std::max(worst, std::max(0.0, -sys.twin_min_gap(a)));
    return worst;
  });

  // x-averaged run vs its one-dimensional companion in lockstep.
  auto lockstep = [&](double* dev_margin) {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.5, fast);
    InitialSpec blobs;
    blobs.preset = "separated-blobs";
    blobs.sigma = 0.15;
    blobs.separation = 0.15;
    sys.set_state(0, build_initial(g, blobs, 0, 2, cfg.seed));
    sys.set_state(1, build_initial(g, blobs, 1, 2, cfg.seed));
    double scale = std::max(sys.linf(0), sys.linf(1));
    OneDSystem od = spawn_1d(sys);
    std::vector<DeviationSample> traj;
    traj.push_back(deviation_sample(sys, od));
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      sys.step(2e-3);
      od.step(2e-3);
      if (i % 10 == 9) {
        worst = std::max(worst, translation_check(sys, od));
        traj.push_back(deviation_sample(sys, od));
      }
    }
    DeviationBound b = deviation_bound_check(traj, 0.5);
    *dev_margin =
        std::max(0.0, std::max(b.lhs1, b.lhs2) - b.rhs) / std::max(scale, 1e-300);
    return worst / std::max(scale, 1e-300);
  };
  double dev_margin = kNaN;
  add("translation-1d", 1e-6, [&]() { return lockstep(&dev_margin); });
  add("deviation-bound", 1e-6, [&]() {
    if (!std::isfinite(dev_margin)) {
      double tr = lockstep(&dev_margin);
      (void)tr;
    }
    return dev_margin;
  });

  // Minimum-mass exchange identity along a companion run.
  add("min-mass-balance", 1e-4, [&]() {
    Grid2D g(64, 64);
    auto flow = std::make_shared<const FlowField>(FlowField::zero());
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.5, fast);
    sys.set_state(0, Field2D::from_function(g, [](double, double y) {
      return 1.0 + 0.8 * std::sin(kTwoPi * y);
    }));
    sys.set_state(1, Field2D::from_function(g, [](double, double y) {
      return 1.0 - 0.8 * std::sin(kTwoPi * y);
    }));
    double scale = std::max(sys.linf(0), sys.linf(1));
    // Refined audit step: the flux quadrature error is O(dt^2) and would
    // otherwise dominate the identity residual at this tolerance.
    OneDSystem od = spawn_1d(sys, 2.5e-4);
    BalanceResult b = min_mass_balance(od, 0.5);
    return b.residual / scale;
  });

  // Space-free closed form for equal uniform states.
  add("uniform-ode", 1e-6, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::zero());
    ReactingSystem sys = ReactingSystem::pair(g, flow, 0.1, 0.1, 0.8, fast);
    auto one = Field2D::from_function(g, [](double, double) { return 1.0; });
    sys.set_state(0, one);
    sys.set_state(1, one);
    sys.advance_to(1.0);
    return std::abs(sys.mass(0) - 1.0 / 1.8);
  });

  // Bitwise repeatability of a full run.
  add("determinism-rerun", 0.0, [&]() {
    auto once = [&]() {
      Grid2D g(32, 32);
      auto flow =
          std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
      ReactingSystem sys = ReactingSystem::pair(g, flow, 0.05, 0.05, 0.5, fast);
      InitialSpec blobs;
      blobs.preset = "separated-blobs";
      blobs.sigma = 0.15;
      blobs.separation = 0.15;
      sys.set_state(0, build_initial(g, blobs, 0, 2, cfg.seed));
      sys.set_state(1, build_initial(g, blobs, 1, 2, cfg.seed));
      sys.advance_to(0.3);
      return sys.snapshot(0);
    };
    Field2D a = once(), b = once();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.phys.size(); ++i)
      worst = std::max(worst, std::abs(a.phys[i] - b.phys[i]));
    return worst;
  });

  // A step beyond the advective stability bound must be rejected untouched.
  add("cfl-rejection", 0.5, [&]() {
    Grid2D g(32, 32);
    auto flow = std::make_shared<const FlowField>(FlowField::shear_x(sin_profile()));
    ScalarTransport st(g, flow, 0.05, fast);
    st.set_state(Field2D::from_function(g, [](double x, double y) {
      return std::sin(kTwoPi * x) + std::cos(kTwoPi * y);
    }));
    Field2D before = st.snapshot();
    try {
      st.step(1.0);
      return 1.0;  // the oversized step was accepted: fail
    } catch (const CflError&) {
    }
    Field2D after = st.snapshot();
    for (std::size_t i = 0; i < before.phys.size(); ++i)
      if (before.phys[i] != after.phys[i]) return 1.0;
    return st.time() == 0.0 ? 0.0 : 1.0;
  });

  // Runtime-selected compute kernels agree with the scalar reference.
  add("kernel-equivalence", 1e-12, [&]() {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 1031;  // odd length exercises the vector tails
    std::vector<double> x(n), y(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const kernels::Ops& r = kernels::ref();
    double worst = 0.0;
    for (const kernels::Ops* ops : kernels::available()) {
      auto rel = [](double got, double want) {
        return std::abs(got - want) / std::max(1.0, std::abs(want));
      };
      worst = std::max(worst, rel(ops->sum(x.data(), n), r.sum(x.data(), n)));
      worst = std::max(
          worst, rel(ops->sum_prod(x.data(), y.data(), n),
                     r.sum_prod(x.data(), y.data(), n)));
      worst = std::max(worst, rel(ops->max_abs(x.data(), n), r.max_abs(x.data(), n)));
      std::vector<double> v1 = a, v2 = a;
      ops->xpay(v1.data(), v1.data(), 0.37, y.data(), n);
      r.xpay(v2.data(), v2.data(), 0.37, y.data(), n);
      std::vector<double> s1 = b, s2 = b;
      ops->sink_axpy(s1.data(), 0.61, x.data(), y.data(), n);
      r.sink_axpy(s2.data(), 0.61, x.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, rel(v1[i], v2[i]));
        worst = std::max(worst, rel(s1[i], s2[i]));
      }
    }
    return worst;
  });

  for (const auto& c : checks) {
    CellOutcome cell;
    cell.name = c.name;
    cell.hash = cfg.hash;
    cell.ok = c.pass;
    cell.note = c.note;
    cell.stats = {{"residual", c.residual},
                  {"tol", c.tol},
                  {"pass", c.pass ? 1.0 : 0.0}};
    result.cells.push_back(std::move(cell));
  }
  int failed = 0;
  for (const auto& c : checks)
    if (!c.pass) ++failed;
  result.totals = {{"checks", static_cast<double>(checks.size())},
                   {"failed", static_cast<double>(failed)}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Public helpers.
// ---------------------------------------------------------------------------

std::shared_ptr<const FlowField> build_flow(const FlowSpec& spec, double nu,
                                            double k_override) {
  if (spec.type == "zero")
    return std::make_shared<const FlowField>(FlowField::zero());
  ShearProfile p = spec.profile == "flat-critical"
                       ? flat_critical_profile(spec.flatness, spec.amplitude)
                       : sin_profile(spec.amplitude, spec.wavenumber);
  if (spec.type == "shear-x")
    return std::make_shared<const FlowField>(FlowField::shear_x(std::move(p)));
  if (spec.type == "shear-y")
    return std::make_shared<const FlowField>(FlowField::shear_y(std::move(p)));
  if (spec.type == "alternating")
    return std::make_shared<const FlowField>(FlowField::alternating(
        nu, k_override > 0.0 ? k_override : spec.K, spec.amplitude));
  throw ConfigError("unknown flow type '" + spec.type + "'");
}

Field2D build_initial(const Grid2D& g, const InitialSpec& spec, int a, int count,
                      std::uint64_t seed) {
  if (a < 0 || a >= std::max(count, 1))
    throw ConfigError("initial-data species index out of range");
  const double amp = spec.amplitude;
  const double sg = spec.sigma;
  const double sep = spec.separation;

  if (spec.preset == "uniform") {
    return Field2D::from_function(
        g, [v = spec.value](double, double) { return v; });
  }
  if (spec.preset == "separated-blobs") {
    double xc = count <= 1 ? -sep
                : count == 2 ? (a == 0 ? -sep : sep)
                             : -0.5 + (a + 0.5) / count;
    return Field2D::from_function(g, [=](double x, double y) {
      double v = amp * periodized_gaussian(x - xc, sg) * periodized_gaussian(y, sg);
      return v < 1e-14 * amp ? 0.0 : v;
    });
  }
  if (spec.preset == "y-blobs") {
    double yc = count <= 1 ? -sep
                : count == 2 ? (a == 0 ? -sep : sep)
                             : -0.5 + (a + 0.5) / count;
    return Field2D::from_function(g, [=](double, double y) {
      double v = amp * periodized_gaussian(y - yc, sg);
      return v < 1e-14 * amp ? 0.0 : v;
    });
  }
  if (spec.preset == "x-sine") {
    return Field2D::from_function(g, [=](double x, double y) {
      return amp * std::sin(kTwoPi * x) * (1.0 + 0.5 * std::cos(kTwoPi * y));
    });
  }
  if (spec.preset == "y-sine") {
    return Field2D::from_function(
        g, [=](double, double y) { return amp * std::sin(kTwoPi * y); });
  }
  if (spec.preset == "random-modes") {
    // Band-limited trigonometric polynomial with zero x average: fixed
    // coefficients drawn from the seed (distinct per species).
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(a));
    std::normal_distribution<double> nrm(0.0, 1.0);
    const int m = spec.modes;
    struct Term {
      double c, s;
      int kx, ky;
    };
    std::vector<Term> terms;
    for (int kx = 1; kx <= m; ++kx)
      for (int ky = -m; ky <= m; ++ky)
        terms.push_back({nrm(rng), nrm(rng), kx, ky});
    const double norm = amp / std::sqrt(static_cast<double>(terms.size()));
    return Field2D::from_function(g, [=](double x, double y) {
      double v = 0.0;
      for (const Term& t : terms) {
        double ph = kTwoPi * (t.kx * x + t.ky * y);
        v += t.c * std::cos(ph) + t.s * std::sin(ph);
      }
      return norm * v;
    });
  }
  throw ConfigError("unknown initial preset '" + spec.preset + "'");
}

double choose_dt(const ExperimentConfig& cfg, const FlowField& flow, double cap) {
  if (cfg.time.dt > 0.0) return cfg.time.dt;
  double dt;
  const double vmax = flow.max_speed_bound();
  if (vmax > 0.0) {
    dt = cfg.time.safety * cfg.stepper.cfl_advect / (cfg.grid * vmax);
  } else {
    dt = cap > 0.0 ? cap : cfg.time.t_end / 64.0;
  }
  if (cap > 0.0) dt = std::min(dt, cap);
  return std::min(dt, cfg.time.t_end);
}

bool under_resolved(const Grid2D& g, const FlowField& flow, double nu) {
  const double slope = flow.max_slope_bound();
  if (slope <= 0.0) return false;
  const double batchelor = std::sqrt(nu / slope);
  const double dx = 1.0 / std::min(g.nx, g.ny);
  return dx > batchelor / 4.0;
}

LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("linear_fit needs two or more matched samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw ConfigError("linear_fit needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

void run_cells(int jobs, int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int width = std::max(1, std::min(jobs, n));
  if (width == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(width));
  for (int w = 0; w < width; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

CampaignResult run_campaign(const ExperimentConfig& cfg, std::ostream* log) {
  if (cfg.hash.empty())
    throw ConfigError("configuration was not finalized (missing hash)");
  WallBudget wall(0.0);
  fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  CampaignResult result;
  result.kind = cfg.kind;
  result.out_dir = cfg.out_dir;
  result.summary_path = (out_dir / "summary.csv").string();
  result.manifest_path = (out_dir / "manifest.json").string();

  switch (cfg.kind) {
    case ExperimentKind::ed_rate_sweep:
      ed_rate_sweep(cfg, result, out_dir, log);
      break;
    case ExperimentKind::alternating_halving:
      alternating_halving(cfg, result, out_dir, log);
      break;
    case ExperimentKind::halflife_sweep:
      halflife_sweep(cfg, result, out_dir, log);
      break;
    case ExperimentKind::multispecies:
      multispecies_run(cfg, result, out_dir, log);
      break;
    case ExperimentKind::shear_regime:
      shear_regime_run(cfg, result, out_dir, log);
      break;
    case ExperimentKind::verify_suite:
      verify_suite(cfg, result, out_dir, log);
      break;
  }

  for (const auto& c : result.cells)
    if (!c.ok || c.censored) result.exit_code = 2;

  write_file(result.summary_path, summary_csv(result.cells));
  write_manifest(cfg, result, wall.elapsed());
  return result;
}

}  // namespace reactmix

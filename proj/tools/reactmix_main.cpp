// Command-line entry point: config-driven campaigns, single runs, offline
// rate fitting, the invariant check suite, and a listing of the available
// flow constructors.
//
// Exit codes: 0 success, 1 configuration problem (bad flags, bad config
// file, bad override), 2 runtime failure (failed or censored cells; the
// manifest written next to the summary names the failing cell).

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reactmix/config.hpp"
#include "reactmix/diagnostics.hpp"
#include "reactmix/errors.hpp"
#include "reactmix/experiments.hpp"

namespace {

using namespace reactmix;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> sets;
  int jobs = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config_path,
                              "Path to the campaign config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", f.out_dir,
                  "Output directory (applied after --set overrides)");
  cmd->add_option("--set", f.sets,
                  "Override a config key, dotted path, repeatable; "
                  "composes left to right, last write wins")
      ->take_all();
  cmd->add_option("--jobs", f.jobs,
                  "Worker pool width (applied after --set overrides)");
  cmd->add_flag("--quiet", f.quiet, "Suppress per-cell progress on stderr");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Builds the effective config: file (or "{}" when the subcommand supplies a
// default), then --set overrides in order, then the dedicated flags, then
// any subcommand-forced keys.
ExperimentConfig effective_config(const CommonFlags& f,
                                  const std::vector<std::string>& forced) {
  std::string text = f.config_path.empty() ? "{}" : read_file(f.config_path);
  std::vector<std::string> overrides = f.sets;
  if (!f.out_dir.empty()) overrides.push_back("out_dir=" + f.out_dir);
  if (f.jobs > 0) overrides.push_back("jobs=" + std::to_string(f.jobs));
  overrides.insert(overrides.end(), forced.begin(), forced.end());
  return parse_config_text(text, overrides);
}

int run_and_report(const ExperimentConfig& cfg, bool quiet) {
  CampaignResult res = run_campaign(cfg, quiet ? nullptr : &std::cerr);
  int failed = 0, censored = 0;
  for (const auto& c : res.cells) {
    if (!c.ok) ++failed;
    if (c.censored) ++censored;
  }
  std::cout << "kind " << to_string(cfg.kind) << "\n"
            << "cells " << res.cells.size() << "\n"
            << "failed " << failed << "\n"
            << "censored " << censored << "\n"
            << "summary " << res.summary_path << "\n"
            << "manifest " << res.manifest_path << "\n";
  return res.exit_code;
}

int cmd_simulate(const CommonFlags& f) {
  ExperimentConfig cfg = effective_config(f, {});
  auto singleton = [](std::size_t n, const char* key) {
    if (n > 1)
      throw ConfigError(std::string("simulate runs a single parameter cell: "
                                    "'") +
                        key + "' has " + std::to_string(n) +
                        " entries; use 'sweep' for campaigns");
  };
  singleton(cfg.nu.size(), "nu_list");
  singleton(cfg.eps.size(), "eps_list");
  singleton(cfg.k_list.size(), "K_list");
  return run_and_report(cfg, f.quiet);
}

int cmd_sweep(const CommonFlags& f) {
  return run_and_report(effective_config(f, {}), f.quiet);
}

int cmd_verify(const CommonFlags& f) {
  // The subcommand is the kind: a config passed here contributes grid,
  // tolerances, and the mutation hook, but always runs the check suite.
  return run_and_report(effective_config(f, {"kind=verify-suite"}), f.quiet);
}

int cmd_fit(const std::string& path, const std::string& column, double t_a,
            double t_b) {
  Series series = read_series_csv(path, column);
  if (series.empty()) throw ConfigError("series '" + path + "' is empty");
  double lo = t_a, hi = t_b;
  if (!(hi > lo)) {  // default window: the whole series
    lo = series.front().first;
    hi = series.back().first;
  }
  RateFit fit = fit_decay_rate(series, lo, hi);
  std::cout << "rate " << csv_number(fit.rate) << "\n"
            << "log_intercept " << csv_number(fit.intercept) << "\n"
            << "r_squared " << csv_number(fit.r_squared) << "\n"
            << "samples " << fit.samples << "\n"
            << "window " << csv_number(fit.t_a) << " " << csv_number(fit.t_b)
            << "\n";
  return 0;
}

int cmd_flows() {
  std::cout
      << "zero\n"
      << "  parameters: none (quiescent fluid)\n"
      << "shear-x\n"
      << "  u = (amplitude * phi(y), 0), static shear along x\n"
      << "  parameters: profile = sin (wavenumber k; phi = sin(2 pi k y))\n"
      << "              profile = flat-critical (flatness j in 1..4; phi = "
         "sin(2 pi y)^(j+1), critical points of order j)\n"
      << "shear-y\n"
      << "  u = (0, amplitude * phi(x)), static shear along y; same profile "
         "parameters as shear-x\n"
      << "alternating\n"
      << "  sin-profile shear switching between the x and y directions with "
         "smooth on/off envelopes\n"
      << "  parameters: K (switching period 2K/sqrt(nu)), amplitude\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "reactmix: absorbing chemical reactions in fluid flows on the periodic "
      "2-torus - campaigns, single runs, and verification"};
  app.require_subcommand(1);

  CommonFlags fl;
  std::string fit_path, fit_column = "l2";
  double fit_t_a = 0.0, fit_t_b = 0.0;

  CLI::App* simulate =
      app.add_subcommand("simulate", "Run a single parameter cell");
  add_common(simulate, fl, /*config_required=*/true);

  CLI::App* sweep =
      app.add_subcommand("sweep", "Run the campaign described by the config");
  add_common(sweep, fl, /*config_required=*/true);

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the invariant check suite (config optional)");
  add_common(verify, fl, /*config_required=*/false);

  CLI::App* fit = app.add_subcommand(
      "fit", "Re-fit a decay rate from an existing series CSV, offline");
  fit->add_option("csv", fit_path, "Series CSV with a leading t column")
      ->required();
  fit->add_option("--column", fit_column, "Column to fit (default l2)");
  fit->add_option("--from", fit_t_a, "Window start (default: first sample)");
  fit->add_option("--to", fit_t_b, "Window end (default: last sample)");

  CLI::App* flows = app.add_subcommand(
      "flows", "List the available flow constructors and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "run with --help for usage\n";
    return 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(fl);
    if (sweep->parsed()) return cmd_sweep(fl);
    if (verify->parsed()) return cmd_verify(fl);
    if (fit->parsed()) return cmd_fit(fit_path, fit_column, fit_t_a, fit_t_b);
    if (flows->parsed()) return cmd_flows();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

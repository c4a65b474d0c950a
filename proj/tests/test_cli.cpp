#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reactmix/diagnostics.hpp"

// Exercises the installed binary end to end: every case shells out to the
// real executable (path injected by the build) and inspects exit codes,
// streams, and the files it leaves behind.

using namespace reactmix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("reactmix_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(bool(out));
  out << text;
}

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

RunResult run_cli(const std::string& args) {
  static std::atomic<int> counter{0};
  const int id = counter.fetch_add(1);
  fs::path dir = fs::temp_directory_path() / "reactmix_cli_streams";
  fs::create_directories(dir);
  fs::path so = dir / ("out" + std::to_string(id));
  fs::path se = dir / ("err" + std::to_string(id));
  std::string cmd = std::string(REACTMIX_CLI_PATH) + " " + args + " > " +
                    so.string() + " 2> " + se.string();
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(so);
  r.err = slurp(se);
  return r;
}

// First number following "key " on its own stdout line.
double out_value(const std::string& out, const std::string& key) {
  std::istringstream ss(out);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind(key + " ", 0) == 0)
      return std::strtod(line.c_str() + key.size() + 1, nullptr);
  FAIL("no '", key, "' line in: ", out);
  return 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("verify runs green on the default config and forces its kind") {
  fs::path out = scratch("verify");
  RunResult r = run_cli("verify --quiet --out " + (out / "a").string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("kind verify-suite") != std::string::npos);
  CHECK(out_value(r.out, "cells") == 13.0);
  CHECK(out_value(r.out, "failed") == 0.0);
  CHECK(fs::exists(out / "a" / "summary.csv"));
  CHECK(fs::exists(out / "a" / "manifest.json"));

  // A config naming another kind still runs the check suite here.
  fs::path cfg = out / "other_kind.json";
  spit(cfg, R"({"kind": "ed-rate-sweep", "grid": 32})");
  RunResult r2 = run_cli("verify --quiet --config " + cfg.string() +
                         " --out " + (out / "b").string());
  CHECK(r2.exit_code == 0);
  CHECK(r2.out.find("kind verify-suite") != std::string::npos);
}

TEST_CASE("fit recovers the exact exponential offline") {
  fs::path out = scratch("fit");
  fs::path csv = out / "series.csv";
  std::string rows = "t,l2,hash\n";
  for (int i = 0; i <= 20; ++i) {
    double t = 0.05 * i;
    rows += csv_number(t) + "," + csv_number(5.0 * std::exp(-3.0 * t)) +
            ",deadbeefdeadbeef\n";
  }
  spit(csv, rows);

  RunResult r = run_cli("fit " + csv.string());
  CHECK(r.exit_code == 0);
  CHECK(out_value(r.out, "rate") == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(out_value(r.out, "r_squared") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out_value(r.out, "samples") == 21.0);

  // log_intercept is the fitted log value at t = 0: log(5).
  CHECK(out_value(r.out, "log_intercept") ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));

  // A window restricted by flags drops the excluded samples.
  RunResult rw = run_cli("fit " + csv.string() + " --from 0.25 --to 0.8");
  CHECK(rw.exit_code == 0);
  CHECK(out_value(rw.out, "rate") == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(out_value(rw.out, "samples") == 12.0);

  // Missing columns are a configuration problem, not a crash.
  RunResult rm = run_cli("fit " + csv.string() + " --column mass_9");
  CHECK(rm.exit_code == 1);
  CHECK(rm.err.find("mass_9") != std::string::npos);

  RunResult rn = run_cli("fit " + (out / "no_such.csv").string());
  CHECK(rn.exit_code == 1);
}

TEST_CASE("sweep applies overrides left to right and echoes the effective "
          "config") {
  fs::path out = scratch("sweep");
  fs::path cfg = out / "campaign.json";
  spit(cfg, R"({"kind": "ed-rate-sweep", "grid": 32,
                "flow": {"type": "zero"},
                "initial": {"preset": "y-sine"},
                "nu_list": [0.05, 0.1],
                "time": {"dt": 0.02, "t_end": 2.0, "record_every": 1}})");

  // The spec'd one-cell example: overriding the list shrinks the campaign.
  RunResult r = run_cli("sweep --quiet --config " + cfg.string() +
                        " --set nu_list=[0.05] --out " + (out / "one").string());
  CHECK(r.exit_code == 0);
  CHECK(out_value(r.out, "cells") == 1.0);
  CHECK(fs::exists(out / "one" / "nu0.05.csv"));
  CHECK(!fs::exists(out / "one" / "nu0.1.csv"));

  nlohmann::json manifest =
      nlohmann::json::parse(slurp(out / "one" / "manifest.json"));
  CHECK(manifest["cells"].size() == 1);
  CHECK(manifest["cells"][0]["name"] == "nu0.05");
  CHECK(manifest["config"]["nu_list"] == nlohmann::json::parse("[0.05]"));
  CHECK(manifest["config"]["out_dir"] == (out / "one").string());
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);

  // Later writes win: two --set values for the same key keep the last.
  RunResult r2 = run_cli("sweep --quiet --config " + cfg.string() +
                         " --set nu_list=[0.1] --set nu_list=[0.05] --out " +
                         (out / "two").string());
  CHECK(r2.exit_code == 0);
  nlohmann::json m2 = nlohmann::json::parse(slurp(out / "two" / "manifest.json"));
  CHECK(m2["config"]["nu_list"] == nlohmann::json::parse("[0.05]"));

  // Identical science at a different location or worker width: the summary
  // bytes agree apart from nothing at all (the hash excludes both knobs).
  RunResult r3 = run_cli("sweep --quiet --config " + cfg.string() +
                         " --set nu_list=[0.05] --jobs 2 --out " +
                         (out / "three").string());
  CHECK(r3.exit_code == 0);
  CHECK(slurp(out / "three" / "summary.csv") ==
        slurp(out / "one" / "summary.csv"));
}

TEST_CASE("config problems exit 1 with a located message") {
  fs::path out = scratch("badcfg");

  fs::path syntax = out / "syntax.json";
  spit(syntax, "{\n  \"grid\": ,\n}");
  RunResult r = run_cli("sweep --quiet --config " + syntax.string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(r.err.find("column") != std::string::npos);

  fs::path unknown = out / "unknown.json";
  spit(unknown, R"({"bogus": 1})");
  RunResult r2 = run_cli("sweep --quiet --config " + unknown.string());
  CHECK(r2.exit_code == 1);
  CHECK(r2.err.find("unknown config key 'bogus'") != std::string::npos);
  CHECK(r2.err.find("valid keys") != std::string::npos);

  // A bad override key is rejected the same way (the old spelling of the
  // list key is a nice trap).
  fs::path good = out / "good.json";
  spit(good, R"({"grid": 32})");
  RunResult r3 = run_cli("sweep --quiet --config " + good.string() +
                         " --set nu=[0.5]");
  CHECK(r3.exit_code == 1);
  CHECK(r3.err.find("unknown config key 'nu'") != std::string::npos);

  RunResult r4 = run_cli("sweep --quiet --config " + (out / "absent.json").string());
  CHECK(r4.exit_code == 1);
  CHECK(r4.err.find("cannot open") != std::string::npos);

  RunResult r5 = run_cli("sweep --config " + good.string() + " --bogus-flag");
  CHECK(r5.exit_code == 1);

  RunResult r6 = run_cli("");
  CHECK(r6.exit_code == 1);  // a subcommand is required
}

TEST_CASE("runtime failures exit 2 and the manifest names the failing cell") {
  fs::path out = scratch("fail");
  fs::path cfg = out / "bad_data.json";
  // y-sine data has a nonzero x average, which the sheared decay campaign
  // rejects per cell.
  spit(cfg, R"({"kind": "ed-rate-sweep", "grid": 32,
                "flow": {"type": "shear-x"},
                "initial": {"preset": "y-sine"},
                "nu_list": [0.05],
                "time": {"dt": 0.01, "t_end": 0.5},
                "out_dir": ")" + (out / "run").string() + R"("})");
  RunResult r = run_cli("sweep --quiet --config " + cfg.string());
  CHECK(r.exit_code == 2);

  nlohmann::json manifest =
      nlohmann::json::parse(slurp(out / "run" / "manifest.json"));
  REQUIRE(manifest["cells"].size() == 1);
  CHECK(manifest["cells"][0]["ok"] == false);
  CHECK(manifest["cells"][0]["name"] == "nu0.05");
  std::string note = manifest["cells"][0]["note"];
  CHECK(note.find("x average") != std::string::npos);
  CHECK(manifest["exit_code"] == 2);
}

TEST_CASE("simulate insists on singleton parameter lists") {
  fs::path out = scratch("simulate");
  fs::path cfg = out / "single.json";
  spit(cfg, R"({"kind": "multispecies", "grid": 32,
                "flow": {"type": "zero"},
                "initial": {"preset": "uniform", "value": 1.0},
                "nu_list": [0.1],
                "eps_list": [0.5],
                "time": {"t_end": 0.5, "record_every": 4}})");
  RunResult r = run_cli("simulate --quiet --config " + cfg.string() +
                        " --out " + (out / "run").string());
  CHECK(r.exit_code == 0);
  CHECK(out_value(r.out, "cells") == 1.0);
  CHECK(fs::exists(out / "run" / "summary.csv"));

  RunResult r2 = run_cli("simulate --quiet --config " + cfg.string() +
                         " --set nu_list=[0.1,0.05] --out " +
                         (out / "run2").string());
  CHECK(r2.exit_code == 1);
  CHECK(r2.err.find("use 'sweep'") != std::string::npos);
  CHECK(r2.err.find("nu_list") != std::string::npos);
}

TEST_CASE("flows lists every constructor with its parameters") {
  RunResult r = run_cli("flows");
  CHECK(r.exit_code == 0);
  for (const char* name : {"zero", "shear-x", "shear-y", "alternating"})
    CHECK(r.out.find(name) != std::string::npos);
  CHECK(r.out.find("K") != std::string::npos);
  CHECK(r.out.find("amplitude") != std::string::npos);
  CHECK(r.out.find("flat-critical") != std::string::npos);
}

TEST_CASE("quiet silences the progress stream only") {
  fs::path out = scratch("quiet");
  fs::path cfg = out / "c.json";
  spit(cfg, R"({"kind": "ed-rate-sweep", "grid": 32,
                "flow": {"type": "zero"},
                "initial": {"preset": "y-sine"},
                "nu_list": [0.05],
                "time": {"dt": 0.02, "t_end": 2.0}})");
  RunResult loud = run_cli("sweep --config " + cfg.string() + " --out " +
                           (out / "a").string());
  CHECK(loud.exit_code == 0);
  CHECK(loud.err.find("[cell]") != std::string::npos);

  RunResult hushed = run_cli("sweep --quiet --config " + cfg.string() +
                             " --out " + (out / "b").string());
  CHECK(hushed.exit_code == 0);
  CHECK(hushed.err.empty());
  // The artifact report still lands on stdout.
  CHECK(hushed.out.find("summary") != std::string::npos);
}

TEST_SUITE_END();

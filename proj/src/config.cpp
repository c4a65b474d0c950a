#include "reactmix/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "reactmix/errors.hpp"

namespace reactmix {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ed_rate_sweep: return "ed-rate-sweep";
    case ExperimentKind::alternating_halving: return "alternating-halving";
    case ExperimentKind::halflife_sweep: return "halflife-sweep";
    case ExperimentKind::multispecies: return "multispecies";
    case ExperimentKind::shear_regime: return "shear-regime";
    case ExperimentKind::verify_suite: return "verify-suite";
  }
  return "verify-suite";
}

ExperimentKind kind_from_string(const std::string& name) {
  if (name == "ed-rate-sweep") return ExperimentKind::ed_rate_sweep;
  if (name == "alternating-halving") return ExperimentKind::alternating_halving;
  if (name == "halflife-sweep") return ExperimentKind::halflife_sweep;
  if (name == "multispecies") return ExperimentKind::multispecies;
  if (name == "shear-regime") return ExperimentKind::shear_regime;
  if (name == "verify-suite") return ExperimentKind::verify_suite;
  throw ConfigError(
      "unknown experiment kind '" + name +
      "'; valid kinds: alternating-halving, ed-rate-sweep, halflife-sweep, "
      "multispecies, shear-regime, verify-suite");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Strict extraction helpers.  Every getter removes the key from a working
// copy of the section; whatever remains afterwards is unknown and rejected
// with the section's valid-key list.
// ---------------------------------------------------------------------------

[[noreturn]] void fail_key(const std::string& key, const std::string& want) {
  throw ConfigError("config key '" + key + "' expects " + want);
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) fail_key(key, "a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) fail_key(key, "an integer");
  return v.get<long long>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) fail_key(key, "a string");
  return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) fail_key(key, "a boolean");
  return v.get<bool>();
}

std::vector<double> get_number_list(const json& v, const std::string& key) {
  if (!v.is_array()) fail_key(key, "an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) fail_key(key, "an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// Flattens a square array-of-arrays into row-major order.
std::vector<double> get_matrix(const json& v, const std::string& key) {
  if (!v.is_array()) fail_key(key, "an array of equal-length number arrays");
  const std::size_t k = v.size();
  std::vector<double> out;
  out.reserve(k * k);
  for (const auto& row : v) {
    if (!row.is_array() || row.size() != k)
      fail_key(key, "an array of equal-length number arrays");
    for (const auto& e : row) {
      if (!e.is_number()) fail_key(key, "an array of equal-length number arrays");
      out.push_back(e.get<double>());
    }
  }
  return out;
}

void reject_unknown(const json& leftovers, const std::string& section,
                    const std::string& valid) {
  if (leftovers.empty()) return;
  std::string key = leftovers.begin().key();
  std::string where = section.empty() ? "top level" : "section '" + section + "'";
  throw ConfigError("unknown config key '" + key + "' at " + where +
                    "; valid keys: " + valid);
}

json take(json& obj, const char* key) {
  json v;
  auto it = obj.find(key);
  if (it != obj.end()) {
    v = *it;
    obj.erase(it);
  }
  return v;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate_ranges(const ExperimentConfig& c) {
  if (!power_of_two(c.grid) || c.grid < 16)
    throw ConfigError("'grid' must be a power of two >= 16, got " +
                      std::to_string(c.grid));
  if (c.flow.type != "zero" && c.flow.type != "shear-x" &&
      c.flow.type != "shear-y" && c.flow.type != "alternating")
    throw ConfigError("'flow.type' must be one of: alternating, shear-x, "
                      "shear-y, zero; got '" + c.flow.type + "'");
  if (c.flow.profile != "sin" && c.flow.profile != "flat-critical")
    throw ConfigError("'flow.profile' must be one of: flat-critical, sin; got '" +
                      c.flow.profile + "'");
  if (!(c.flow.amplitude > 0.0) || !std::isfinite(c.flow.amplitude))
    throw ConfigError("'flow.amplitude' must be a positive finite number");
  if (c.flow.wavenumber < 1) throw ConfigError("'flow.wavenumber' must be >= 1");
  if (c.flow.flatness < 1 || c.flow.flatness > 4)
    throw ConfigError("'flow.flatness' must be in 1..4");
  if (!(c.flow.K > 0.0)) throw ConfigError("'flow.K' must be positive");
  if (c.nu.empty()) throw ConfigError("'nu_list' must be a nonempty list");
  for (double v : c.nu)
    if (!(v > 0.0) || v > 1.0 || !std::isfinite(v))
      throw ConfigError("every entry of 'nu_list' must lie in (0, 1]");
  if (c.eps.empty()) throw ConfigError("'eps_list' must be a nonempty list");
  for (double v : c.eps)
    if (v < 0.0 || v > 1.0 || !std::isfinite(v))
      throw ConfigError(
          "every entry of 'eps_list' is a two-species coupling and must lie in "
          "[0, 1]");
  for (double v : c.k_list)
    if (!(v > 0.0)) throw ConfigError("every entry of 'K_list' must be positive");
  if (c.species < 1) throw ConfigError("'species' must be >= 1");
  if (!c.eps_matrix.empty()) {
    const std::size_t k = static_cast<std::size_t>(c.species);
    if (c.eps_matrix.size() != k * k)
      throw ConfigError("'eps_matrix' must be species x species (" +
                        std::to_string(c.species) + " rows)");
    for (std::size_t a = 0; a < k; ++a) {
      if (c.eps_matrix[a * k + a] != 0.0)
        throw ConfigError("'eps_matrix' diagonal must be exactly zero");
      for (std::size_t b = 0; b < k; ++b)
        if (c.eps_matrix[a * k + b] < 0.0 ||
            !std::isfinite(c.eps_matrix[a * k + b]))
          throw ConfigError("'eps_matrix' entries must be finite and >= 0");
    }
  }
  const auto& ip = c.initial;
  if (ip.preset != "uniform" && ip.preset != "separated-blobs" &&
      ip.preset != "y-blobs" && ip.preset != "x-sine" && ip.preset != "y-sine" &&
      ip.preset != "random-modes")
    throw ConfigError("'initial.preset' must be one of: random-modes, "
                      "separated-blobs, uniform, x-sine, y-blobs, y-sine; got '" +
                      ip.preset + "'");
  if (!(ip.sigma > 0.0)) throw ConfigError("'initial.sigma' must be positive");
  if (!(ip.amplitude > 0.0))
    throw ConfigError("'initial.amplitude' must be positive");
  if (ip.value < 0.0) throw ConfigError("'initial.value' must be >= 0");
  if (ip.modes < 1) throw ConfigError("'initial.modes' must be >= 1");
  if (std::abs(ip.separation) >= 0.5)
    throw ConfigError("'initial.separation' must lie in (-0.5, 0.5)");
  const auto& tp = c.time;
  if (tp.dt < 0.0) throw ConfigError("'time.dt' must be >= 0 (0 = automatic)");
  if (!(tp.t_end > 0.0)) throw ConfigError("'time.t_end' must be positive");
  if (tp.record_every < 1) throw ConfigError("'time.record_every' must be >= 1");
  if (tp.periods < 1) throw ConfigError("'time.periods' must be >= 1");
  if (tp.wall_max_s < 0.0) throw ConfigError("'time.wall_max_s' must be >= 0");
  if (!(tp.safety > 0.0) || tp.safety > 1.0)
    throw ConfigError("'time.safety' must lie in (0, 1]");
  if (tp.fit_lo < 0.0 || tp.fit_hi > 1.0 || !(tp.fit_lo < tp.fit_hi))
    throw ConfigError("'time.fit_lo'/'time.fit_hi' must satisfy 0 <= lo < hi <= 1");
  if (!(c.stepper.cfl_advect > 0.0))
    throw ConfigError("'stepper.cfl_advect' must be positive");
  if (!(c.stepper.cfl_react > 0.0))
    throw ConfigError("'stepper.cfl_react' must be positive");
  if (!(c.thresholds.B > 0.0) || !(c.thresholds.B1 > 0.0) ||
      !(c.thresholds.B2 > 0.0))
    throw ConfigError("'thresholds' entries must be positive");
  if (!(c.c_cal > 0.0)) throw ConfigError("'c_cal' must be positive");
  if (c.jobs < 1) throw ConfigError("'jobs' must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("'out_dir' must be nonempty");
}

// Rebuilds the full document from the typed struct with every default
// materialized.  nlohmann's default object representation sorts keys, so the
// dump is canonical and the hash is stable across field orderings in the
// source file.
json effective_doc(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["grid"] = c.grid;
  j["flow"] = {{"type", c.flow.type},         {"profile", c.flow.profile},
               {"amplitude", c.flow.amplitude}, {"wavenumber", c.flow.wavenumber},
               {"flatness", c.flow.flatness},   {"K", c.flow.K}};
  j["nu_list"] = c.nu;
  j["eps_list"] = c.eps;
  j["K_list"] = c.k_list;
  j["species"] = c.species;
  if (c.eps_matrix.empty()) {
    j["eps_matrix"] = json::array();
  } else {
    const std::size_t k = static_cast<std::size_t>(c.species);
    json rows = json::array();
    for (std::size_t a = 0; a < k; ++a) {
      json row = json::array();
      for (std::size_t b = 0; b < k; ++b) row.push_back(c.eps_matrix[a * k + b]);
      rows.push_back(row);
    }
    j["eps_matrix"] = rows;
  }
  j["initial"] = {{"preset", c.initial.preset},
                  {"sigma", c.initial.sigma},
                  {"separation", c.initial.separation},
                  {"amplitude", c.initial.amplitude},
                  {"value", c.initial.value},
                  {"modes", c.initial.modes}};
  j["time"] = {{"dt", c.time.dt},
               {"t_end", c.time.t_end},
               {"record_every", c.time.record_every},
               {"periods", c.time.periods},
               {"wall_max_s", c.time.wall_max_s},
               {"safety", c.time.safety},
               {"fit_lo", c.time.fit_lo},
               {"fit_hi", c.time.fit_hi}};
  j["stepper"] = {{"dealias", c.stepper.dealias},
                  {"cfl_advect", c.stepper.cfl_advect},
                  {"cfl_react", c.stepper.cfl_react},
                  {"force_general_path", c.stepper.force_general_path}};
  j["thresholds"] = {{"B", c.thresholds.B},
                     {"B1", c.thresholds.B1},
                     {"B2", c.thresholds.B2}};
  j["c_cal"] = c.c_cal;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["mutate_sink"] = c.mutate_sink;
  return j;
}

// The hash covers what determines the numbers, not where or how fast they
// are computed: 'out_dir' and 'jobs' are operational and excluded, so the
// same science hashes the same across directories and pool widths.
std::string content_hash(const ExperimentConfig& c) {
  json j = effective_doc(c);
  j.erase("out_dir");
  j.erase("jobs");
  return hash_hex(j.dump());
}

ExperimentConfig from_document(json doc) {
  if (!doc.is_object())
    throw ConfigError("configuration must be a JSON object");
  ExperimentConfig c;

  if (json v = take(doc, "kind"); !v.is_null())
    c.kind = kind_from_string(get_string(v, "kind"));
  if (json v = take(doc, "grid"); !v.is_null())
    c.grid = static_cast<int>(get_integer(v, "grid"));

  if (json v = take(doc, "flow"); !v.is_null()) {
    if (!v.is_object()) fail_key("flow", "an object");
    if (json w = take(v, "type"); !w.is_null())
      c.flow.type = get_string(w, "flow.type");
    if (json w = take(v, "profile"); !w.is_null())
      c.flow.profile = get_string(w, "flow.profile");
    if (json w = take(v, "amplitude"); !w.is_null())
      c.flow.amplitude = get_number(w, "flow.amplitude");
    if (json w = take(v, "wavenumber"); !w.is_null())
      c.flow.wavenumber = static_cast<int>(get_integer(w, "flow.wavenumber"));
    if (json w = take(v, "flatness"); !w.is_null())
      c.flow.flatness = static_cast<int>(get_integer(w, "flow.flatness"));
    if (json w = take(v, "K"); !w.is_null()) c.flow.K = get_number(w, "flow.K");
    reject_unknown(v, "flow", "K, amplitude, flatness, profile, type, wavenumber");
  }

  if (json v = take(doc, "nu_list"); !v.is_null()) c.nu = get_number_list(v, "nu_list");
  if (json v = take(doc, "eps_list"); !v.is_null()) c.eps = get_number_list(v, "eps_list");
  if (json v = take(doc, "K_list"); !v.is_null())
    c.k_list = get_number_list(v, "K_list");
  if (json v = take(doc, "species"); !v.is_null())
    c.species = static_cast<int>(get_integer(v, "species"));
  if (json v = take(doc, "eps_matrix"); !v.is_null())
    c.eps_matrix = get_matrix(v, "eps_matrix");

  if (json v = take(doc, "initial"); !v.is_null()) {
    if (!v.is_object()) fail_key("initial", "an object");
    if (json w = take(v, "preset"); !w.is_null())
      c.initial.preset = get_string(w, "initial.preset");
    if (json w = take(v, "sigma"); !w.is_null())
      c.initial.sigma = get_number(w, "initial.sigma");
    if (json w = take(v, "separation"); !w.is_null())
      c.initial.separation = get_number(w, "initial.separation");
    if (json w = take(v, "amplitude"); !w.is_null())
      c.initial.amplitude = get_number(w, "initial.amplitude");
    if (json w = take(v, "value"); !w.is_null())
      c.initial.value = get_number(w, "initial.value");
    if (json w = take(v, "modes"); !w.is_null())
      c.initial.modes = static_cast<int>(get_integer(w, "initial.modes"));
    reject_unknown(v, "initial",
                   "amplitude, modes, preset, separation, sigma, value");
  }

  if (json v = take(doc, "time"); !v.is_null()) {
    if (!v.is_object()) fail_key("time", "an object");
    if (json w = take(v, "dt"); !w.is_null())
      c.time.dt = get_number(w, "time.dt");
    if (json w = take(v, "t_end"); !w.is_null())
      c.time.t_end = get_number(w, "time.t_end");
    if (json w = take(v, "record_every"); !w.is_null())
      c.time.record_every = static_cast<int>(get_integer(w, "time.record_every"));
    if (json w = take(v, "periods"); !w.is_null())
      c.time.periods = static_cast<int>(get_integer(w, "time.periods"));
    if (json w = take(v, "wall_max_s"); !w.is_null())
      c.time.wall_max_s = get_number(w, "time.wall_max_s");
    if (json w = take(v, "safety"); !w.is_null())
      c.time.safety = get_number(w, "time.safety");
    if (json w = take(v, "fit_lo"); !w.is_null())
      c.time.fit_lo = get_number(w, "time.fit_lo");
    if (json w = take(v, "fit_hi"); !w.is_null())
      c.time.fit_hi = get_number(w, "time.fit_hi");
    reject_unknown(v, "time",
                   "dt, fit_hi, fit_lo, periods, record_every, safety, "
                   "t_end, wall_max_s");
  }

  if (json v = take(doc, "stepper"); !v.is_null()) {
    if (!v.is_object()) fail_key("stepper", "an object");
    if (json w = take(v, "dealias"); !w.is_null())
      c.stepper.dealias = get_bool(w, "stepper.dealias");
    if (json w = take(v, "cfl_advect"); !w.is_null())
      c.stepper.cfl_advect = get_number(w, "stepper.cfl_advect");
    if (json w = take(v, "cfl_react"); !w.is_null())
      c.stepper.cfl_react = get_number(w, "stepper.cfl_react");
    if (json w = take(v, "force_general_path"); !w.is_null())
      c.stepper.force_general_path = get_bool(w, "stepper.force_general_path");
    reject_unknown(v, "stepper",
                   "cfl_advect, cfl_react, dealias, force_general_path");
  }

  if (json v = take(doc, "thresholds"); !v.is_null()) {
    if (!v.is_object()) fail_key("thresholds", "an object");
    if (json w = take(v, "B"); !w.is_null())
      c.thresholds.B = get_number(w, "thresholds.B");
    if (json w = take(v, "B1"); !w.is_null())
      c.thresholds.B1 = get_number(w, "thresholds.B1");
    if (json w = take(v, "B2"); !w.is_null())
      c.thresholds.B2 = get_number(w, "thresholds.B2");
    reject_unknown(v, "thresholds", "B, B1, B2");
  }

  if (json v = take(doc, "c_cal"); !v.is_null())
    c.c_cal = get_number(v, "c_cal");
  if (json v = take(doc, "seed"); !v.is_null()) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      fail_key("seed", "a nonnegative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (json v = take(doc, "out_dir"); !v.is_null())
    c.out_dir = get_string(v, "out_dir");
  if (json v = take(doc, "jobs"); !v.is_null())
    c.jobs = static_cast<int>(get_integer(v, "jobs"));
  if (json v = take(doc, "mutate_sink"); !v.is_null())
    c.mutate_sink = get_bool(v, "mutate_sink");

  reject_unknown(doc, "",
                 "K_list, c_cal, eps_list, eps_matrix, flow, grid, initial, "
                 "jobs, kind, mutate_sink, nu_list, out_dir, seed, species, "
                 "stepper, thresholds, time");

  validate_ranges(c);
  c.canonical = effective_doc(c).dump();
  c.hash = content_hash(c);
  return c;
}

// Splits "a.b.c=value", walks/creates the object path, and installs the
// value.  The value is parsed as JSON when well formed (numbers, arrays,
// booleans) and treated as a raw string otherwise, so both
// "flow.amplitude=2.5" and "flow.type=alternating" read naturally.
void apply_override(json& doc, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + spec + "' must have the form KEY=VALUE");
  std::string path = spec.substr(0, eq);
  std::string value = spec.substr(eq + 1);

  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = value;

  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = path.find('.', pos);
    std::string part = path.substr(pos, dot - pos);
    if (part.empty())
      throw ConfigError("override '" + spec + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    if (!node->is_object())
      throw ConfigError("override '" + spec + "' descends into a non-object");
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

// Converts a byte offset from the JSON parser into 1-based line/column.
std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("config parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_document(std::move(doc));
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

void finalize_config(ExperimentConfig& cfg) {
  validate_ranges(cfg);
  cfg.canonical = effective_doc(cfg).dump();
  cfg.hash = content_hash(cfg);
}

std::string cell_hash(const ExperimentConfig& cfg, double nu, double eps,
                      double K) {
  ExperimentConfig cell = cfg;
  cell.nu = {nu};
  cell.eps = {eps};
  cell.k_list = {K};
  cell.flow.K = K;
  return content_hash(cell);
}

}  // namespace reactmix

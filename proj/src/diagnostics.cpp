#include "reactmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "reactmix/errors.hpp"
#include "reactmix/kernels.hpp"

namespace reactmix {

namespace {

void require_physical(Rep rep, const char* op) {
  if (rep != Rep::physical)
    throw ConfigError(std::string(op) + " needs a physical-representation field");
}

}  // namespace

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, const std::string& where) {
  const char* s = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ConfigError("could not parse numeric cell '" + cell + "' " + where);
  return v;
}

}  // namespace

Field1D x_average(const Field2D& f) {
  require_physical(f.rep, "x_average");
  const auto& k = kernels::active();
  Field1D out(Grid1D(f.grid.ny), Rep::physical);
  const double inv = 1.0 / f.grid.nx;
  for (int j = 0; j < f.grid.ny; ++j)
    out.at(j) = inv * k.sum(f.phys.data() + f.grid.index(0, j), f.grid.nx);
  return out;
}

Field2D remainder(const Field2D& f) {
  require_physical(f.rep, "remainder");
  Field1D avg = x_average(f);
  Field2D out(f.grid, Rep::physical);
  for (int j = 0; j < f.grid.ny; ++j) {
    const double a = avg.at(j);
    const double* src = f.phys.data() + f.grid.index(0, j);
    double* dst = out.phys.data() + f.grid.index(0, j);
    for (int i = 0; i < f.grid.nx; ++i) dst[i] = src[i] - a;
  }
  return out;
}

Field2D mean_zero_part(const Field2D& f) {
  require_physical(f.rep, "mean_zero_part");
  const auto& k = kernels::active();
  const std::size_t n = f.grid.size();
  const double mean = k.sum(f.phys.data(), n) / double(n);
  Field2D out(f.grid, Rep::physical);
  for (std::size_t i = 0; i < n; ++i) out.phys[i] = f.phys[i] - mean;
  return out;
}

double overlap_mass(const Field1D& a, const Field1D& b) {
  require_physical(a.rep, "overlap_mass");
  require_physical(b.rep, "overlap_mass");
  if (a.grid != b.grid)
    throw ConfigError("overlap_mass needs both profiles on the same grid");
  const auto& k = kernels::active();
  return k.sum_min(a.phys.data(), b.phys.data(), a.grid.n) / double(a.grid.n);
}

double overlap_mass(const Field2D& n1, const Field2D& n2) {
  if (n1.grid != n2.grid)
    throw ConfigError("overlap_mass needs both fields on the same grid");
  return overlap_mass(x_average(n1), x_average(n2));
}

RateFit fit_decay_rate(const Series& series, double t_a, double t_b) {
  if (!(t_a < t_b))
    throw ConfigError("decay fit window is empty: [" + csv_number(t_a) +
                      ", " + csv_number(t_b) + "]");
  std::vector<double> ts, ys;
  for (const auto& [t, v] : series) {
    if (t < t_a || t > t_b) continue;
    if (!(v > 0.0))
      throw ConfigError("decay fit needs positive values; got " +
                        csv_number(v) + " at t = " + csv_number(t));
    ts.push_back(t);
    ys.push_back(std::log(v));
  }
  if (ts.size() < 10)
    throw ConfigError("decay fit needs at least 10 samples in the window, got " +
                      std::to_string(ts.size()));
  const std::size_t n = ts.size();
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= double(n);
  ym /= double(n);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ts[i] - tm) * (ys[i] - ym);
    var += (ts[i] - tm) * (ts[i] - tm);
  }
  if (var == 0.0)
    throw ConfigError("decay fit window contains a single distinct time");
  const double slope = cov / var;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = ym + slope * (ts[i] - tm);
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ym) * (ys[i] - ym);
  }
  RateFit fit;
  fit.rate = -slope;
  fit.intercept = ym - slope * tm;
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.t_a = t_a;
  fit.t_b = t_b;
  fit.samples = int(n);
  return fit;
}

HalfLife half_life(const Series& series, double fraction) {
  if (series.empty()) throw ConfigError("half_life needs a nonempty series");
  if (!(fraction > 0.0))
    throw ConfigError("half_life fraction must be positive, got " +
                      csv_number(fraction));
  const double threshold = fraction * series.front().second;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].second > threshold) continue;
    if (i == 0) return {series[0].first, true};
    const auto& [t0, m0] = series[i - 1];
    const auto& [t1, m1] = series[i];
    return {t0 + (m0 - threshold) / (m0 - m1) * (t1 - t0), true};
  }
  return {series.back().first, false};
}

CharacteristicTimes characteristic_times(double rate, double eps, double c_cal,
                                         double sum_l2, double overlap) {
  if (!(rate > 0.0))
    throw ConfigError("characteristic times need a positive decay rate");
  if (!(eps > 0.0))
    throw ConfigError("characteristic times need a positive interaction rate");
  if (!(c_cal > 0.0))
    throw ConfigError("characteristic times need a positive calibration constant");
  if (!(sum_l2 > 0.0))
    throw ConfigError("characteristic times need a positive initial L2 sum");
  CharacteristicTimes out;
  if (!(overlap > 0.0)) return out;  // undefined, reported as such
  out.t0 = std::log(c_cal * ((eps / rate) * sum_l2 + 1.0) * sum_l2 / overlap) /
           rate;
  out.t1 = c_cal * std::max(1.0, 1.0 / overlap) / eps;
  out.defined = true;
  return out;
}

DiagnosticsRecord probe(ReactingSystem& sys, const AssumptionThresholds& thr) {
  const int k = sys.species_count();
  DiagnosticsRecord r;
  r.t = sys.time();
  r.mass = sys.masses();
  r.q = k == 2 ? sys.reacted_mass() : sys.reacted_mass_all();
  r.m_all = sys.mass_all();
  r.l2.resize(k);
  r.linf.resize(k);
  for (int a = 0; a < k; ++a) {
    r.l2[a] = sys.l2(a);
    r.linf[a] = sys.linf(a);
  }
  const double mean0 = r.mass[0];
  r.fluct_sim = std::sqrt(std::max(0.0, r.l2[0] * r.l2[0] - mean0 * mean0));
  r.fluct_neq = sys.l2_remainder(0);
  if (k >= 2) {
    Field2D s0 = sys.snapshot(0);
    Field2D s1 = sys.snapshot(1);
    r.overlap = overlap_mass(s0, s1);
  }
  const double min_mass = *std::min_element(r.mass.begin(), r.mass.end());
  r.b_ok = min_mass >= 1.0 / thr.B;
  r.b1_ok = min_mass >= 1.0 / thr.B1;
  r.b2_ok = min_mass > 0.0 && r.m_all / min_mass <= thr.B2;
  return r;
}

std::string csv_header(int species) {
  if (species < 1) throw ConfigError("csv_header needs at least one species");
  std::string h = "t";
  for (int a = 1; a <= species; ++a) h += ",mass_" + std::to_string(a);
  h += ",Q,M_all";
  for (int a = 1; a <= species; ++a) h += ",l2_" + std::to_string(a);
  h += ",fluct_sim,fluct_neq,overlap,flags";
  return h;
}

std::string csv_row(const DiagnosticsRecord& r) {
  std::string row = csv_number(r.t);
  for (double m : r.mass) row += "," + csv_number(m);
  row += "," + csv_number(r.q);
  row += "," + csv_number(r.m_all);
  for (double v : r.l2) row += "," + csv_number(v);
  row += "," + csv_number(r.fluct_sim);
  row += "," + csv_number(r.fluct_neq);
  row += "," + csv_number(r.overlap);
  row += ",";
  row += r.b_ok ? '1' : '0';
  row += r.b1_ok ? '1' : '0';
  row += r.b2_ok ? '1' : '0';
  return row;
}

Series read_series_csv(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("could not open CSV file " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("CSV file " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) col = i;
  if (col == header.size())
    throw ConfigError("CSV file " + path + " has no column '" + column + "'");
  Series out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError("CSV file " + path + " line " + std::to_string(lineno) +
                        " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    const std::string where = "in " + path + " line " + std::to_string(lineno);
    out.emplace_back(parse_double(cells[0], where),
                     parse_double(cells[col], where));
  }
  return out;
}

}  // namespace reactmix

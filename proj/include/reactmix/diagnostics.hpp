#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "reactmix/field.hpp"
#include "reactmix/species.hpp"

namespace reactmix {

// Decomposition helpers. The x average <f>(y) is the mean of each horizontal
// line (equivalently the kx = 0 spectral column); the remainder f - <f>
// carries everything the shear can act on. All three take physical fields.
Field1D x_average(const Field2D& f);
Field2D remainder(const Field2D& f);
Field2D mean_zero_part(const Field2D& f);

// Mass of the profile the two averaged densities share: the integral of
// min(a, b) over the unit interval by the periodic rectangle rule.
double overlap_mass(const Field1D& a, const Field1D& b);
double overlap_mass(const Field2D& n1, const Field2D& n2);

// A time series of nonnegative measurements (t, value).
using Series = std::vector<std::pair<double, double>>;

// Log-linear least squares of value ~ exp(intercept - rate t) over a time
// window. Requires at least ten samples inside the window, all positive.
// The nu / flow_desc fields are caller metadata carried into reports.
struct RateFit {
  double rate = 0.0;       // decay exponent (positive means decay)
  double intercept = 0.0;  // fitted log value at t = 0
  double r_squared = 0.0;
  double t_a = 0.0, t_b = 0.0;
  int samples = 0;
  double nu = 0.0;
  std::string flow_desc;
};
RateFit fit_decay_rate(const Series& series, double t_a, double t_b);

// First time the series drops to fraction * value(0), linearly interpolated
// between samples. reached = false when the run ends above the threshold
// (t then holds the last sample time).
struct HalfLife {
  double t = 0.0;
  bool reached = false;
};
HalfLife half_life(const Series& series, double fraction = 0.5);

// The two characteristic times of the shear-regime consumption estimate:
//   T0 = (1/rate) log( c_cal ((eps/rate) S + 1) S / overlap ),  S = sum of
//        the initial species L2 norms,
//   T1 = (1/eps) c_cal max(1, 1/overlap).
// A nonpositive overlap leaves them undefined (reported, not thrown).
struct CharacteristicTimes {
  double t0 = 0.0;
  double t1 = 0.0;
  bool defined = false;
};
CharacteristicTimes characteristic_times(double rate, double eps, double c_cal,
                                         double sum_l2, double overlap);

// Mass thresholds monitored along a run: the smallest species mass must stay
// above 1/B (two-species reading) and 1/B1 (multi-species reading), and the
// total-to-smallest mass ratio below B2.
struct AssumptionThresholds {
  double B = 100.0;
  double B1 = 100.0;
  double B2 = 10.0;
};

// One sampled row of run diagnostics. Q is the two-species reacted-mass
// ledger when exactly two species are present, otherwise the all-pairs sum.
// The fluctuation norms are those of the first species: fluct_sim removes
// the global mean, fluct_neq the x average.
struct DiagnosticsRecord {
  double t = 0.0;
  std::vector<double> mass;
  double q = 0.0;
  double m_all = 0.0;
  std::vector<double> l2;
  std::vector<double> linf;  // not serialized; kept for reports
  double fluct_sim = 0.0;
  double fluct_neq = 0.0;
  double overlap = 0.0;
  bool b_ok = true, b1_ok = true, b2_ok = true;
};

DiagnosticsRecord probe(ReactingSystem& sys, const AssumptionThresholds& thr);

// %.17g decimal form; rereading reproduces the double exactly. Shared by
// every CSV writer in the project so files stay byte-stable.
std::string csv_number(double v);

// CSV serialization with a fixed column order:
//   t, mass_1..mass_k, Q, M_all, l2_1..l2_k, fluct_sim, fluct_neq, overlap,
//   flags
// where flags is the three characters B, B1, B2 as '1'/'0'. Values are
// printed with %.17g so rereading reproduces the doubles exactly.
std::string csv_header(int species);
std::string csv_row(const DiagnosticsRecord& r);

// Reads (t, column) pairs back from such a file (or any CSV whose first
// column is t). Throws when the column is missing or a row fails to parse.
Series read_series_csv(const std::string& path, const std::string& column);

}  // namespace reactmix

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "reactmix/diagnostics.hpp"
#include "reactmix/errors.hpp"
#include "reactmix/field.hpp"
#include "reactmix/flow.hpp"
#include "reactmix/species.hpp"
#include "reactmix/stepper.hpp"

using namespace reactmix;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const FlowField> share(FlowField f) {
  return std::make_shared<FlowField>(std::move(f));
}

Series sampled(double t_end, double dt_steps, const std::function<double(double)>& f) {
  Series s;
  const int n = int(std::lround(t_end / dt_steps));
  for (int i = 0; i <= n; ++i) {
    const double t = double(i) * t_end / double(n);
    s.emplace_back(t, f(t));
  }
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("diagnostics");

TEST_CASE("x average matches direct row means and splits the field") {
  Grid2D g = Grid2D::square(64);
  Field2D f = Field2D::from_function(g, [](double x, double y) {
    return 0.7 + std::sin(2 * kPi * x) * (1.0 + 0.3 * std::cos(2 * kPi * y)) +
           0.5 * std::cos(4 * kPi * y);
  });

  Field1D avg = x_average(f);
  REQUIRE(avg.grid.n == g.ny);
  for (int j = 0; j < g.ny; ++j) {
    double direct = 0.0;
    for (int i = 0; i < g.nx; ++i) direct += f.at(i, j);
    direct /= g.nx;
    CHECK(std::abs(avg.at(j) - direct) <= 1e-13);
  }

  Field2D rem = remainder(f);
  // each row of the remainder has zero mean, and average + remainder
  // reconstructs the field pointwise
  for (int j = 0; j < g.ny; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.nx; ++i) row += rem.at(i, j);
    CHECK(std::abs(row / g.nx) <= 1e-13);
    for (int i = 0; i < g.nx; ++i)
      CHECK(std::abs(avg.at(j) + rem.at(i, j) - f.at(i, j)) <= 1e-13);
  }

  // a field depending only on y is its own average
  Field2D fy = Field2D::from_function(
      g, [](double, double y) { return 1.0 + std::sin(2 * kPi * y); });
  Field2D remy = remainder(fy);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(remy.at(i, j)) <= 1e-14);

  // a pure x mode averages to (numerically) zero
  Field2D fx = Field2D::from_function(
      g, [](double x, double) { return std::sin(2 * kPi * x); });
  Field1D avgx = x_average(fx);
  for (int j = 0; j < g.ny; ++j) CHECK(std::abs(avgx.at(j)) <= 1e-13);

  Field2D spec(g, Rep::spectral);
  CHECK_THROWS_AS((void)x_average(spec), ConfigError);
  CHECK_THROWS_AS((void)remainder(spec), ConfigError);
}

TEST_CASE("mean-zero part removes exactly the global mean") {
  Grid2D g = Grid2D::square(32);
  Field2D f = Field2D::from_function(g, [](double x, double y) {
    return 2.0 + std::cos(2 * kPi * (x + 2 * y));
  });
  Field2D z = mean_zero_part(f);
  double mean = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) mean += z.at(i, j);
  mean /= double(g.size());
  CHECK(std::abs(mean) <= 1e-15);

  // removing the mean twice changes nothing beyond round-off
  Field2D zz = mean_zero_part(z);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      CHECK(std::abs(zz.at(i, j) - z.at(i, j)) <= 5e-15);

  // summing 0.7 repeatedly rounds, so allow a few ulps around zero
  Field2D c = Field2D::from_function(g, [](double, double) { return 0.7; });
  Field2D zc = mean_zero_part(c);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) CHECK(std::abs(zc.at(i, j)) <= 5e-15);
}

TEST_CASE("overlap mass matches the closed-form crossing integral") {
  // profiles 1 + sin and 1 - sin share the mass of 1 - |sin|, whose integral
  // is 1 - 2/pi; the rectangle-rule error is ~2.1/n^2, so n = 16384 lands
  // inside 1e-8
  Grid1D g(16384);
  Field1D a = Field1D::from_function(
      g, [](double y) { return 1.0 + std::sin(2 * kPi * y); });
  Field1D b = Field1D::from_function(
      g, [](double y) { return 1.0 - std::sin(2 * kPi * y); });
  const double want = 1.0 - 2.0 / kPi;
  CHECK(std::abs(overlap_mass(a, b) - want) <= 1e-8);
  // symmetric in its arguments
  CHECK(overlap_mass(a, b) == overlap_mass(b, a));

  // identical profiles: overlap is the profile's own mass
  CHECK(overlap_mass(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  // constants: the smaller one wins
  Grid1D gs(32);
  Field1D c1 = Field1D::from_function(gs, [](double) { return 1.0; });
  Field1D c2 = Field1D::from_function(gs, [](double) { return 2.0; });
  CHECK(overlap_mass(c1, c2) == 1.0);

  // disjoint supports overlap not at all
  Field1D left = Field1D::from_function(
      gs, [](double y) { return y < 0.0 ? 1.0 : 0.0; });
  Field1D right = Field1D::from_function(
      gs, [](double y) { return y >= 0.0 ? 1.0 : 0.0; });
  CHECK(overlap_mass(left, right) == 0.0);

  Field1D other(Grid1D(64), Rep::physical);
  CHECK_THROWS_AS((void)overlap_mass(a, other), ConfigError);
}

TEST_CASE("overlap mass of two-dimensional fields goes through the x averages") {
  Grid2D g = Grid2D::square(64);
  // x variation must not contribute: these have the same x averages as the
  // profile pair above
  Field2D n1 = Field2D::from_function(g, [](double x, double y) {
    return 1.0 + std::sin(2 * kPi * y) + 0.2 * std::sin(2 * kPi * x);
  });
  Field2D n2 = Field2D::from_function(g, [](double x, double y) {
    return 1.0 - std::sin(2 * kPi * y) - 0.3 * std::sin(4 * kPi * x);
  });
  const double want = 1.0 - 2.0 / kPi;
  // n = 64 rectangle rule of 1 - |sin|: error ~2.1/64^2
  CHECK(std::abs(overlap_mass(n1, n2) - want) <= 1e-3);
  CHECK(overlap_mass(n1, n2) ==
        overlap_mass(x_average(n1), x_average(n2)));
}

TEST_CASE("decay fit recovers an exact exponential and its window") {
  Series s;
  for (int i = 0; i <= 40; ++i) {
    const double t = double(i) / 20.0;
    s.emplace_back(t, 5.0 * std::exp(-3.0 * t));
  }
  RateFit fit = fit_decay_rate(s, 0.0, 2.0);
  CHECK(fit.samples == 41);
  CHECK(std::abs(fit.rate - 3.0) <= 1e-12);
  CHECK(std::abs(fit.intercept - std::log(5.0)) <= 1e-12);
  CHECK(fit.r_squared >= 1.0 - 1e-12);
  CHECK(fit.t_a == 0.0);
  CHECK(fit.t_b == 2.0);

  // rescaling the series shifts the intercept, never the rate
  Series scaled = s;
  for (auto& [t, v] : scaled) v *= 7.25;
  RateFit fit2 = fit_decay_rate(scaled, 0.0, 2.0);
  CHECK(std::abs(fit2.rate - fit.rate) <= 1e-12);
  CHECK(std::abs(fit2.intercept - (fit.intercept + std::log(7.25))) <= 1e-12);

  // samples outside the window are ignored, even unusable ones
  Series padded = s;
  padded.emplace_back(3.0, -5.0);
  padded.emplace_back(-1.0, 0.0);
  RateFit fit3 = fit_decay_rate(padded, 0.0, 2.0);
  CHECK(fit3.samples == 41);
  CHECK(std::abs(fit3.rate - fit.rate) <= 1e-15);

  // a mild multiplicative wobble costs r^2 but not the trend
  Series noisy;
  for (int i = 0; i <= 40; ++i) {
    const double t = double(i) / 20.0;
    noisy.emplace_back(t, std::exp(-2.0 * t) * (1.0 + 0.01 * (i % 2 ? 1 : -1)));
  }
  RateFit fitn = fit_decay_rate(noisy, 0.0, 2.0);
  CHECK(fitn.rate == doctest::Approx(2.0).epsilon(0.05));
  CHECK(fitn.r_squared > 0.9);
  CHECK(fitn.r_squared < 1.0);
}

TEST_CASE("decay fit rejects unusable input") {
  Series few;
  for (int i = 0; i < 9; ++i) few.emplace_back(0.1 * i, 1.0);
  CHECK_THROWS_AS((void)fit_decay_rate(few, 0.0, 1.0), ConfigError);

  Series with_zero;
  for (int i = 0; i <= 12; ++i)
    with_zero.emplace_back(0.1 * i, i == 5 ? 0.0 : 1.0);
  CHECK_THROWS_AS((void)fit_decay_rate(with_zero, 0.0, 1.3), ConfigError);

  Series fine;
  for (int i = 0; i <= 12; ++i) fine.emplace_back(0.1 * i, std::exp(-0.1 * i));
  CHECK_THROWS_AS((void)fit_decay_rate(fine, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS((void)fit_decay_rate(fine, 2.0, 1.0), ConfigError);

  Series stacked;
  for (int i = 0; i < 12; ++i) stacked.emplace_back(0.5, 1.0);
  CHECK_THROWS_AS((void)fit_decay_rate(stacked, 0.0, 1.0), ConfigError);
}

TEST_CASE("decay fit reproduces the simulated heat rate of a single mode") {
  Grid2D g = Grid2D::square(32);
  const double nu = 1e-3;
  StepperConfig cfg;
  cfg.dt = 0.05;
  ScalarTransport st(g, share(FlowField::zero()), nu, cfg);
  st.set_state(Field2D::from_function(
      g, [](double x, double y) { return std::cos(2 * kPi * (x + y)); }));
  Series s;
  s.emplace_back(0.0, st.l2());
  for (int i = 0; i < 40; ++i) {
    st.step();
    s.emplace_back(st.time(), st.l2());
  }
  RateFit fit = fit_decay_rate(s, 0.1, 1.9);
  const double want = 8.0 * kPi * kPi * nu;  // |k|^2 = 2 for the (1,1) mode
  CHECK(std::abs(fit.rate - want) <= 1e-9 * want);
  CHECK(fit.r_squared >= 1.0 - 1e-12);
}

TEST_CASE("half life interpolates, censors, and is monotone in the fraction") {
  Series exp_series = sampled(2.0, 0.01, [](double t) { return std::exp(-t); });
  HalfLife h = half_life(exp_series);
  CHECK(h.reached);
  CHECK(std::abs(h.t - std::log(2.0)) <= 2e-5);

  Series hyper = sampled(2.0, 0.01, [](double t) { return 1.0 / (1.0 + t); });
  HalfLife hh = half_life(hyper);
  CHECK(hh.reached);
  CHECK(std::abs(hh.t - 1.0) <= 1e-3);

  Series flat = sampled(1.0, 0.1, [](double) { return 1.0; });
  HalfLife hc = half_life(flat);
  CHECK_FALSE(hc.reached);
  CHECK(hc.t == 1.0);

  // the 0.125 quantile of exp(-t) sits at t ~ 2.08, so sample past it
  Series exp_long = sampled(3.0, 0.01, [](double t) { return std::exp(-t); });
  double prev = -1.0;
  for (double frac : {0.8, 0.5, 0.25, 0.125}) {
    HalfLife hf = half_life(exp_long, frac);
    CHECK(hf.reached);
    CHECK(hf.t > prev);
    prev = hf.t;
  }

  HalfLife h1 = half_life(exp_series, 1.0);
  CHECK(h1.reached);
  CHECK(h1.t == 0.0);

  CHECK_THROWS_AS((void)half_life(Series{}, 0.5), ConfigError);
  CHECK_THROWS_AS((void)half_life(exp_series, 0.0), ConfigError);
}

TEST_CASE("characteristic times at the unit plug-in and their monotonicity") {
  CharacteristicTimes ct = characteristic_times(1.0, 1.0, 1.0, 1.0, 1.0);
  REQUIRE(ct.defined);
  CHECK(std::abs(ct.t0 - std::log(2.0)) <= 1e-15);
  CHECK(ct.t1 == 1.0);

  // shrinking overlap pushes both estimates out
  double t0_prev = ct.t0, t1_prev = ct.t1;
  for (double ov : {1e-1, 1e-2, 1e-3, 1e-4}) {
    CharacteristicTimes c = characteristic_times(1.0, 1.0, 1.0, 1.0, ov);
    REQUIRE(c.defined);
    CHECK(c.t0 > t0_prev);
    CHECK(c.t1 > t1_prev);
    t0_prev = c.t0;
    t1_prev = c.t1;
  }

  // doubling the interaction rate halves the reaction-limited time and
  // lengthens the mixing-limited one
  CharacteristicTimes ce1 = characteristic_times(2.0, 1.0, 3.0, 1.5, 0.25);
  CharacteristicTimes ce2 = characteristic_times(2.0, 2.0, 3.0, 1.5, 0.25);
  CHECK(ce2.t1 == doctest::Approx(0.5 * ce1.t1).epsilon(1e-15));
  CHECK(ce2.t0 > ce1.t0);

  // overlap above one saturates the mixing-limited estimate
  CharacteristicTimes cs = characteristic_times(1.0, 2.0, 3.0, 1.0, 5.0);
  CHECK(cs.t1 == 1.5);

  CharacteristicTimes undef = characteristic_times(1.0, 1.0, 1.0, 1.0, 0.0);
  CHECK_FALSE(undef.defined);

  CHECK_THROWS_AS((void)characteristic_times(0.0, 1.0, 1.0, 1.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS((void)characteristic_times(1.0, -1.0, 1.0, 1.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS((void)characteristic_times(1.0, 1.0, 0.0, 1.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS((void)characteristic_times(1.0, 1.0, 1.0, 0.0, 1.0),
                  ConfigError);
}

TEST_CASE("probe assembles a consistent record for a uniform pair") {
  Grid2D g = Grid2D::square(16);
  StepperConfig cfg;
  cfg.dt = 0.01;
  auto sys = ReactingSystem::pair(g, share(FlowField::zero()), 0.1, 0.1, 0.5,
                                  cfg);
  sys.set_state(0, Field2D::from_function(g, [](double, double) { return 1.0; }));
  sys.set_state(1, Field2D::from_function(g, [](double, double) { return 1.0; }));
  sys.advance_to(1.0);

  AssumptionThresholds thr;
  DiagnosticsRecord r = probe(sys, thr);
  CHECK(r.t == 1.0);
  REQUIRE(r.mass.size() == 2);
  const double m = 1.0 / 1.5;  // uniform pair with eps/2 effective rate
  CHECK(r.mass[0] == doctest::Approx(m).epsilon(1e-6));
  CHECK(r.mass[1] == doctest::Approx(m).epsilon(1e-6));
  CHECK(r.q == doctest::Approx(1.0 - m).epsilon(1e-6));
  CHECK(r.m_all == doctest::Approx(2 * m).epsilon(1e-6));
  CHECK(r.l2[0] == doctest::Approx(m).epsilon(1e-6));
  CHECK(r.linf[0] == doctest::Approx(m).epsilon(1e-6));
  // uniform fields fluctuate in neither sense and overlap fully
  CHECK(r.fluct_sim <= 1e-8);
  CHECK(r.fluct_neq <= 1e-8);
  CHECK(r.overlap == doctest::Approx(m).epsilon(1e-6));
  CHECK(r.b_ok);
  CHECK(r.b1_ok);
  CHECK(r.b2_ok);

  // the total-to-smallest ratio is 2 here, so B2 below 2 must trip
  AssumptionThresholds tight;
  tight.B2 = 1.5;
  DiagnosticsRecord rt = probe(sys, tight);
  CHECK_FALSE(rt.b2_ok);
  CHECK(rt.b_ok);

  // and a mass floor above the current mass trips the B flags
  AssumptionThresholds floor_high;
  floor_high.B = 1.0;   // requires mass >= 1
  floor_high.B1 = 1.0;
  DiagnosticsRecord rf = probe(sys, floor_high);
  CHECK_FALSE(rf.b_ok);
  CHECK_FALSE(rf.b1_ok);
  CHECK(rf.b2_ok);
}

TEST_CASE("probe reports first-species fluctuations and all-pairs ledger") {
  Grid2D g = Grid2D::square(32);
  StepperConfig cfg;
  cfg.dt = 0.01;
  std::vector<double> eps = {0.0, 1.0, 0.0,   //
                             1.0, 0.0, 0.0,   //
                             0.0, 0.0, 0.0};
  ReactingSystem sys(g, share(FlowField::zero()), {0.1, 0.1, 0.1}, eps, cfg);
  sys.set_state(0, Field2D::from_function(g, [](double x, double) {
                  return 1.0 + 0.5 * std::sin(2 * kPi * x);
                }));
  sys.set_state(1, Field2D::from_function(g, [](double, double) { return 1.0; }));
  sys.set_state(2, Field2D::from_function(g, [](double, double) { return 1.0; }));

  AssumptionThresholds thr;
  DiagnosticsRecord r = probe(sys, thr);
  REQUIRE(r.mass.size() == 3);
  CHECK(r.q == 0.0);  // all-pairs ledger before any stepping
  CHECK(r.m_all == doctest::Approx(3.0).epsilon(1e-12));
  // fluctuation columns describe species one: amplitude 0.5 sine has L2
  // norm 0.5/sqrt(2) about its mean, entirely in the x remainder
  const double want = 0.5 / std::sqrt(2.0);
  CHECK(r.fluct_sim == doctest::Approx(want).epsilon(1e-10));
  CHECK(r.fluct_neq == doctest::Approx(want).epsilon(1e-10));
  // equal unit masses: total-to-smallest ratio is the species count
  CHECK(r.b2_ok);
  AssumptionThresholds tight;
  tight.B2 = 2.5;
  CHECK_FALSE(probe(sys, tight).b2_ok);
}

TEST_CASE("records serialize to CSV and reread exactly") {
  Grid2D g = Grid2D::square(16);
  StepperConfig cfg;
  cfg.dt = 0.01;
  auto sys = ReactingSystem::pair(g, share(FlowField::zero()), 0.1, 0.1, 0.5,
                                  cfg);
  sys.set_state(0, Field2D::from_function(g, [](double, double) { return 1.0; }));
  sys.set_state(1, Field2D::from_function(g, [](double, double) { return 1.0; }));

  CHECK(csv_header(2) ==
        "t,mass_1,mass_2,Q,M_all,l2_1,l2_2,fluct_sim,fluct_neq,overlap,flags");
  CHECK(csv_header(1) == "t,mass_1,Q,M_all,l2_1,fluct_sim,fluct_neq,overlap,flags");
  CHECK_THROWS_AS((void)csv_header(0), ConfigError);

  AssumptionThresholds thr;
  std::vector<DiagnosticsRecord> recs;
  recs.push_back(probe(sys, thr));
  for (int i = 0; i < 4; ++i) {
    sys.advance_to(0.25 * (i + 1));
    recs.push_back(probe(sys, thr));
  }

  const std::string path = "/tmp/reactmix_diag_roundtrip.csv";
  {
    std::ofstream out(path);
    out << csv_header(2) << "\n";
    for (const auto& r : recs) out << csv_row(r) << "\n";
  }

  Series t_mass = read_series_csv(path, "mass_1");
  Series t_q = read_series_csv(path, "Q");
  REQUIRE(t_mass.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    // %.17g round-trips doubles bit for bit
    CHECK(t_mass[i].first == recs[i].t);
    CHECK(t_mass[i].second == recs[i].mass[0]);
    CHECK(t_q[i].second == recs[i].q);
  }
  // the ledger column is nondecreasing along the run
  for (std::size_t i = 1; i < t_q.size(); ++i)
    CHECK(t_q[i].second >= t_q[i - 1].second);

  // the flags column reads back as expected
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line.substr(line.size() - 4) == ",111");

  CHECK_THROWS_AS((void)read_series_csv(path, "no_such_column"), ConfigError);
  CHECK_THROWS_AS((void)read_series_csv("/tmp/reactmix_missing.csv", "Q"),
                  ConfigError);
}

TEST_CASE("series reader rejects malformed rows") {
  const std::string path = "/tmp/reactmix_diag_malformed.csv";
  {
    std::ofstream out(path);
    out << "t,value\n0.0,1.0\n0.1,banana\n";
  }
  CHECK_THROWS_AS((void)read_series_csv(path, "value"), ConfigError);
  {
    std::ofstream out(path);
    out << "t,value\n0.0,1.0,9.0\n";
  }
  CHECK_THROWS_AS((void)read_series_csv(path, "value"), ConfigError);
  {
    std::ofstream out(path);
    out << "";
  }
  CHECK_THROWS_AS((void)read_series_csv(path, "value"), ConfigError);
}

TEST_SUITE_END();

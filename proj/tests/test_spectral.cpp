#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <random>

#include "reactmix/fft.hpp"
#include "reactmix/field.hpp"
#include "reactmix/grid.hpp"

using namespace reactmix;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Brute-force discrete Fourier coefficient of exp(2 pi i (kx x + ky y)) under
// the grid-average inner product. Quartic cost; the independent yardstick for
// the transform layer.
cx dft_oracle(const Field2D& f, int kx, int ky) {
  const Grid2D& g = f.grid;
  cx s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double ph = -2.0 * kPi * (kx * g.x(i) + ky * g.y(j));
      s += f.at(i, j) * cx(std::cos(ph), std::sin(ph));
    }
  return s / double(g.size());
}

cx dft_oracle_1d(const Field1D& f, int k) {
  const Grid1D& g = f.grid;
  cx s = 0.0;
  for (int j = 0; j < g.n; ++j) {
    const double ph = -2.0 * kPi * k * g.y(j);
    s += f.at(j) * cx(std::cos(ph), std::sin(ph));
  }
  return s / double(g.n);
}

Field2D random_field(Grid2D g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field2D f(g, Rep::physical);
  for (auto& v : f.phys) v = d(rng);
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("grid validation and index conventions") {
  CHECK_THROWS_AS(Grid2D(12, 16), ConfigError);
  CHECK_THROWS_AS(Grid2D(16, 8), ConfigError);
  CHECK_THROWS_AS(Grid1D(17), ConfigError);
  Grid2D g(32, 16);
  CHECK(g.x(0) == -0.5);
  CHECK(g.y(8) == 0.0);
  CHECK(g.kx_count() == 17);
  CHECK(g.ky_of_row(0) == 0);
  CHECK(g.ky_of_row(8) == 8);
  CHECK(g.ky_of_row(9) == -7);
  CHECK(g.dealias_kx() == 10);
  CHECK(g.dealias_ky() == 5);
}

TEST_CASE("coefficients match the quartic transform oracle") {
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 101);
  Field2D fs = to_spectral(f, ws);
  for (int ky = -g.ny / 2; ky <= g.ny / 2; ++ky)
    for (int kx = -g.nx / 2; kx <= g.nx / 2; ++kx) {
      CAPTURE(kx);
      CAPTURE(ky);
      const cx got = fs.coefficient(kx, ky);
      const cx want = dft_oracle(f, kx, ky);
      CHECK(std::abs(got - want) <= 1e-10);
    }
}

TEST_CASE("constant and single-mode fields") {
  Grid2D g = Grid2D::square(32);
  SpectralWorkspace ws(g);

  SUBCASE("constant") {
    Field2D f = Field2D::from_function(g, [](double, double) { return 3.25; });
    Field2D fs = to_spectral(f, ws);
    CHECK(fs.coefficient(0, 0).real() == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(std::abs(fs.coefficient(0, 0).imag()) <= 1e-14);
    CHECK(std::abs(fs.coefficient(3, -5)) <= 1e-13);
    CHECK(std::abs(fs.coefficient(1, 0)) <= 1e-13);
    CHECK(ws.mean(fs.spec.data()) == doctest::Approx(3.25).epsilon(1e-14));
  }
  SUBCASE("cos(2 pi x) puts 1/2 on the two conjugate modes") {
    Field2D f = Field2D::from_function(
        g, [](double x, double) { return std::cos(2.0 * kPi * x); });
    Field2D fs = to_spectral(f, ws);
    CHECK(std::abs(fs.coefficient(1, 0) - cx(0.5, 0.0)) <= 1e-13);
    CHECK(std::abs(fs.coefficient(-1, 0) - cx(0.5, 0.0)) <= 1e-13);
    CHECK(std::abs(fs.coefficient(0, 1)) <= 1e-13);
    CHECK(std::abs(fs.coefficient(2, 0)) <= 1e-13);
  }
  SUBCASE("sin(2 pi y) is -i/2, +i/2 on the conjugate pair") {
    Field2D f = Field2D::from_function(
        g, [](double, double y) { return std::sin(2.0 * kPi * y); });
    Field2D fs = to_spectral(f, ws);
    CHECK(std::abs(fs.coefficient(0, 1) - cx(0.0, -0.5)) <= 1e-13);
    CHECK(std::abs(fs.coefficient(0, -1) - cx(0.0, 0.5)) <= 1e-13);
  }
}

TEST_CASE("hermitian symmetry of the accessor") {
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D fs = to_spectral(random_field(g, 7), ws);
  for (int ky = -7; ky <= 7; ++ky)
    for (int kx = 0; kx <= 7; ++kx) {
      const cx a = fs.coefficient(kx, ky);
      const cx b = fs.coefficient(-kx, -ky);
      CHECK(std::abs(a - std::conj(b)) <= 1e-15);
    }
}

TEST_CASE("round trips preserve the data") {
  Grid2D g(64, 32);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 23);

  Field2D back = to_physical(to_spectral(f, ws), ws);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(back.phys[i] - f.phys[i]));
  CHECK(worst <= 1e-12);

  Field2D fs = to_spectral(f, ws);
  Field2D fs2 = to_spectral(to_physical(fs, ws), ws);
  double worst2 = 0.0;
  for (std::size_t i = 0; i < g.spectral_size(); ++i)
    worst2 = std::max(worst2, std::abs(fs2.spec[i] - fs.spec[i]));
  CHECK(worst2 <= 1e-12);
}

TEST_CASE("non-finite input is rejected") {
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 5);
  f.phys[37] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(to_spectral(f, ws), Error);
  Field2D fs = to_spectral(random_field(g, 6), ws);
  fs.spec[10] = cx(1.0, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(to_physical(fs, ws), Error);
}

TEST_CASE("derivatives match analytic fields") {
  Grid2D g = Grid2D::square(64);
  SpectralWorkspace ws(g);
  Field2D f = Field2D::from_function(g, [](double x, double y) {
    return std::sin(2.0 * kPi * x) * std::cos(4.0 * kPi * y);
  });
  Field2D fs = to_spectral(f, ws);

  Field2D dx(g, Rep::spectral);
  ws.deriv_x(fs.spec.data(), dx.spec.data());
  Field2D dxp = to_physical(dx, ws);
  Field2D want_x = Field2D::from_function(g, [](double x, double y) {
    return 2.0 * kPi * std::cos(2.0 * kPi * x) * std::cos(4.0 * kPi * y);
  });
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(dxp.phys[i] - want_x.phys[i]) <= 1e-10);

  Field2D dy(g, Rep::spectral);
  ws.deriv_y(fs.spec.data(), dy.spec.data());
  Field2D dyp = to_physical(dy, ws);
  Field2D want_y = Field2D::from_function(g, [](double x, double y) {
    return -4.0 * kPi * std::sin(2.0 * kPi * x) * std::sin(4.0 * kPi * y);
  });
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(dyp.phys[i] - want_y.phys[i]) <= 1e-10);

  SUBCASE("in place operation gives the same result") {
    Field2D dx2 = to_spectral(f, ws);
    ws.deriv_x(dx2.spec.data(), dx2.spec.data());
    for (std::size_t i = 0; i < g.spectral_size(); ++i)
      CHECK(dx2.spec[i] == dx.spec[i]);
  }
}

TEST_CASE("parseval identity for the half layout") {
  Grid2D g(64, 32);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 31);
  Field2D fs = to_spectral(f, ws);
  const double grid_l2 = stats(f).l2;
  const double spec_l2 = ws.l2(fs.spec.data());
  CHECK(spec_l2 == doctest::Approx(grid_l2).epsilon(1e-12));
}

TEST_CASE("dealiasing zeroes exactly the outer band") {
  Grid2D g = Grid2D::square(32);  // keep |k| <= 10
  SpectralWorkspace ws(g);
  Field2D fs = to_spectral(random_field(g, 77), ws);
  Field2D kept = fs;
  ws.dealias(fs.spec.data());
  const int hx = g.kx_count();
  for (int j = 0; j < g.ny; ++j) {
    const int ky = g.ky_of_row(j);
    for (int kx = 0; kx < hx; ++kx) {
      const cx v = fs.spec[std::size_t(j) * hx + kx];
      if (std::abs(ky) > 10 || kx > 10)
        CHECK(v == cx(0.0, 0.0));
      else
        CHECK(v == kept.spec[std::size_t(j) * hx + kx]);
    }
  }
}

TEST_CASE("column transforms invert each other up to the ny scale") {
  Grid2D g = Grid2D::square(32);
  SpectralWorkspace ws(g);
  Field2D fs = to_spectral(random_field(g, 13), ws);
  Field2D m = fs;
  ws.col_backward(m.spec.data());
  ws.col_forward(m.spec.data());
  for (std::size_t i = 0; i < g.spectral_size(); ++i)
    CHECK(std::abs(m.spec[i] / double(g.ny) - fs.spec[i]) <= 1e-13);
}

TEST_CASE("banded column transforms agree on the kept columns") {
  Grid2D g = Grid2D::square(32);
  SpectralWorkspace ws(g);
  Field2D fs = to_spectral(random_field(g, 14), ws);
  ws.dealias(fs.spec.data());
  Field2D full = fs, band = fs;
  ws.col_backward(full.spec.data(), false);
  ws.col_backward(band.spec.data(), true);
  const int hx = g.kx_count();
  const int cut = g.dealias_kx();
  for (int j = 0; j < g.ny; ++j)
    for (int kx = 0; kx <= cut; ++kx) {
      const std::size_t at = std::size_t(j) * hx + kx;
      CHECK(band.spec[at] == full.spec[at]);
    }
}

TEST_CASE("mixed representation evaluates the partial inverse transform") {
  // After col_backward, entry (kx, j) holds sum_ky c(kx, ky) e(ky y_j) up to
  // the alternating phase in kx that the raw layout carries throughout.
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 99);
  Field2D fs = to_spectral(f, ws);
  Field2D m = fs;
  ws.col_backward(m.spec.data());
  const int hx = g.kx_count();
  for (int kx = 0; kx <= g.nx / 2; kx += 3)
    for (int j = 0; j < g.ny; j += 5) {
      cx want = 0.0;
      for (int ky = -g.ny / 2 + 1; ky <= g.ny / 2; ++ky) {
        const double ph = 2.0 * kPi * ky * g.y(j);
        want += fs.coefficient(kx, ky) * cx(std::cos(ph), std::sin(ph));
      }
      // undo the accessor's phase in kx and ky: the ky part is absorbed by
      // the node values, the kx part stays on the whole column
      const double sign = (kx % 2 == 0) ? 1.0 : -1.0;
      const cx got = m.spec[std::size_t(j) * hx + kx] * sign;
      CHECK(std::abs(got - want) <= 1e-12);
    }
}

TEST_CASE("spectral transpose swaps the axes") {
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D f = random_field(g, 55);
  Field2D ft(g, Rep::physical);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) ft.at(i, j) = f.at(j, i);

  Field2D fs = to_spectral(f, ws);
  Field2D want = to_spectral(ft, ws);
  Field2D got(g, Rep::spectral);
  spectral_transpose(fs.spec.data(), got.spec.data(), g);
  for (std::size_t i = 0; i < g.spectral_size(); ++i)
    CHECK(std::abs(got.spec[i] - want.spec[i]) <= 1e-12);

  SUBCASE("involution is bit exact") {
    Field2D twice(g, Rep::spectral);
    spectral_transpose(got.spec.data(), twice.spec.data(), g);
    CHECK(std::memcmp(twice.spec.data(), fs.spec.data(),
                      g.spectral_size() * sizeof(cx)) == 0);
  }
  SUBCASE("rectangular grids are refused") {
    Grid2D r(32, 16);
    Field2D a(r, Rep::spectral), b(r, Rep::spectral);
    CHECK_THROWS_AS(spectral_transpose(a.spec.data(), b.spec.data(), r), Error);
  }
}

TEST_CASE("field access and statistics") {
  Grid2D g = Grid2D::square(64);
  Field2D f = Field2D::from_function(
      g, [](double x, double) { return 1.5 + std::sin(2.0 * kPi * x); });
  CHECK(f.at(0, 0) == doctest::Approx(1.5).epsilon(1e-15));  // x = -1/2
  const FieldStats s = stats(f);
  CHECK(s.mass == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(s.l1 == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(s.l2 == doctest::Approx(std::sqrt(2.75)).epsilon(1e-13));
  CHECK(s.linf == doctest::Approx(2.5).epsilon(1e-13));
  CHECK(s.min == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("raw write plus symmetry partner reproduces a real mode") {
  Grid2D g = Grid2D::square(16);
  SpectralWorkspace ws(g);
  Field2D fs(g, Rep::spectral);
  // set c(2, 3) = c(-2, -3)* = (0.25, 0.25) through the raw layout; the raw
  // entries differ from coefficients by the alternating phase (-1)^(kx+ky)
  const cx want(0.25, 0.25);
  const double phase = ((2 + 3) % 2 == 0) ? 1.0 : -1.0;
  fs.set_raw(2, 3, want * phase);
  CHECK(std::abs(fs.coefficient(2, 3) - want) <= 1e-15);
  CHECK(std::abs(fs.coefficient(-2, -3) - std::conj(want)) <= 1e-15);
  Field2D fp = to_physical(fs, ws);
  Field2D expect = Field2D::from_function(g, [&](double x, double y) {
    const double ph = 2.0 * kPi * (2 * x + 3 * y);
    return 2.0 * (want.real() * std::cos(ph) - want.imag() * std::sin(ph));
  });
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(fp.phys[i] - expect.phys[i]) <= 1e-13);
}

TEST_CASE("one dimensional transforms against the oracle") {
  Grid1D g(32);
  LineWorkspace ws(g);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field1D f(g, Rep::physical);
  for (auto& v : f.phys) v = d(rng);

  Field1D fs = to_spectral(f, ws);
  for (int k = -g.n / 2; k <= g.n / 2; ++k) {
    CAPTURE(k);
    CHECK(std::abs(fs.coefficient(k) - dft_oracle_1d(f, k)) <= 1e-11);
  }

  Field1D back = to_physical(fs, ws);
  for (int j = 0; j < g.n; ++j)
    CHECK(std::abs(back.at(j) - f.at(j)) <= 1e-12);

  const double grid_l2 = stats(f).l2;
  CHECK(ws.l2(fs.spec.data()) == doctest::Approx(grid_l2).epsilon(1e-12));

  Field1D df(g, Rep::spectral);
  Field1D smooth = Field1D::from_function(
      g, [](double y) { return std::cos(6.0 * kPi * y); });
  Field1D ss = to_spectral(smooth, ws);
  ws.deriv(ss.spec.data(), df.spec.data());
  Field1D dfp = to_physical(df, ws);
  for (int j = 0; j < g.n; ++j) {
    const double want = -6.0 * kPi * std::sin(6.0 * kPi * g.y(j));
    CHECK(std::abs(dfp.at(j) - want) <= 1e-10);
  }

  ws.dealias(fs.spec.data());
  for (int k = g.dealias_k() + 1; k < g.k_count(); ++k)
    CHECK(fs.spec[k] == cx(0.0, 0.0));
}

TEST_SUITE_END();

#include "reactmix/field.hpp"

#include <cmath>

#include "reactmix/errors.hpp"
#include "reactmix/kernels.hpp"

namespace reactmix {

Field2D::Field2D(Grid2D g, Rep r) : grid(g), rep(r) {
  if (rep == Rep::physical)
    phys.assign(g.size(), 0.0);
  else
    spec.assign(g.spectral_size(), cx(0.0, 0.0));
}

Field2D Field2D::from_function(Grid2D g,
                               const std::function<double(double, double)>& f) {
  Field2D out(g, Rep::physical);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.phys[g.index(i, j)] = f(g.x(i), g.y(j));
  return out;
}

namespace {
int wrap_row(int ky, int n) { return ky >= 0 ? ky : ky + n; }
double phase(int kx, int ky) { return ((kx + ky) & 1) ? -1.0 : 1.0; }
}  // namespace

cx Field2D::coefficient(int kx, int ky) const {
  if (rep != Rep::spectral)
    throw ConfigError("coefficient() requires the spectral representation");
  if (std::abs(kx) > grid.nx / 2 || std::abs(ky) > grid.ny / 2)
    throw ConfigError("wavenumber out of range");
  cx c;
  if (kx >= 0)
    c = spec[std::size_t(wrap_row(ky, grid.ny)) * grid.kx_count() + kx];
  else
    c = std::conj(
        spec[std::size_t(wrap_row(-ky, grid.ny)) * grid.kx_count() - kx]);
  return phase(kx, ky) * c;
}

void Field2D::set_raw(int kx, int ky, cx v) {
  if (rep != Rep::spectral)
    throw ConfigError("set_raw() requires the spectral representation");
  if (kx < 0 || kx > grid.nx / 2 || std::abs(ky) > grid.ny / 2)
    throw ConfigError("wavenumber out of range");
  spec[std::size_t(wrap_row(ky, grid.ny)) * grid.kx_count() + kx] = v;
}

cx Field2D::raw(int kx, int ky) const {
  if (rep != Rep::spectral)
    throw ConfigError("raw() requires the spectral representation");
  if (kx < 0 || kx > grid.nx / 2 || std::abs(ky) > grid.ny / 2)
    throw ConfigError("wavenumber out of range");
  return spec[std::size_t(wrap_row(ky, grid.ny)) * grid.kx_count() + kx];
}

Field2D to_spectral(const Field2D& f, SpectralWorkspace& ws) {
  if (f.grid != ws.grid()) throw ConfigError("field/workspace grid mismatch");
  if (f.rep == Rep::spectral) return f;
  const auto& k = kernels::active();
  if (!k.all_finite(f.phys.data(), f.phys.size()))
    throw ConfigError("non-finite values in field");
  Field2D out(f.grid, Rep::spectral);
  ws.forward(f.phys.data(), out.spec.data());
  return out;
}

Field2D to_physical(const Field2D& f, SpectralWorkspace& ws) {
  if (f.grid != ws.grid()) throw ConfigError("field/workspace grid mismatch");
  if (f.rep == Rep::physical) return f;
  const auto& k = kernels::active();
  if (!k.all_finite(reinterpret_cast<const double*>(f.spec.data()),
                    2 * f.spec.size()))
    throw ConfigError("non-finite values in field");
  Field2D out(f.grid, Rep::physical);
  ws.backward(f.spec.data(), out.phys.data());
  return out;
}

FieldStats stats(const Field2D& f) {
  if (f.rep != Rep::physical)
    throw ConfigError("stats() requires the physical representation");
  const auto& k = kernels::active();
  const double* x = f.phys.data();
  std::size_t n = f.phys.size();
  FieldStats s;
  s.l1 = k.sum_abs(x, n) / double(n);
  s.l2 = std::sqrt(k.sum_sq(x, n) / double(n));
  s.linf = k.max_abs(x, n);
  s.min = k.min_val(x, n);
  s.mass = k.sum(x, n) / double(n);
  return s;
}

Field1D::Field1D(Grid1D g, Rep r) : grid(g), rep(r) {
  if (rep == Rep::physical)
    phys.assign(g.n, 0.0);
  else
    spec.assign(g.k_count(), cx(0.0, 0.0));
}

Field1D Field1D::from_function(Grid1D g,
                               const std::function<double(double)>& f) {
  Field1D out(g, Rep::physical);
  for (int j = 0; j < g.n; ++j) out.phys[j] = f(g.y(j));
  return out;
}

cx Field1D::coefficient(int k) const {
  if (rep != Rep::spectral)
    throw ConfigError("coefficient() requires the spectral representation");
  if (std::abs(k) > grid.n / 2) throw ConfigError("wavenumber out of range");
  cx c = k >= 0 ? spec[k] : std::conj(spec[-k]);
  return ((k & 1) ? -1.0 : 1.0) * c;
}

Field1D to_spectral(const Field1D& f, LineWorkspace& ws) {
  if (f.grid != ws.grid()) throw ConfigError("field/workspace grid mismatch");
  if (f.rep == Rep::spectral) return f;
  const auto& k = kernels::active();
  if (!k.all_finite(f.phys.data(), f.phys.size()))
    throw ConfigError("non-finite values in field");
  Field1D out(f.grid, Rep::spectral);
  ws.forward(f.phys.data(), out.spec.data());
  return out;
}

Field1D to_physical(const Field1D& f, LineWorkspace& ws) {
  if (f.grid != ws.grid()) throw ConfigError("field/workspace grid mismatch");
  if (f.rep == Rep::physical) return f;
  Field1D out(f.grid, Rep::physical);
  ws.backward(f.spec.data(), out.phys.data());
  return out;
}

FieldStats stats(const Field1D& f) {
  if (f.rep != Rep::physical)
    throw ConfigError("stats() requires the physical representation");
  const auto& k = kernels::active();
  const double* x = f.phys.data();
  std::size_t n = f.phys.size();
  FieldStats s;
  s.l1 = k.sum_abs(x, n) / double(n);
  s.l2 = std::sqrt(k.sum_sq(x, n) / double(n));
  s.linf = k.max_abs(x, n);
  s.min = k.min_val(x, n);
  s.mass = k.sum(x, n) / double(n);
  return s;
}

}  // namespace reactmix

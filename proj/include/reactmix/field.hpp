#pragma once

#include <functional>

#include "reactmix/fft.hpp"
#include "reactmix/grid.hpp"

namespace reactmix {

enum class Rep { physical, spectral };

// Scalar field on the periodic unit square. Exactly one storage buffer is
// active, selected by rep. Spectral storage is the workspace's native r2c
// half layout; the coefficient() accessor converts to coefficients of
// exp(2*pi*i k.x) on [-1/2,1/2)^2, which differ from the raw layout by the
// alternating phase picked up from the half-cell grid offset.
struct Field2D {
  Grid2D grid;
  Rep rep;
  aligned_vector<double> phys;
  aligned_vector<cx> spec;

  Field2D(Grid2D g, Rep r);
  static Field2D from_function(Grid2D g,
                               const std::function<double(double, double)>& f);
  static Field2D zero(Grid2D g) { return Field2D(g, Rep::physical); }

  double& at(int i, int j) { return phys[grid.index(i, j)]; }
  double at(int i, int j) const { return phys[grid.index(i, j)]; }

  // Coefficient of exp(2*pi*i (kx x + ky y)); |kx| <= nx/2, |ky| <= ny/2.
  cx coefficient(int kx, int ky) const;
  // Raw half-layout write, kx >= 0. Symmetry partners are the caller's job.
  void set_raw(int kx, int ky, cx v);
  cx raw(int kx, int ky) const;

  friend bool operator==(const Field2D&, const Field2D&) = default;
};

// Transforms between representations. Inputs with non-finite entries are
// rejected. Passing a field already in the target representation copies it.
Field2D to_spectral(const Field2D& f, SpectralWorkspace& ws);
Field2D to_physical(const Field2D& f, SpectralWorkspace& ws);

// Norms under the grid-average quadrature (unit-volume domain): the L1 norm
// is mean(|f|), L2 is sqrt(mean(f^2)), Linf is max(|f|).
struct FieldStats {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double min = 0.0;
  double mass = 0.0;  // signed mean
};
FieldStats stats(const Field2D& f);  // physical representation required

// Scalar field on the periodic unit interval, same conventions.
struct Field1D {
  Grid1D grid;
  Rep rep;
  aligned_vector<double> phys;
  aligned_vector<cx> spec;

  Field1D(Grid1D g, Rep r);
  static Field1D from_function(Grid1D g, const std::function<double(double)>& f);

  double& at(int j) { return phys[j]; }
  double at(int j) const { return phys[j]; }
  cx coefficient(int k) const;

  friend bool operator==(const Field1D&, const Field1D&) = default;
};

Field1D to_spectral(const Field1D& f, LineWorkspace& ws);
Field1D to_physical(const Field1D& f, LineWorkspace& ws);
FieldStats stats(const Field1D& f);

}  // namespace reactmix

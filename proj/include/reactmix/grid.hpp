#pragma once

#include <string>

#include "reactmix/errors.hpp"

namespace reactmix {

// Uniform grid on the periodic unit square [-1/2, 1/2)^2.
// Point (i, j) sits at (-1/2 + i/nx, -1/2 + j/ny). Row-major storage with x
// contiguous: flat index j*nx + i. Sizes must be powers of two, at least 16,
// so transform sizes stay friendly and the dealiasing band is well defined.
struct Grid2D {
  int nx = 0;
  int ny = 0;

  Grid2D(int nx_, int ny_) : nx(nx_), ny(ny_) {
    if (!admissible(nx) || !admissible(ny))
      throw ConfigError("grid sizes must be powers of two >= 16, got " +
                        std::to_string(nx) + "x" + std::to_string(ny));
  }
  static Grid2D square(int n) { return Grid2D(n, n); }

  static bool admissible(int n) {
    return n >= 16 && (n & (n - 1)) == 0;
  }

  bool operator==(const Grid2D&) const = default;

  double dx() const { return 1.0 / nx; }
  double dy() const { return 1.0 / ny; }
  double x(int i) const { return -0.5 + i * (1.0 / nx); }
  double y(int j) const { return -0.5 + j * (1.0 / ny); }

  std::size_t size() const { return std::size_t(nx) * ny; }
  std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }

  // r2c spectral layout: rows are ky (wrapped), columns kx in [0, nx/2].
  int kx_count() const { return nx / 2 + 1; }
  std::size_t spectral_size() const { return std::size_t(ny) * kx_count(); }
  int ky_of_row(int j) const { return j <= ny / 2 ? j : j - ny; }

  // Largest wavenumber kept by the 2/3-rule band in each direction.
  int dealias_kx() const { return nx / 3; }
  int dealias_ky() const { return ny / 3; }
};

// Uniform grid on the periodic unit interval [-1/2, 1/2).
struct Grid1D {
  int n = 0;

  explicit Grid1D(int n_) : n(n_) {
    if (!Grid2D::admissible(n))
      throw ConfigError("grid size must be a power of two >= 16, got " +
                        std::to_string(n));
  }
  bool operator==(const Grid1D&) const = default;

  double dy() const { return 1.0 / n; }
  double y(int j) const { return -0.5 + j * (1.0 / n); }
  int k_count() const { return n / 2 + 1; }
  int dealias_k() const { return n / 3; }
};

}  // namespace reactmix

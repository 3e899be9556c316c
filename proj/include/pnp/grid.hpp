#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pnp/errors.hpp"

namespace pnp {

/// Periodic uniform grid on (-L, L)^dim with N cells per axis and spacing
/// h = 2L/N. Cell centers sit at -L + (i + 1/2) h; the face i+1/2 between
/// cells i and i+1 sits at -L + (i + 1) h and is stored at index i.
struct Grid {
  int dim;
  int N;
  double L;
  double h;

  Grid(int dim_, int N_, double L_)
      : dim(dim_), N(N_), L(L_), h(2.0 * L_ / N_) {
    if (dim != 2 && dim != 3)
      throw WrongDimension("grid dimension must be 2 or 3, got " +
                           std::to_string(dim));
    if (N < 2) throw Error("grid needs N >= 2, got " + std::to_string(N));
    if (!(L > 0.0) || !std::isfinite(L))
      throw Error("grid needs finite L > 0");
  }

  std::size_t cells() const {
    std::size_t n = static_cast<std::size_t>(N);
    return dim == 2 ? n * n : n * n * n;
  }
  double volume() const { return std::pow(2.0 * L, dim); }

  double cell_center(int i) const { return -L + (i + 0.5) * h; }
  double face_center(int i) const { return -L + (i + 1.0) * h; }

  int wrap(int i) const {
    int r = i % N;
    return r < 0 ? r + N : r;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim == b.dim && a.N == b.N && a.L == b.L;
  }
};

/// Scalar values at cell centers, flat storage with x fastest:
/// index(i,j,k) = i + N*(j + N*k). Periodic index arithmetic is the
/// caller's business; accessors take in-range indices.
class CellField {
 public:
  explicit CellField(const Grid& g, double value = 0.0)
      : grid_(g), v_(g.cells(), value) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }

  std::size_t index(int i, int j, int k = 0) const {
    const std::size_t n = static_cast<std::size_t>(grid_.N);
    return static_cast<std::size_t>(i) + n * (static_cast<std::size_t>(j) +
                                              n * static_cast<std::size_t>(k));
  }
  double& operator()(int i, int j, int k = 0) { return v_[index(i, j, k)]; }
  double operator()(int i, int j, int k = 0) const {
    return v_[index(i, j, k)];
  }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

 private:
  Grid grid_;
  std::vector<double> v_;
};

/// Vector quantity with one component per axis, each living on the faces
/// normal to that axis. Component a at face (i+1/2, j, k) (for a = x) is
/// stored at the flat cell index of (i,j,k), so every component array has
/// N^dim entries with periodic wrap.
class FaceField {
 public:
  explicit FaceField(const Grid& g, double value = 0.0) : grid_(g) {
    for (int a = 0; a < g.dim; ++a) c_[a].assign(g.cells(), value);
  }

  const Grid& grid() const { return grid_; }

  std::vector<double>& comp(int axis) { return c_[axis]; }
  const std::vector<double>& comp(int axis) const { return c_[axis]; }

 private:
  Grid grid_;
  std::array<std::vector<double>, 3> c_;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw GridMismatch("fields live on different grids");
}

inline bool all_finite(const CellField& f) {
  for (double v : f)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const FaceField& f) {
  for (int a = 0; a < f.grid().dim; ++a)
    for (double v : f.comp(a))
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace pnp

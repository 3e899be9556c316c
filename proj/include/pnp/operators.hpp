#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pnp/grid.hpp"

namespace pnp {

namespace detail {

// Visit every cell in storage order, handing out the flat index and the
// per-axis coordinates. dim == 2 keeps k pinned at 0.
template <class F>
inline void for_cells(const Grid& g, F&& visit) {
  const int N = g.N;
  const int kmax = g.dim == 3 ? N : 1;
  std::size_t c = 0;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i, ++c) visit(c, i, j, k);
}

inline std::size_t axis_stride(const Grid& g, int axis) {
  const std::size_t n = static_cast<std::size_t>(g.N);
  return axis == 0 ? 1 : axis == 1 ? n : n * n;
}

// out_a(i+1/2,j,k) = (nu(i+1,j,k) - nu(i,j,k)) / h, periodic wrap.
inline void gradient_into(const CellField& nu, FaceField& out) {
  const Grid& g = nu.grid();
  const int N = g.N;
  const double inv_h = 1.0 / g.h;
  const double* v = nu.data();
  for (int a = 0; a < g.dim; ++a) {
    double* f = out.comp(a).data();
    const std::size_t s = axis_stride(g, a);
    const std::size_t back = s * static_cast<std::size_t>(N - 1);
    for_cells(g, [&](std::size_t c, int i, int j, int k) {
      const int coord = a == 0 ? i : a == 1 ? j : k;
      const std::size_t east = coord + 1 == N ? c - back : c + s;
      f[c] = (v[east] - v[c]) * inv_h;
    });
  }
}

// out(i,j,k) = sum_a (f_a(i+1/2) - f_a(i-1/2)) / h, periodic wrap.
inline void divergence_into(const FaceField& f, CellField& out) {
  const Grid& g = f.grid();
  const int N = g.N;
  const double inv_h = 1.0 / g.h;
  std::fill(out.begin(), out.end(), 0.0);
  double* o = out.data();
  for (int a = 0; a < g.dim; ++a) {
    const double* fa = f.comp(a).data();
    const std::size_t s = axis_stride(g, a);
    const std::size_t back = s * static_cast<std::size_t>(N - 1);
    for_cells(g, [&](std::size_t c, int i, int j, int k) {
      const int coord = a == 0 ? i : a == 1 ? j : k;
      const std::size_t west = coord == 0 ? c + back : c - s;
      o[c] += (fa[c] - fa[west]) * inv_h;
    });
  }
}

// out = div(coeff * grad nu); no positivity check, scratch provided by caller.
inline void div_coeff_grad_into(const FaceField& coeff, const CellField& nu,
                                CellField& out, FaceField& scratch) {
  gradient_into(nu, scratch);
  const Grid& g = nu.grid();
  for (int a = 0; a < g.dim; ++a) {
    const double* d = coeff.comp(a).data();
    double* f = scratch.comp(a).data();
    const std::size_t n = g.cells();
    for (std::size_t c = 0; c < n; ++c) f[c] *= d[c];
  }
  divergence_into(scratch, out);
}

inline double raw_sum(const CellField& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace detail

inline double cell_volume(const Grid& g) {
  return g.dim == 2 ? g.h * g.h : g.h * g.h * g.h;
}

inline FaceField gradient(const CellField& nu) {
  FaceField out(nu.grid());
  detail::gradient_into(nu, out);
  return out;
}

inline CellField divergence(const FaceField& f) {
  CellField out(f.grid());
  detail::divergence_into(f, out);
  return out;
}

// Exactly the composition div(grad nu); the 5/7-point stencil form is a
// consequence, not the implementation.
inline CellField laplacian(const CellField& nu) {
  FaceField scratch(nu.grid());
  CellField out(nu.grid());
  detail::gradient_into(nu, scratch);
  detail::divergence_into(scratch, out);
  return out;
}

/// div(coeff * grad nu) with a face-centered coefficient. The coefficient
/// must be strictly positive on every face (it is a mobility).
inline CellField div_coeff_grad(const FaceField& coeff, const CellField& nu) {
  require_same_grid(coeff.grid(), nu.grid());
  for (int a = 0; a < coeff.grid().dim; ++a)
    for (double d : coeff.comp(a))
      if (!(d > 0.0))
        throw NonPositiveCoefficient(
            "face coefficient must be strictly positive, found " +
            std::to_string(d));
  FaceField scratch(nu.grid());
  CellField out(nu.grid());
  detail::div_coeff_grad_into(coeff, nu, out, scratch);
  return out;
}

/// <nu, xi> = h^dim * sum nu*xi over cells.
inline double dot(const CellField& nu, const CellField& xi) {
  require_same_grid(nu.grid(), xi.grid());
  const double* a = nu.data();
  const double* b = xi.data();
  double s = 0.0;
  const std::size_t n = nu.size();
  for (std::size_t c = 0; c < n; ++c) s += a[c] * b[c];
  return s * cell_volume(nu.grid());
}

/// [f, g] = sum_a <a_axis(f_a g_a), 1>: the per-axis products are averaged
/// back to cell centers before summing.
inline double face_dot(const FaceField& f, const FaceField& g) {
  require_same_grid(f.grid(), g.grid());
  const Grid& gr = f.grid();
  const int N = gr.N;
  double s = 0.0;
  for (int a = 0; a < gr.dim; ++a) {
    const double* fa = f.comp(a).data();
    const double* ga = g.comp(a).data();
    const std::size_t st = detail::axis_stride(gr, a);
    const std::size_t back = st * static_cast<std::size_t>(N - 1);
    double sa = 0.0;
    detail::for_cells(gr, [&](std::size_t c, int i, int j, int k) {
      const int coord = a == 0 ? i : a == 1 ? j : k;
      const std::size_t west = coord == 0 ? c + back : c - st;
      sa += 0.5 * (fa[c] * ga[c] + fa[west] * ga[west]);
    });
    s += sa;
  }
  return s * cell_volume(gr);
}

/// Grid average: (h^dim / |Omega|) sum nu = (sum nu) / N^dim.
inline double mean(const CellField& nu) {
  return detail::raw_sum(nu) / static_cast<double>(nu.size());
}

inline double norm2(const CellField& nu) { return std::sqrt(dot(nu, nu)); }

inline double norm_inf(const CellField& nu) {
  double m = 0.0;
  for (double v : nu) m = std::max(m, std::abs(v));
  return m;
}

inline double norm_p(const CellField& nu, double p) {
  if (!(p >= 1.0)) throw Error("l^p norm needs p >= 1");
  double s = 0.0;
  for (double v : nu) s += std::pow(std::abs(v), p);
  return std::pow(s * cell_volume(nu.grid()), 1.0 / p);
}

/// || grad nu ||_2 through the face inner product.
inline double grad_norm2(const CellField& nu) {
  FaceField g = gradient(nu);
  return std::sqrt(face_dot(g, g));
}

inline double norm_h1(const CellField& nu) {
  const double a = norm2(nu);
  const double b = grad_norm2(nu);
  return std::sqrt(a * a + b * b);
}

}  // namespace pnp

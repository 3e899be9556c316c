#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "pnp/operators.hpp"

namespace pnp {

enum class PoissonMethod { Spectral, ConjugateGradient };

struct SolverStats {
  int iterations = 0;
  double residual = 0.0;  // relative to the right-hand side
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    if (p) {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};
using PlanPtr = std::shared_ptr<fftw_plan_s>;

}  // namespace detail

/// Inverse of -Delta_h on the mean-zero subspace of a periodic grid.
///
/// The default spectral method diagonalizes the stencil in the discrete
/// Fourier basis (exact up to round-off); conjugate gradient is kept as an
/// independent cross-check. Instances hold only immutable plans and may be
/// shared across threads; solves use per-call scratch.
class PoissonSolver {
 public:
  explicit PoissonSolver(const Grid& g,
                         PoissonMethod method = PoissonMethod::Spectral,
                         double tol = 1e-10, int max_iters = 20000)
      : grid_(g), method_(method), tol_(tol), max_iters_(max_iters) {
    const int N = g.N;
    eig_axis_.resize(N);
    const double c = 4.0 / (g.h * g.h);
    for (int k = 0; k < N; ++k) {
      const double s = std::sin(M_PI * k / N);
      eig_axis_[k] = c * s * s;
    }
    if (method_ == PoissonMethod::Spectral) {
      nc_ = static_cast<std::size_t>(N / 2 + 1);
      for (int d = 1; d < g.dim; ++d) nc_ *= static_cast<std::size_t>(N);
      int n[3] = {N, N, N};  // row-major dims; our x index varies fastest
      std::vector<double> rbuf(g.cells());
      std::vector<std::complex<double>> cbuf(nc_);
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      fwd_ = detail::PlanPtr(
          fftw_plan_dft_r2c(g.dim, n, rbuf.data(),
                            reinterpret_cast<fftw_complex*>(cbuf.data()),
                            FFTW_ESTIMATE | FFTW_UNALIGNED),
          detail::PlanDeleter());
      bwd_ = detail::PlanPtr(
          fftw_plan_dft_c2r(g.dim, n,
                            reinterpret_cast<fftw_complex*>(cbuf.data()),
                            rbuf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED),
          detail::PlanDeleter());
      if (!fwd_ || !bwd_) throw Error("fftw plan creation failed");
    }
  }

  const Grid& grid() const { return grid_; }
  PoissonMethod method() const { return method_; }

  /// Solve -Delta_h psi = f, mean(psi) = 0. The input mean must vanish:
  /// |mean(f)| > 1e-12 ||f||_2 signals a charge-imbalance bug upstream and
  /// throws instead of being projected away.
  CellField solve(const CellField& f, SolverStats& stats) const {
    require_same_grid(grid_, f.grid());
    const double nb = norm2(f);
    stats = {};
    if (nb == 0.0) return CellField(grid_);
    const double m = mean(f);
    const double gate = 1e-12 * nb;
    if (std::abs(m) > gate) throw NonZeroMean(m, gate);
    return method_ == PoissonMethod::Spectral ? solve_spectral(f)
                                              : solve_cg(f, nb, stats);
  }

  CellField solve(const CellField& f) const {
    SolverStats s;
    return solve(f, s);
  }

 private:
  CellField solve_spectral(const CellField& f) const {
    const int N = grid_.N;
    const int nh = N / 2 + 1;
    std::vector<double> rbuf(f.data(), f.data() + f.size());
    std::vector<std::complex<double>> cbuf(nc_);
    fftw_execute_dft_r2c(fwd_.get(), rbuf.data(),
                         reinterpret_cast<fftw_complex*>(cbuf.data()));
    // Complex layout: x (halved) fastest, then y, then z.
    const int kmax = grid_.dim == 3 ? N : 1;
    std::size_t c = 0;
    for (int k = 0; k < kmax; ++k)
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < nh; ++i, ++c) {
          const double lam = eig_axis_[i] + eig_axis_[j] + eig_axis_[k];
          cbuf[c] = lam == 0.0 ? 0.0 : cbuf[c] / lam;
        }
    fftw_execute_dft_c2r(bwd_.get(),
                         reinterpret_cast<fftw_complex*>(cbuf.data()),
                         rbuf.data());
    CellField psi(grid_);
    const double scale = 1.0 / static_cast<double>(f.size());
    for (std::size_t c2 = 0; c2 < psi.size(); ++c2) psi[c2] = rbuf[c2] * scale;
    const double mu = mean(psi);  // pin the gauge exactly
    for (double& v : psi) v -= mu;
    return psi;
  }

  CellField solve_cg(const CellField& b, double nb, SolverStats& stats) const {
    CellField x(grid_), r = b, p = b, ap(grid_);
    FaceField scratch(grid_);
    auto apply = [&](const CellField& v, CellField& out) {
      detail::gradient_into(v, scratch);
      detail::divergence_into(scratch, out);
      for (double& o : out) o = -o;
    };
    double rr = dot(r, r);
    const double stop = tol_ * nb;
    int it = 0;
    while (std::sqrt(rr) > stop) {
      if (it >= max_iters_)
        throw NoConvergence("poisson cg", it, std::sqrt(rr) / nb);
      apply(p, ap);
      const double alpha = rr / dot(p, ap);
      for (std::size_t c = 0; c < x.size(); ++c) {
        x[c] += alpha * p[c];
        r[c] -= alpha * ap[c];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t c = 0; c < p.size(); ++c) p[c] = r[c] + beta * p[c];
      ++it;
    }
    const double mu = mean(x);
    for (double& v : x) v -= mu;
    stats.iterations = it;
    stats.residual = std::sqrt(rr) / nb;
    return x;
  }

  Grid grid_;
  PoissonMethod method_;
  double tol_;
  int max_iters_;
  std::vector<double> eig_axis_;
  detail::PlanPtr fwd_, bwd_;
  std::size_t nc_ = 0;
};

/// ||f||_{-1,h} = sqrt(<f, (-Delta_h)^{-1} f>) on mean-zero fields.
inline double h_inv_norm(const CellField& f, const PoissonSolver& solver) {
  CellField psi = solver.solve(f);
  return std::sqrt(std::max(0.0, dot(f, psi)));
}

/// The operator  w -> mass_weight .* w - shift * div(mobility * grad w),
/// symmetric positive definite for positive coefficients and shift >= 0.
/// This is the symmetrized form of the inner-iteration systems.
struct EllipticSystem {
  EllipticSystem(FaceField mobility_, CellField mass_weight_, double shift_)
      : mobility(std::move(mobility_)),
        mass_weight(std::move(mass_weight_)),
        shift(shift_) {
    require_same_grid(mobility.grid(), mass_weight.grid());
    if (!(shift >= 0.0) || !std::isfinite(shift))
      throw Error("elliptic shift must be finite and >= 0");
    for (int a = 0; a < mobility.grid().dim; ++a)
      for (double v : mobility.comp(a))
        if (!(v > 0.0))
          throw NonPositiveCoefficient("mobility must be strictly positive");
    for (double v : mass_weight)
      if (!(v > 0.0))
        throw NonPositiveCoefficient("mass weight must be strictly positive");
  }

  const Grid& grid() const { return mass_weight.grid(); }

  FaceField mobility;
  CellField mass_weight;
  double shift;
};

namespace detail {

inline void spd_apply(const EllipticSystem& sys, const CellField& w,
                      CellField& out, FaceField& scratch) {
  div_coeff_grad_into(sys.mobility, w, out, scratch);
  const double* m = sys.mass_weight.data();
  const double* v = w.data();
  const double s = sys.shift;
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = m[c] * v[c] - s * out[c];
}

inline std::vector<double> jacobi_diagonal(const EllipticSystem& sys) {
  const Grid& g = sys.grid();
  const int N = g.N;
  const double w = sys.shift / (g.h * g.h);
  std::vector<double> d(g.cells());
  for (std::size_t c = 0; c < d.size(); ++c) d[c] = sys.mass_weight[c];
  for (int a = 0; a < g.dim; ++a) {
    const double* mob = sys.mobility.comp(a).data();
    const std::size_t st = axis_stride(g, a);
    const std::size_t back = st * static_cast<std::size_t>(N - 1);
    for_cells(g, [&](std::size_t c, int i, int j, int k) {
      const int coord = a == 0 ? i : a == 1 ? j : k;
      const std::size_t west = coord == 0 ? c + back : c - st;
      d[c] += w * (mob[c] + mob[west]);
    });
  }
  return d;
}

}  // namespace detail

struct SpdOptions {
  double tol = 1e-10;
  int max_iters = 5000;
  bool jacobi = false;
};

/// Preconditioned conjugate gradient for an EllipticSystem. Returns w with
/// relative residual <= tol; throws NoConvergence otherwise.
inline CellField spd_solve(const EllipticSystem& sys, const CellField& rhs,
                           const SpdOptions& opt = {},
                           SolverStats* stats = nullptr,
                           const CellField* initial = nullptr) {
  require_same_grid(sys.grid(), rhs.grid());
  if (stats) *stats = {};

  if (sys.shift == 0.0) {
    CellField w = rhs;
    for (std::size_t c = 0; c < w.size(); ++c) w[c] /= sys.mass_weight[c];
    return w;
  }

  const double nb = norm2(rhs);
  if (nb == 0.0) return CellField(sys.grid());

  CellField w = initial ? *initial : CellField(sys.grid());
  CellField r(sys.grid()), z(sys.grid()), p(sys.grid()), ap(sys.grid());
  FaceField scratch(sys.grid());
  std::vector<double> diag;
  if (opt.jacobi) diag = detail::jacobi_diagonal(sys);

  auto precondition = [&](const CellField& rin, CellField& zout) {
    if (opt.jacobi)
      for (std::size_t c = 0; c < zout.size(); ++c) zout[c] = rin[c] / diag[c];
    else
      std::copy(rin.begin(), rin.end(), zout.begin());
  };

  detail::spd_apply(sys, w, r, scratch);
  for (std::size_t c = 0; c < r.size(); ++c) r[c] = rhs[c] - r[c];

  const double stop = opt.tol * nb;
  int it = 0;
  double rz_prev = 0.0;
  bool fresh_direction = true;
  while (true) {
    double rn = norm2(r);
    if (rn <= stop) {
      // Accept only a freshly computed residual, not the CG recursion.
      detail::spd_apply(sys, w, ap, scratch);
      for (std::size_t c = 0; c < r.size(); ++c) r[c] = rhs[c] - ap[c];
      rn = norm2(r);
      if (rn <= 1.5 * stop) {
        if (stats) {
          stats->iterations = it;
          stats->residual = rn / nb;
        }
        return w;
      }
      fresh_direction = true;
    }
    if (it >= opt.max_iters) throw NoConvergence("spd_solve", it, rn / nb);

    precondition(r, z);
    const double rz = dot(r, z);
    if (fresh_direction || rz_prev == 0.0) {
      std::copy(z.begin(), z.end(), p.begin());
      fresh_direction = false;
    } else {
      const double beta = rz / rz_prev;
      for (std::size_t c = 0; c < p.size(); ++c) p[c] = z[c] + beta * p[c];
    }
    rz_prev = rz;

    detail::spd_apply(sys, p, ap, scratch);
    const double alpha = rz / dot(p, ap);
    for (std::size_t c = 0; c < w.size(); ++c) {
      w[c] += alpha * p[c];
      r[c] -= alpha * ap[c];
    }
    ++it;
  }
}

}  // namespace pnp

#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "pnp/elliptic.hpp"
#include "pnp/report.hpp"

namespace pnp {

struct SchemeParams {
  double dt = 1e-3;
  double D = 1.0;  // diffusivity ratio D_p / D_n
  double omega_r = 0.2;
  double picard_tol = 1e-10;
  int picard_max = 200;
  double linear_tol = 1e-10;
  int linear_max = 20000;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be > 0");
    if (!(D > 0.0) || !std::isfinite(D)) throw Error("D must be > 0");
    if (!(omega_r > 0.0 && omega_r < 1.0))
      throw Error("omega_r must lie strictly in (0,1)");
    if (!(picard_tol > 0.0)) throw Error("picard_tol must be > 0");
    if (picard_max < 1) throw Error("picard_max must be >= 1");
    if (!(linear_tol > 0.0)) throw Error("linear_tol must be > 0");
    if (linear_max < 1) throw Error("linear_max must be >= 1");
  }
};

/// Discrete solution at one time level. Concentrations are strictly
/// positive, phi is the mean-zero potential of the current charge.
struct State {
  CellField n, p, phi;
  double time = 0.0;
};

/// Optional forcing: sampled at the target time of each step. Null
/// functions mean zero forcing / no fixed charge.
struct Sources {
  using FieldFn = std::function<CellField(double, const Grid&)>;
  FieldFn f_n;
  FieldFn f_p;
  FieldFn rho_f;
};

struct PicardTrace {
  int iteration;
  double increment;
  int linear_iters;
};
using TraceHook = std::function<void(const PicardTrace&)>;

struct StepResult {
  State state;
  StepReport report;
};

/// Mobility averaged to faces: each face gets scale times the arithmetic
/// mean of the two adjacent cell values. scale is 1 for the n species and
/// D for the p species.
inline FaceField face_mobility(const CellField& c, double scale) {
  if (!(scale > 0.0)) throw Error("mobility scale must be > 0");
  const Grid& g = c.grid();
  for (double v : c)
    if (!(v > 0.0))
      throw NonPositiveConcentration(
          "mobility needs strictly positive concentrations");
  FaceField out(g);
  const int N = g.N;
  const double* v = c.data();
  for (int a = 0; a < g.dim; ++a) {
    double* f = out.comp(a).data();
    const std::size_t s = detail::axis_stride(g, a);
    const std::size_t back = s * static_cast<std::size_t>(N - 1);
    detail::for_cells(g, [&](std::size_t cc, int i, int j, int k) {
      const int coord = a == 0 ? i : a == 1 ? j : k;
      const std::size_t east = coord + 1 == N ? cc - back : cc + s;
      f[cc] = scale * 0.5 * (v[east] + v[cc]);
    });
  }
  return out;
}

struct ChemicalPotentials {
  CellField mu_n, mu_p, phi;
};

/// mu_n = ln n - phi, mu_p = ln p + phi with -Delta_h phi = p - n (+ rho_f).
inline ChemicalPotentials chemical_potentials(const CellField& n,
                                              const CellField& p,
                                              const PoissonSolver& poisson,
                                              const CellField* rho_f = nullptr) {
  require_same_grid(n.grid(), p.grid());
  for (std::size_t c = 0; c < n.size(); ++c)
    if (!(n[c] > 0.0) || !(p[c] > 0.0))
      throw NonPositiveConcentration("chemical potential needs n, p > 0");
  CellField charge(n.grid());
  for (std::size_t c = 0; c < charge.size(); ++c) {
    charge[c] = p[c] - n[c];
    if (rho_f) charge[c] += (*rho_f)[c];
  }
  ChemicalPotentials out{CellField(n.grid()), CellField(n.grid()),
                         poisson.solve(charge)};
  for (std::size_t c = 0; c < n.size(); ++c) {
    out.mu_n[c] = std::log(n[c]) - out.phi[c];
    out.mu_p[c] = std::log(p[c]) + out.phi[c];
  }
  return out;
}

/// Builds a valid State from concentrations: validates positivity and
/// solves for the potential.
inline State make_state(CellField n, CellField p, const PoissonSolver& poisson,
                        const CellField* rho_f = nullptr, double time = 0.0) {
  require_same_grid(n.grid(), p.grid());
  for (std::size_t c = 0; c < n.size(); ++c)
    if (!(n[c] > 0.0) || !(p[c] > 0.0))
      throw NonPositiveConcentration("initial concentrations must be > 0");
  if (!all_finite(n) || !all_finite(p)) throw Error("non-finite initial data");
  CellField charge(n.grid());
  for (std::size_t c = 0; c < charge.size(); ++c) {
    charge[c] = p[c] - n[c];
    if (rho_f) charge[c] += (*rho_f)[c];
  }
  CellField phi = poisson.solve(charge);
  return State{std::move(n), std::move(p), std::move(phi), time};
}

/// One time step of the semi-implicit scheme: mobilities frozen at the old
/// time level, log and potential terms implicit, solved by a relaxed
/// linearized fixed-point iteration. The two linear systems per stage are
/// solved in the symmetrized variable w = n*/n^k, which makes them SPD.
class Stepper {
 public:
  Stepper(const Grid& g, const SchemeParams& params)
      : grid_(g), prm_(params), poisson_(g) {
    prm_.validate();
  }

  const SchemeParams& params() const { return prm_; }
  const PoissonSolver& poisson() const { return poisson_; }

  StepResult step(const State& s, const Sources* src = nullptr,
                  const TraceHook& trace = {}) const {
    require_same_grid(grid_, s.n.grid());
    require_same_grid(grid_, s.p.grid());
    require_same_grid(grid_, s.phi.grid());
    for (std::size_t c = 0; c < s.n.size(); ++c)
      if (!(s.n[c] > 0.0) || !(s.p[c] > 0.0))
        throw NonPositiveConcentration("step input needs n, p > 0");
    if (!all_finite(s.n) || !all_finite(s.p) || !all_finite(s.phi))
      throw Error("step input has non-finite values");

    const double t_new = s.time + prm_.dt;
    std::optional<CellField> f_n, f_p, rho;
    if (src) {
      if (src->f_n) f_n = src->f_n(t_new, grid_);
      if (src->f_p) f_p = src->f_p(t_new, grid_);
      if (src->rho_f) rho = src->rho_f(t_new, grid_);
    }

    Iterates it = picard(s, f_n, f_p, rho, prm_.omega_r, trace);
    if (!it.positive) {
      // One retry with heavier damping before giving up: scheme-level
      // positivity is unconditional, the iterate path is not.
      it = picard(s, f_n, f_p, rho, 0.5 * (1.0 + prm_.omega_r), trace);
      if (!it.positive) throw PositivityLoss(it.bad_cell, it.bad_value);
    }
    if (!it.converged) throw PicardNoConvergence(it.iters, it.incr);

    // The potential of the accepted densities, re-solved rather than kept
    // from the relaxed iterate.
    CellField charge(grid_);
    for (std::size_t c = 0; c < charge.size(); ++c) {
      charge[c] = it.p[c] - it.n[c];
      if (rho) charge[c] += (*rho)[c];
    }
    CellField phi = poisson_.solve(charge);

    StepReport rep;
    rep.time = t_new;
    rep.picard_iters = it.iters;
    rep.residual = it.incr;
    double entropy = 0.0, cmin = it.n[0];
    for (std::size_t c = 0; c < it.n.size(); ++c) {
      entropy += it.n[c] * std::log(it.n[c]) + it.p[c] * std::log(it.p[c]);
      cmin = std::min(cmin, std::min(it.n[c], it.p[c]));
    }
    rep.energy = entropy * cell_volume(grid_) + 0.5 * dot(charge, phi);
    rep.mass_n = mean(it.n) * grid_.volume();
    rep.mass_p = mean(it.p) * grid_.volume();
    rep.c_min = cmin;

    // Dissipation of this transition: old-time mobilities against the new
    // chemical potentials.
    {
      CellField mu_n(grid_), mu_p(grid_);
      for (std::size_t c = 0; c < mu_n.size(); ++c) {
        mu_n[c] = std::log(it.n[c]) - phi[c];
        mu_p[c] = std::log(it.p[c]) + phi[c];
      }
      FaceField mob_n = face_mobility(s.n, 1.0);
      FaceField mob_p = face_mobility(s.p, prm_.D);
      rep.dissipation =
          prm_.dt * (weighted_grad_square(mob_n, mu_n) +
                     weighted_grad_square(mob_p, mu_p));
    }

    State out{std::move(it.n), std::move(it.p), std::move(phi), t_new};
    return {std::move(out), rep};
  }

  /// [mob * grad(mu), grad(mu)] — the quadratic form in the energy law.
  static double weighted_grad_square(const FaceField& mob,
                                     const CellField& mu) {
    FaceField gmu = gradient(mu);
    FaceField weighted = gmu;
    for (int a = 0; a < mob.grid().dim; ++a) {
      const double* m = mob.comp(a).data();
      double* w = weighted.comp(a).data();
      for (std::size_t c = 0; c < mob.grid().cells(); ++c) w[c] *= m[c];
    }
    return face_dot(weighted, gmu);
  }

 private:
  struct Iterates {
    CellField n, p, phi;
    int iters = 0;
    double incr = 0.0;
    bool converged = false;
    bool positive = true;
    std::size_t bad_cell = 0;
    double bad_value = 0.0;
  };

  Iterates picard(const State& s, const std::optional<CellField>& f_n,
                  const std::optional<CellField>& f_p,
                  const std::optional<CellField>& rho, double omega,
                  const TraceHook& trace) const {
    const double dt = prm_.dt;
    const std::size_t M = grid_.cells();

    FaceField mob_n = face_mobility(s.n, 1.0);
    FaceField mob_p = face_mobility(s.p, prm_.D);

    // Exact per-step mass budget, enforced through the linear solves.
    const double target_n =
        detail::raw_sum(s.n) + (f_n ? dt * detail::raw_sum(*f_n) : 0.0);
    const double target_p =
        detail::raw_sum(s.p) + (f_p ? dt * detail::raw_sum(*f_p) : 0.0);

    Iterates cur{s.n, s.p, s.phi};
    CellField work(grid_), rhs(grid_), star_n(grid_), star_p(grid_),
        charge(grid_);
    FaceField scratch(grid_);
    SpdOptions lin{prm_.linear_tol, prm_.linear_max, /*jacobi=*/true};
    CellField w_init(grid_, 1.0);

    for (int k = 0; k < prm_.picard_max; ++k) {
      // Stage systems: (diag(c_k) - dt div(mob grad)) w = rhs, c* = c_k .* w.
      SolverStats st_n, st_p;
      solve_species(cur.n, mob_n, cur.phi, -1.0, s.n, f_n, dt, lin, omega,
                    target_n, w_init, work, rhs, scratch, star_n, st_n);
      solve_species(cur.p, mob_p, cur.phi, +1.0, s.p, f_p, dt, lin, omega,
                    target_p, w_init, work, rhs, scratch, star_p, st_p);

      for (std::size_t c = 0; c < M; ++c) {
        charge[c] = star_p[c] - star_n[c];
        if (rho) charge[c] += (*rho)[c];
      }
      CellField phi_star = poisson_.solve(charge);

      // Relax all three, then check the cone and the increment.
      double incr_n2 = 0.0, incr_p2 = 0.0;
      const double scale_ref = 1.0 + norm2(cur.n) + norm2(cur.p);
      bool positive = true;
      std::size_t bad_cell = 0;
      double bad_value = 0.0;
      for (std::size_t c = 0; c < M; ++c) {
        const double nn = omega * cur.n[c] + (1.0 - omega) * star_n[c];
        const double pp = omega * cur.p[c] + (1.0 - omega) * star_p[c];
        if (positive && (!(nn > 0.0) || !(pp > 0.0))) {
          positive = false;
          bad_cell = c;
          bad_value = nn > 0.0 ? pp : nn;
        }
        const double dn = nn - cur.n[c];
        const double dp = pp - cur.p[c];
        incr_n2 += dn * dn;
        incr_p2 += dp * dp;
        star_n[c] = nn;
        star_p[c] = pp;
      }
      if (!positive)
        return Iterates{std::move(cur.n), std::move(cur.p), std::move(cur.phi),
                        k + 1,  0.0,      false,
                        false,  bad_cell, bad_value};

      const double hv = cell_volume(grid_);
      const double incr =
          std::sqrt(incr_n2 * hv) + std::sqrt(incr_p2 * hv);
      std::swap(cur.n, star_n);
      std::swap(cur.p, star_p);
      for (std::size_t c = 0; c < M; ++c)
        cur.phi[c] = omega * cur.phi[c] + (1.0 - omega) * phi_star[c];
      cur.iters = k + 1;
      cur.incr = incr;
      if (trace) trace({k, incr, st_n.iterations + st_p.iterations});
      if (incr <= prm_.picard_tol * scale_ref) {
        cur.converged = true;
        return cur;
      }
    }
    return cur;  // not converged
  }

  // One species stage: assemble the right-hand side, solve the SPD system
  // in w, pin the mass budget, recover c* = c_k .* w into star.
  void solve_species(const CellField& c_k, const FaceField& mob,
                     const CellField& phi_k, double phi_sign,
                     const CellField& c_old,
                     const std::optional<CellField>& force, double dt,
                     const SpdOptions& lin, double omega, double mass_target,
                     const CellField& w_init, CellField& work, CellField& rhs,
                     FaceField& scratch, CellField& star,
                     SolverStats& stats) const {
    const std::size_t M = grid_.cells();
    for (std::size_t c = 0; c < M; ++c)
      work[c] = std::log(c_k[c]) + phi_sign * phi_k[c];
    detail::div_coeff_grad_into(mob, work, rhs, scratch);
    for (std::size_t c = 0; c < M; ++c) {
      rhs[c] = c_old[c] + dt * rhs[c];
      if (force) rhs[c] += dt * (*force)[c];
    }
    EllipticSystem sys(mob, c_k, dt);
    CellField w = spd_solve(sys, rhs, lin, &stats, &w_init);

    // Mass pin: shift w by the constant that makes the relaxed iterate hit
    // the exact budget; the residual perturbation is of the order of the
    // linear tolerance.
    const double star_target =
        (mass_target - omega * detail::raw_sum(c_k)) / (1.0 - omega);
    double got = 0.0, weight = 0.0;
    for (std::size_t c = 0; c < M; ++c) {
      got += c_k[c] * w[c];
      weight += c_k[c];
    }
    const double shift = (star_target - got) / weight;
    for (std::size_t c = 0; c < M; ++c) star[c] = c_k[c] * (w[c] + shift);
  }

  Grid grid_;
  SchemeParams prm_;
  PoissonSolver poisson_;
};

/// Single-shot convenience: builds a Stepper for one step.
inline StepResult step(const State& s, const SchemeParams& params,
                       const Sources* src = nullptr) {
  return Stepper(s.n.grid(), params).step(s, src);
}

/// Report for an initial state (no transition yet, so no dissipation).
inline StepReport initial_report(const State& s, const PoissonSolver& poisson,
                                 const CellField* rho_f = nullptr) {
  CellField charge(s.n.grid());
  for (std::size_t c = 0; c < charge.size(); ++c) {
    charge[c] = s.p[c] - s.n[c];
    if (rho_f) charge[c] += (*rho_f)[c];
  }
  CellField phi = poisson.solve(charge);
  StepReport rep;
  rep.time = s.time;
  double entropy = 0.0, cmin = s.n[0];
  for (std::size_t c = 0; c < s.n.size(); ++c) {
    if (!(s.n[c] > 0.0) || !(s.p[c] > 0.0))
      throw NonPositiveConcentration("report needs n, p > 0");
    entropy += s.n[c] * std::log(s.n[c]) + s.p[c] * std::log(s.p[c]);
    cmin = std::min(cmin, std::min(s.n[c], s.p[c]));
  }
  rep.energy = entropy * cell_volume(s.n.grid()) + 0.5 * dot(charge, phi);
  rep.mass_n = mean(s.n) * s.n.grid().volume();
  rep.mass_p = mean(s.p) * s.n.grid().volume();
  rep.c_min = cmin;
  return rep;
}

}  // namespace pnp

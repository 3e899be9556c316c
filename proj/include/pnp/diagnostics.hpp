#pragma once

#include "pnp/scheme.hpp"

namespace pnp {

struct Observables {
  double mass_n = 0.0;
  double mass_p = 0.0;
  double c_min = 0.0;
};

/// Masses (mean times domain volume) and the minimum concentration over
/// both species, the positivity diagnostic.
inline Observables observables(const CellField& n, const CellField& p) {
  require_same_grid(n.grid(), p.grid());
  Observables o;
  o.mass_n = mean(n) * n.grid().volume();
  o.mass_p = mean(p) * p.grid().volume();
  double m = n[0];
  for (std::size_t c = 0; c < n.size(); ++c)
    m = std::min(m, std::min(n[c], p[c]));
  o.c_min = m;
  return o;
}

inline Observables observables(const State& s) { return observables(s.n, s.p); }

/// E_h(n, p) = <n ln n + p ln p, 1> + 1/2 ||n - p||^2_{-1,h}.
inline double discrete_energy(const CellField& n, const CellField& p,
                              const PoissonSolver& poisson) {
  require_same_grid(n.grid(), p.grid());
  double entropy = 0.0;
  CellField q(n.grid());
  for (std::size_t c = 0; c < n.size(); ++c) {
    if (!(n[c] > 0.0) || !(p[c] > 0.0))
      throw NonPositiveConcentration("discrete energy needs n, p > 0");
    entropy += n[c] * std::log(n[c]) + p[c] * std::log(p[c]);
    q[c] = n[c] - p[c];
  }
  const double hn = h_inv_norm(q, poisson);
  return entropy * cell_volume(n.grid()) + 0.5 * hn * hn;
}

/// Energy with a fixed background charge folded into the electrostatic
/// term. This extends the source-free definition: with rho_f present the
/// H^{-1} term is taken of the total charge p - n + rho_f, which is the
/// quantity the scheme's potential actually sees.
inline double discrete_energy(const CellField& n, const CellField& p,
                              const CellField& rho_f,
                              const PoissonSolver& poisson) {
  require_same_grid(n.grid(), p.grid());
  require_same_grid(n.grid(), rho_f.grid());
  double entropy = 0.0;
  CellField q(n.grid());
  for (std::size_t c = 0; c < n.size(); ++c) {
    if (!(n[c] > 0.0) || !(p[c] > 0.0))
      throw NonPositiveConcentration("discrete energy needs n, p > 0");
    entropy += n[c] * std::log(n[c]) + p[c] * std::log(p[c]);
    q[c] = p[c] - n[c] + rho_f[c];
  }
  const double hn = h_inv_norm(q, poisson);
  return entropy * cell_volume(n.grid()) + 0.5 * hn * hn;
}

/// dt * ([mob_n grad mu_n, grad mu_n] + [mob_p grad mu_p, grad mu_p]) for
/// the transition old -> new: mobilities at the old level, potentials at
/// the new one (using the new state's phi, which the step refreshed from
/// its densities). Nonnegative by construction.
inline double dissipation_rate(const State& before, const State& after,
                               const SchemeParams& params) {
  require_same_grid(before.n.grid(), after.n.grid());
  CellField mu_n(after.n.grid()), mu_p(after.n.grid());
  for (std::size_t c = 0; c < mu_n.size(); ++c) {
    if (!(after.n[c] > 0.0) || !(after.p[c] > 0.0))
      throw NonPositiveConcentration("dissipation needs n, p > 0");
    mu_n[c] = std::log(after.n[c]) - after.phi[c];
    mu_p[c] = std::log(after.p[c]) + after.phi[c];
  }
  FaceField mob_n = face_mobility(before.n, 1.0);
  FaceField mob_p = face_mobility(before.p, params.D);
  return params.dt * (Stepper::weighted_grad_square(mob_n, mu_n) +
                      Stepper::weighted_grad_square(mob_p, mu_p));
}

}  // namespace pnp

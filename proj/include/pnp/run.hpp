#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "pnp/config.hpp"
#include "pnp/diagnostics.hpp"
#include "pnp/mms.hpp"

namespace pnp {

namespace detail {

class Manifest {
 public:
  explicit Manifest(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
  }
  void add(const std::string& name, double time) {
    out_ << name << " time=" << g17(time) << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline CellField sample_gaussians(const Grid& g,
                                  const std::vector<GaussianSpec>& specs) {
  CellField out(g);
  for (int j = 0; j < g.N; ++j) {
    const double y = g.cell_center(j);
    for (int i = 0; i < g.N; ++i) {
      const double x = g.cell_center(i);
      double v = 0.0;
      for (const GaussianSpec& s : specs)
        v += s.amplitude *
             std::exp(-s.width * ((x - s.cx) * (x - s.cx) +
                                  (y - s.cy) * (y - s.cy)));
      out(i, j) = v;
    }
  }
  return out;
}

}  // namespace detail

inline std::optional<CellField> build_fixed_charge(const RunConfig& cfg,
                                                   const Grid& g) {
  switch (cfg.rho_f.kind) {
    case FixedChargeSpec::Kind::None:
      return std::nullopt;
    case FixedChargeSpec::Kind::Gaussians:
      return detail::sample_gaussians(g, cfg.rho_f.gaussians);
    case FixedChargeSpec::Kind::File: {
      FieldFile f = read_field(std::filesystem::path(cfg.rho_f.path));
      if (!(f.field.grid() == g))
        throw ValidationError("physics.rho_f",
                              "fixed charge file grid does not match run grid");
      return std::move(f.field);
    }
  }
  return std::nullopt;
}

inline CellField build_initial(const RunConfig& cfg, const Grid& g,
                               double constant, const std::string& file,
                               const char* key) {
  if (file.empty()) return CellField(g, constant);
  FieldFile f = read_field(std::filesystem::path(file));
  if (!(f.field.grid() == g))
    throw ValidationError(key, "initial field grid does not match run grid");
  return std::move(f.field);
}

namespace detail {

inline void write_snapshot(const std::filesystem::path& dir, Manifest& man,
                           const State& s, long step) {
  std::ostringstream tag;
  tag << std::setw(6) << std::setfill('0') << step;
  const struct {
    const CellField* f;
    const char* name;
  } fields[] = {{&s.n, "n"}, {&s.p, "p"}, {&s.phi, "phi"}};
  for (const auto& fd : fields) {
    const std::string name =
        std::string(fd.name) + "_" + tag.str() + ".field";
    write_field(dir / name, *fd.f, fd.name, s.time);
    man.add(name, s.time);
  }
}

inline void run_simulate(const RunConfig& cfg,
                         const std::filesystem::path& out_dir) {
  Grid g(cfg.dim, cfg.N(), cfg.L);
  std::optional<CellField> rho = build_fixed_charge(cfg, g);
  CellField n0 = build_initial(cfg, g, cfg.initial_n, cfg.initial_n_file,
                               "initial.n_file");
  CellField p0 = build_initial(cfg, g, cfg.initial_p, cfg.initial_p_file,
                               "initial.p_file");

  SchemeParams prm = cfg.scheme_params();
  if (cfg.T_final == 0.0 && prm.dt <= 0.0) prm.dt = 1.0;  // zero-step run
  Stepper stepper(g, prm);
  State s = make_state(std::move(n0), std::move(p0), stepper.poisson(),
                       rho ? &*rho : nullptr, 0.0);

  Sources src;
  if (rho) {
    CellField fixed = *rho;
    src.rho_f = [fixed](double, const Grid&) { return fixed; };
  }

  TimeSeriesWriter ts(out_dir / "timeseries.csv");
  Manifest man(out_dir / "manifest.txt");
  ts.write(initial_report(s, stepper.poisson(), rho ? &*rho : nullptr));
  write_snapshot(out_dir, man, s, 0);

  const double T = cfg.T_final;
  const long total = T > 0.0 ? static_cast<long>(std::llround(
                                   std::ceil(T / prm.dt - 1e-9)))
                             : 0;
  double t_left = T;
  for (long m = 1; m <= total; ++m) {
    const bool full_step = t_left >= prm.dt * (1.0 - 1e-12);
    SchemeParams eff = prm;
    if (!full_step) eff.dt = t_left;
    StepResult r = full_step ? stepper.step(s, rho ? &src : nullptr)
                             : Stepper(g, eff).step(s, rho ? &src : nullptr);
    t_left = full_step ? t_left - prm.dt : 0.0;
    s = std::move(r.state);
    if (m % cfg.report_stride == 0 || m == total) ts.write(r.report);
    if ((cfg.snapshot_stride > 0 && m % cfg.snapshot_stride == 0) ||
        m == total)
      write_snapshot(out_dir, man, s, m);
  }
  man.add("timeseries.csv", s.time);
}

inline void run_mms_convergence(const RunConfig& cfg,
                                const std::filesystem::path& out_dir,
                                std::ostream& echo) {
  SchemeParams base = cfg.scheme_params();
  base.dt = 1.0;  // per-row dt = h^2
  auto rows = mms::convergence_study(cfg.N_list, base, cfg.T_final);
  {
    std::ofstream csv(out_dir / "convergence.csv");
    if (!csv) throw Error("cannot write convergence.csv");
    mms::write_convergence_csv(rows, csv);
  }
  {
    std::ofstream txt(out_dir / "convergence.txt");
    if (!txt) throw Error("cannot write convergence.txt");
    mms::write_convergence_table(rows, txt);
  }
  mms::write_convergence_table(rows, echo);
}

inline void run_mms_single(const RunConfig& cfg,
                           const std::filesystem::path& out_dir,
                           std::ostream& echo) {
  const int N = cfg.N();
  const double h = 2.0 / N;
  SchemeParams base = cfg.scheme_params();
  const double dt = cfg.dt > 0.0 ? cfg.dt : h * h;
  base.dt = dt;
  mms::RunResult r = mms::run_case(N, dt, cfg.T_final, base);
  std::ofstream csv(out_dir / "mms_errors.csv");
  if (!csv) throw Error("cannot write mms_errors.csv");
  csv << "h,err_p,err_n,err_phi\n"
      << g17(h) << ',' << g17(r.err_p) << ',' << g17(r.err_n) << ','
      << g17(r.err_phi) << '\n';
  echo << "h=" << h << " err_p=" << r.err_p << " err_n=" << r.err_n
       << " err_phi=" << r.err_phi << '\n';
}

}  // namespace detail

/// Execute a validated configuration. Output files land in cfg.output_dir
/// unless out_override is non-empty.
inline void run(const RunConfig& cfg, const std::string& out_override = {},
                std::ostream& echo = std::cout) {
  const std::filesystem::path out_dir =
      out_override.empty() ? cfg.output_dir : out_override;
  std::filesystem::create_directories(out_dir);
  switch (cfg.mode) {
    case RunMode::Simulate:
      detail::run_simulate(cfg, out_dir);
      break;
    case RunMode::MmsConvergence:
      detail::run_mms_convergence(cfg, out_dir, echo);
      break;
    case RunMode::MmsSingle:
      detail::run_mms_single(cfg, out_dir, echo);
      break;
  }
}

/// Operator and solver identity self-tests: prints one ok/FAIL line per
/// check, returns true when everything passed.
inline bool self_check(std::ostream& out) {
  bool all_ok = true;
  auto check = [&](const char* name, bool ok) {
    out << (ok ? "ok   " : "FAIL ") << name << '\n';
    all_ok = all_ok && ok;
  };
  std::mt19937_64 rng(0x5eed);
  auto rand_cell = [&](const Grid& g, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    CellField f(g);
    for (double& v : f) v = u(rng);
    return f;
  };
  auto rand_face = [&](const Grid& g, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    FaceField f(g);
    for (int a = 0; a < g.dim; ++a)
      for (double& v : f.comp(a)) v = u(rng);
    return f;
  };

  // Summation by parts, both identities of the lemma.
  {
    bool ok = true;
    for (int dim : {2, 3})
      for (int N : {4, 8, 16}) {
        Grid g(dim, N, 1.0);
        for (int rep = 0; rep < 5; ++rep) {
          CellField psi = rand_cell(g, -1, 1), nu = rand_cell(g, -1, 1);
          FaceField f = rand_face(g, -1, 1), D = rand_face(g, 0.1, 2.0);
          CellField div_f = divergence(f);
          const double lhs1 = dot(psi, div_f);
          const double rhs1 = -face_dot(gradient(psi), f);
          FaceField Dgrad = gradient(nu);
          for (int a = 0; a < dim; ++a)
            for (std::size_t c = 0; c < g.cells(); ++c)
              Dgrad.comp(a)[c] *= D.comp(a)[c];
          CellField div_Dg = divergence(Dgrad);
          const double lhs2 = dot(psi, div_Dg);
          const double rhs2 = -face_dot(gradient(psi), Dgrad);
          // relative to the Cauchy-Schwarz scale of the pairing, which is
          // what the rounding of the sums actually tracks
          const double scale1 = norm2(psi) * norm2(div_f) + 1e-30;
          const double scale2 = norm2(psi) * norm2(div_Dg) + 1e-30;
          ok = ok && std::abs(lhs1 - rhs1) <= 1e-12 * scale1 &&
               std::abs(lhs2 - rhs2) <= 1e-12 * scale2;
        }
      }
    check("summation-by-parts identities", ok);
  }

  // Laplacian impulse response against the stencil closed form.
  {
    bool ok = true;
    for (int dim : {2, 3}) {
      Grid g(dim, 5, 1.0);
      CellField imp(g);
      imp(2, 2, dim == 3 ? 2 : 0) = 1.0;
      CellField lap = laplacian(imp);
      const double ih2 = 1.0 / (g.h * g.h);
      for (int k = 0; k < (dim == 3 ? g.N : 1); ++k)
        for (int j = 0; j < g.N; ++j)
          for (int i = 0; i < g.N; ++i) {
            const int di = std::abs(i - 2), dj = std::abs(j - 2),
                      dk = dim == 3 ? std::abs(k - 2) : 0;
            double want = 0.0;
            if (di + dj + dk == 0)
              want = -2.0 * dim * ih2;
            else if (di + dj + dk == 1)
              want = ih2;
            ok = ok && std::abs(lap(i, j, k) - want) <= 1e-9 * ih2;
          }
    }
    check("laplacian impulse stencil", ok);
  }

  // laplacian == div(grad), and unit-coefficient reduction, bitwise.
  {
    Grid g(2, 8, 1.0);
    CellField nu = rand_cell(g, -2, 2);
    CellField a = laplacian(nu);
    CellField b = divergence(gradient(nu));
    CellField c = div_coeff_grad(FaceField(g, 1.0), nu);
    bool ok = true;
    for (std::size_t i = 0; i < a.size(); ++i)
      ok = ok && a[i] == b[i] && a[i] == c[i];
    check("composition and unit-coefficient reduction", ok);
  }

  // Spectral vs conjugate-gradient Poisson.
  {
    Grid g(2, 8, 1.0);
    CellField f = rand_cell(g, -1, 1);
    const double mu = mean(f);
    for (double& v : f) v -= mu;
    PoissonSolver spectral(g);
    PoissonSolver cg(g, PoissonMethod::ConjugateGradient, 1e-12);
    CellField a = spectral.solve(f), b = cg.solve(f);
    double err = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c)
      err = std::max(err, std::abs(a[c] - b[c]));
    check("poisson spectral vs cg", err <= 1e-8 * (norm_inf(a) + 1e-30));
  }

  // spd_solve postcondition on a random instance.
  {
    Grid g(2, 6, 1.0);
    EllipticSystem sys(rand_face(g, 0.2, 2.0), rand_cell(g, 0.5, 2.0), 0.37);
    CellField rhs = rand_cell(g, -1, 1);
    CellField w = spd_solve(sys, rhs, {1e-11, 10000, true});
    CellField Aw(g);
    FaceField scratch(g);
    detail::spd_apply(sys, w, Aw, scratch);
    double r = 0.0;
    for (std::size_t c = 0; c < rhs.size(); ++c) {
      const double d = rhs[c] - Aw[c];
      r += d * d;
    }
    check("spd_solve residual",
          std::sqrt(r * cell_volume(g)) <= 1e-9 * norm2(rhs));
  }

  // One screening-type step: exact mass, energy decrease, positivity.
  {
    Grid g(2, 16, 1.0);
    RunConfig cfg;
    cfg.rho_f = four_gaussians();
    std::optional<CellField> rho = build_fixed_charge(cfg, g);
    SchemeParams prm;
    prm.dt = 1e-3;
    Stepper st(g, prm);
    State s = make_state(CellField(g, 0.1), CellField(g, 0.1), st.poisson(),
                         &*rho, 0.0);
    Sources src;
    CellField fixed = *rho;
    src.rho_f = [fixed](double, const Grid&) { return fixed; };
    const double e0 =
        initial_report(s, st.poisson(), &*rho).energy;
    StepResult r = st.step(s, &src);
    const bool mass_ok =
        std::abs(r.report.mass_p - 0.4) <= 1e-12 * 0.4 &&
        std::abs(r.report.mass_n - 0.4) <= 1e-12 * 0.4;
    const bool energy_ok = r.report.energy <= e0 + 1e-10 * std::abs(e0);
    const bool positive_ok = r.report.c_min > 0.0;
    check("screening step mass/energy/positivity",
          mass_ok && energy_ok && positive_ok);
  }

  return all_ok;
}

}  // namespace pnp

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pnp/elliptic.hpp"
#include "support/oracles.hpp"

using namespace pnp;
using namespace pnp::testing;

namespace {
std::mt19937_64 rng(777);

double stencil_eigenvalue(const Grid& g, int mx, int my, int mz = 0) {
  auto lam = [&](int m) {
    const double s = std::sin(M_PI * m * g.h / (2 * g.L));
    return 4.0 / (g.h * g.h) * s * s;
  };
  return lam(mx) + lam(my) + (g.dim == 3 ? lam(mz) : 0.0);
}

CellField fourier_mode(const Grid& g, int mx, int my) {
  CellField f(g);
  for (int j = 0; j < g.N; ++j)
    for (int i = 0; i < g.N; ++i)
      f(i, j) = std::cos(M_PI * mx * g.cell_center(i) / g.L) *
                std::cos(M_PI * my * g.cell_center(j) / g.L);
  return f;
}
}  // namespace

TEST_CASE("poisson solve") {
  Grid g(2, 8, 1.0);
  PoissonSolver solver(g);

  SECTION("zero input, zero output") {
    CellField psi = solver.solve(CellField(g));
    for (double v : psi) CHECK(v == 0.0);
  }

  SECTION("Fourier mode inverts through the stencil eigenvalue") {
    for (auto [mx, my] : {std::pair{1, 0}, {2, 1}, {3, 3}}) {
      CellField f = fourier_mode(g, mx, my);
      const double lam = stencil_eigenvalue(g, mx, my);
      CellField psi = solver.solve(f);
      for (std::size_t c = 0; c < f.size(); ++c)
        CHECK(psi[c] == Catch::Approx(f[c] / lam).margin(1e-12));
    }
  }

  SECTION("postcondition on random mean-zero input, both methods") {
    for (PoissonMethod m :
         {PoissonMethod::Spectral, PoissonMethod::ConjugateGradient}) {
      PoissonSolver s(g, m, 1e-12);
      CellField f = random_mean_zero(g, rng);
      CellField psi = s.solve(f);
      CHECK(std::abs(mean(psi)) <= 1e-13);
      CellField lap = laplacian(psi);
      double err = 0.0;
      for (std::size_t c = 0; c < f.size(); ++c)
        err = std::max(err, std::abs(-lap[c] - f[c]));
      CHECK(err <= 1e-10 * norm_inf(f));
    }
  }

  SECTION("spectral and cg agree") {
    PoissonSolver cg(g, PoissonMethod::ConjugateGradient, 1e-13);
    CellField f = random_mean_zero(g, rng);
    CellField a = solver.solve(f), b = cg.solve(f);
    for (std::size_t c = 0; c < f.size(); ++c)
      CHECK(a[c] == Catch::Approx(b[c]).margin(1e-9));
  }

  SECTION("nonzero mean rejected") {
    CellField f = random_mean_zero(g, rng);
    for (double& v : f) v += 0.5;
    CHECK_THROWS_AS(solver.solve(f), NonZeroMean);
  }

  SECTION("self-adjointness of the inverse") {
    CellField f = random_mean_zero(g, rng);
    CellField h = random_mean_zero(g, rng);
    const double a = dot(solver.solve(f), h);
    const double b = dot(f, solver.solve(h));
    CHECK(std::abs(a - b) <= 1e-10 * (std::abs(a) + std::abs(b) + 1e-30));
  }

  SECTION("energy identity <f, psi> = [grad psi, grad psi]") {
    CellField f = random_mean_zero(g, rng);
    CellField psi = solver.solve(f);
    const double lhs = dot(f, psi);
    FaceField gp = gradient(psi);
    const double rhs = face_dot(gp, gp);
    CHECK(lhs >= 0.0);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (lhs + rhs + 1e-30));
  }

  SECTION("3D mode") {
    Grid g3(3, 6, 1.0);
    PoissonSolver s3(g3);
    CellField f(g3);
    for (int k = 0; k < g3.N; ++k)
      for (int j = 0; j < g3.N; ++j)
        for (int i = 0; i < g3.N; ++i)
          f(i, j, k) = std::cos(M_PI * g3.cell_center(i)) *
                       std::cos(2 * M_PI * g3.cell_center(j));
    const double lam = stencil_eigenvalue(g3, 1, 2, 0);
    CellField psi = s3.solve(f);
    for (std::size_t c = 0; c < f.size(); ++c)
      CHECK(psi[c] == Catch::Approx(f[c] / lam).margin(1e-12));
  }
}

TEST_CASE("discrete H^{-1} norm") {
  Grid g(2, 8, 1.0);
  PoissonSolver solver(g);

  SECTION("zero field") {
    CHECK(h_inv_norm(CellField(g), solver) == 0.0);
  }

  SECTION("single mode equals ||f||_2 / sqrt(lambda)") {
    CellField f = fourier_mode(g, 2, 1);
    const double lam = stencil_eigenvalue(g, 2, 1);
    CHECK(h_inv_norm(f, solver) ==
          Catch::Approx(norm2(f) / std::sqrt(lam)).epsilon(1e-12));
  }

  SECTION("triangle inequality") {
    for (int rep = 0; rep < 5; ++rep) {
      CellField a = random_mean_zero(g, rng), b = random_mean_zero(g, rng);
      CellField sum(g);
      for (std::size_t c = 0; c < sum.size(); ++c) sum[c] = a[c] + b[c];
      CHECK(h_inv_norm(sum, solver) <=
            h_inv_norm(a, solver) + h_inv_norm(b, solver) + 1e-12);
    }
  }

  SECTION("bounded by C ||f||_2 with C not growing in N") {
    double prev_worst = 0.0;
    for (int N : {4, 8, 16}) {
      Grid gn(2, N, 1.0);
      PoissonSolver sn(gn);
      double worst = 0.0;
      for (int rep = 0; rep < 50; ++rep) {
        CellField f = random_mean_zero(gn, rng);
        worst = std::max(worst, h_inv_norm(f, sn) / norm2(f));
      }
      if (prev_worst > 0.0) CHECK(worst <= prev_worst * (1.0 + 1e-9));
      prev_worst = std::max(prev_worst, worst);
    }
  }

  SECTION("matches the dense route") {
    Grid g4(2, 4, 1.0);
    PoissonSolver s4(g4);
    DensePoisson dp(g4);
    CellField f = random_mean_zero(g4, rng);
    CHECK(h_inv_norm(f, s4) ==
          Catch::Approx(dense_h_inv_norm(f, dp)).epsilon(1e-10));
  }
}

TEST_CASE("spd systems") {
  Grid g(2, 4, 1.0);

  SECTION("construction validates coefficients") {
    CHECK_THROWS_AS(
        EllipticSystem(FaceField(g, 0.0), CellField(g, 1.0), 0.1),
        NonPositiveCoefficient);
    CHECK_THROWS_AS(
        EllipticSystem(FaceField(g, 1.0), CellField(g, -1.0), 0.1),
        NonPositiveCoefficient);
    CHECK_THROWS_AS(
        EllipticSystem(FaceField(g, 1.0), CellField(g, 1.0), -0.1), Error);
  }

  SECTION("shift = 0 is elementwise division") {
    CellField mass = random_cell(g, 0.5, 2.0, rng);
    CellField rhs = random_cell(g, -1, 1, rng);
    EllipticSystem sys(FaceField(g, 1.0), mass, 0.0);
    CellField w = spd_solve(sys, rhs);
    for (std::size_t c = 0; c < w.size(); ++c)
      CHECK(w[c] == rhs[c] / mass[c]);
  }

  SECTION("unit coefficients, Fourier rhs: w = rhs / (1 + shift lambda)") {
    Grid g8(2, 8, 1.0);
    CellField rhs = fourier_mode(g8, 1, 2);
    const double lam = stencil_eigenvalue(g8, 1, 2);
    const double shift = 0.37;
    EllipticSystem sys(FaceField(g8, 1.0), CellField(g8, 1.0), shift);
    CellField w = spd_solve(sys, rhs, {1e-12, 5000, false});
    for (std::size_t c = 0; c < w.size(); ++c)
      CHECK(w[c] ==
            Catch::Approx(rhs[c] / (1.0 + shift * lam)).margin(1e-8));
  }

  SECTION("random instances match the dense direct solve, N <= 6") {
    for (int N : {4, 5, 6}) {
      Grid gn(2, N, 1.0);
      FaceField mob = random_face(gn, 0.2, 2.0, rng);
      CellField mass = random_cell(gn, 0.3, 1.5, rng);
      const double shift = 0.8;
      CellField rhs = random_cell(gn, -1, 1, rng);
      EllipticSystem sys(mob, mass, shift);
      CellField w = spd_solve(sys, rhs, {1e-12, 10000, true});

      Eigen::MatrixXd A = dense_spd_matrix(mob, mass, shift);
      Eigen::VectorXd b(rhs.size());
      for (std::size_t c = 0; c < rhs.size(); ++c) b(c) = rhs[c];
      Eigen::VectorXd x = A.partialPivLu().solve(b);
      for (std::size_t c = 0; c < rhs.size(); ++c)
        CHECK(w[c] == Catch::Approx(x(c)).margin(1e-8 * norm_inf(rhs)));
    }
  }

  SECTION("3D instance matches dense") {
    Grid g3(3, 4, 1.0);
    FaceField mob = random_face(g3, 0.2, 2.0, rng);
    CellField mass = random_cell(g3, 0.3, 1.5, rng);
    CellField rhs = random_cell(g3, -1, 1, rng);
    EllipticSystem sys(mob, mass, 0.45);
    CellField w = spd_solve(sys, rhs, {1e-12, 10000, false});
    Eigen::MatrixXd A = dense_spd_matrix(mob, mass, 0.45);
    Eigen::VectorXd b(rhs.size());
    for (std::size_t c = 0; c < rhs.size(); ++c) b(c) = rhs[c];
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    for (std::size_t c = 0; c < rhs.size(); ++c)
      CHECK(w[c] == Catch::Approx(x(c)).margin(1e-8));
  }

  SECTION("iteration cap raises NoConvergence") {
    Grid g16(2, 16, 1.0);
    EllipticSystem sys(FaceField(g16, 1.0), CellField(g16, 1e-6), 1.0);
    CellField rhs = random_cell(g16, -1, 1, rng);
    CHECK_THROWS_AS(spd_solve(sys, rhs, {1e-14, 2, false}), NoConvergence);
  }

  SECTION("solver stats are reported") {
    CellField rhs = random_cell(g, -1, 1, rng);
    EllipticSystem sys(FaceField(g, 1.0), CellField(g, 1.0), 0.5);
    SolverStats st;
    spd_solve(sys, rhs, {1e-10, 1000, false}, &st);
    CHECK(st.iterations > 0);
    CHECK(st.residual <= 1.5e-10);
  }
}

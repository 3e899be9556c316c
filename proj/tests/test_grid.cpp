#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <iostream>
#include <sstream>

#include "pnp/field_io.hpp"
#include "pnp/operators.hpp"
#include "support/random_fields.hpp"

using namespace pnp;
using pnp::testing::random_cell;
using pnp::testing::random_face;

namespace {
std::mt19937_64 rng(20240817);

std::size_t flat(const Grid& g, int i, int j, int k) {
  const std::size_t n = static_cast<std::size_t>(g.N);
  return static_cast<std::size_t>(i) +
         n * (static_cast<std::size_t>(j) + n * static_cast<std::size_t>(k));
}

CellField cyclic_shift(const CellField& f, int sx, int sy, int sz) {
  const Grid& g = f.grid();
  CellField out(g);
  const int N = g.N;
  const int kmax = g.dim == 3 ? N : 1;
  for (int k = 0; k < kmax; ++k)
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i)
        out(g.wrap(i + sx), g.wrap(j + sy), g.dim == 3 ? g.wrap(k + sz) : 0) =
            f(i, j, k);
  return out;
}

FaceField cyclic_shift(const FaceField& f, int sx, int sy, int sz) {
  const Grid& g = f.grid();
  FaceField out(g);
  const int N = g.N;
  const int kmax = g.dim == 3 ? N : 1;
  for (int a = 0; a < g.dim; ++a)
    for (int k = 0; k < kmax; ++k)
      for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
          out.comp(a)[flat(g, g.wrap(i + sx), g.wrap(j + sy),
                           g.dim == 3 ? g.wrap(k + sz) : 0)] =
              f.comp(a)[flat(g, i, j, k)];
  return out;
}
}  // namespace

TEST_CASE("grid basics") {
  Grid g(2, 8, 1.0);
  CHECK(g.h == Catch::Approx(0.25));
  CHECK(g.cells() == 64);
  CHECK(g.volume() == Catch::Approx(4.0));
  CHECK(g.cell_center(0) == Catch::Approx(-1.0 + 0.125));
  CHECK(g.face_center(7) == Catch::Approx(1.0));
  CHECK(g.wrap(-1) == 7);
  CHECK(g.wrap(8) == 0);

  CHECK_THROWS_AS(Grid(4, 8, 1.0), WrongDimension);
  CHECK_THROWS_AS(Grid(2, 1, 1.0), Error);
  CHECK_THROWS_AS(Grid(2, 8, -1.0), Error);
}

TEST_CASE("gradient") {
  SECTION("constant field gives zero faces") {
    for (int dim : {2, 3}) {
      Grid g(dim, 4, 1.5);
      FaceField f = gradient(CellField(g, 3.7));
      for (int a = 0; a < dim; ++a)
        for (double v : f.comp(a)) CHECK(v == 0.0);
    }
  }

  SECTION("N=2 slice along x: values [0,1] -> faces [1,-1]") {
    Grid g(2, 2, 1.0);  // h = 1
    CellField v(g);
    v(0, 0) = 0.0;
    v(1, 0) = 1.0;
    v(0, 1) = 0.0;
    v(1, 1) = 1.0;
    FaceField f = gradient(v);
    CHECK(f.comp(0)[v.index(0, 0)] == Catch::Approx(1.0));
    CHECK(f.comp(0)[v.index(1, 0)] == Catch::Approx(-1.0));
  }

  SECTION("cosine mode matches the closed-form stencil action") {
    for (int dim : {2, 3}) {
      Grid g(dim, 12, 2.0);
      CellField v(g);
      const int kmax = dim == 3 ? g.N : 1;
      for (int k = 0; k < kmax; ++k)
        for (int j = 0; j < g.N; ++j)
          for (int i = 0; i < g.N; ++i)
            v(i, j, k) = std::cos(M_PI * g.cell_center(i) / g.L);
      FaceField f = gradient(v);
      const double amp = -(2.0 / g.h) * std::sin(M_PI * g.h / (2 * g.L));
      for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i) {
          const double want =
              amp * std::sin(M_PI * g.face_center(i) / g.L);
          CHECK(f.comp(0)[v.index(i, j)] == Catch::Approx(want).margin(1e-13));
        }
    }
  }
}

TEST_CASE("divergence") {
  SECTION("constant face field -> zero cells") {
    Grid g(3, 4, 1.0);
    CellField d = divergence(FaceField(g, 2.5));
    for (double v : d) CHECK(v == 0.0);
  }

  SECTION("N=2 slice: x faces [1,-1] -> cells [-2,2] at h=1") {
    Grid g(2, 2, 1.0);
    FaceField f(g);
    CellField idx(g);
    f.comp(0)[idx.index(0, 0)] = 1.0;
    f.comp(0)[idx.index(1, 0)] = -1.0;
    f.comp(0)[idx.index(0, 1)] = 1.0;
    f.comp(0)[idx.index(1, 1)] = -1.0;
    CellField d = divergence(f);
    CHECK(d(0, 0) == Catch::Approx(2.0));
    CHECK(d(1, 0) == Catch::Approx(-2.0));
  }

  SECTION("adjointness <psi, div f> = -[grad psi, f]") {
    for (int dim : {2, 3}) {
      Grid g(dim, 8, 1.0);
      for (int rep = 0; rep < 10; ++rep) {
        CellField psi = random_cell(g, -1, 1, rng);
        FaceField f = random_face(g, -1, 1, rng);
        CellField div_f = divergence(f);
        const double lhs = dot(psi, div_f);
        const double rhs = -face_dot(gradient(psi), f);
        CHECK(std::abs(lhs - rhs) <=
              1e-12 * (norm2(psi) * norm2(div_f) + 1e-30));
      }
    }
  }

  SECTION("mean annihilation") {
    for (int dim : {2, 3}) {
      Grid g(dim, 8, 1.0);
      FaceField f = random_face(g, -3, 3, rng);
      CellField d = divergence(f);
      CHECK(std::abs(mean(d)) <= 1e-13 * norm_inf(d));
    }
  }
}

TEST_CASE("laplacian") {
  SECTION("constant -> zero") {
    Grid g(2, 6, 1.0);
    for (double v : laplacian(CellField(g, 4.2))) CHECK(v == 0.0);
  }

  SECTION("3D impulse: -6/h^2 center, 1/h^2 neighbors, 0 elsewhere") {
    Grid g(3, 4, 1.0);
    CellField imp(g);
    imp(1, 1, 1) = 1.0;
    CellField lap = laplacian(imp);
    const double ih2 = 1.0 / (g.h * g.h);
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
          const int d =
              std::abs(i - 1) + std::abs(j - 1) + std::abs(k - 1);
          const double want = d == 0 ? -6.0 * ih2 : d == 1 ? ih2 : 0.0;
          CHECK(lap(i, j, k) == Catch::Approx(want).margin(1e-12 * ih2));
        }
  }

  SECTION("Fourier mode eigenvalue") {
    Grid g(2, 8, 1.0);
    for (int m : {1, 2, 3}) {
      CellField v(g);
      for (int j = 0; j < g.N; ++j)
        for (int i = 0; i < g.N; ++i)
          v(i, j) = std::cos(2 * M_PI * m * g.cell_center(i) / (2 * g.L));
      const double lam =
          -(4.0 / (g.h * g.h)) *
          std::pow(std::sin(M_PI * m * g.h / (2 * g.L)), 2);
      CellField lap = laplacian(v);
      for (std::size_t c = 0; c < v.size(); ++c)
        CHECK(lap[c] == Catch::Approx(lam * v[c]).margin(1e-10));
    }
  }

  SECTION("laplacian is exactly div(grad)") {
    Grid g(3, 6, 2.0);
    CellField v = random_cell(g, -2, 2, rng);
    CellField a = laplacian(v);
    CellField b = divergence(gradient(v));
    for (std::size_t c = 0; c < v.size(); ++c) CHECK(a[c] == b[c]);
  }
}

TEST_CASE("variable-coefficient divergence") {
  Grid g(2, 4, 1.0);

  SECTION("unit coefficient reduces to the laplacian bitwise") {
    CellField v = random_cell(g, -1, 1, rng);
    CellField a = div_coeff_grad(FaceField(g, 1.0), v);
    CellField b = laplacian(v);
    for (std::size_t c = 0; c < v.size(); ++c) CHECK(a[c] == b[c]);
  }

  SECTION("constant field gives zero for any coefficient") {
    FaceField D = random_face(g, 0.5, 3.0, rng);
    for (double v : div_coeff_grad(D, CellField(g, 1.23))) CHECK(v == 0.0);
  }

  SECTION("matches an independently composed product route") {
    FaceField D = random_face(g, 0.5, 3.0, rng);
    CellField v = random_cell(g, -1, 1, rng);
    CellField got = div_coeff_grad(D, v);
    FaceField prod = gradient(v);
    for (int a = 0; a < g.dim; ++a)
      for (std::size_t c = 0; c < g.cells(); ++c)
        prod.comp(a)[c] = D.comp(a)[c] * prod.comp(a)[c];
    CellField want = divergence(prod);
    for (std::size_t c = 0; c < v.size(); ++c)
      CHECK(got[c] == Catch::Approx(want[c]).margin(1e-12));
  }

  SECTION("rejects non-positive coefficients") {
    FaceField D(g, 1.0);
    D.comp(1)[3] = 0.0;
    CHECK_THROWS_AS(div_coeff_grad(D, CellField(g, 1.0)),
                    NonPositiveCoefficient);
  }
}

TEST_CASE("inner products and norms") {
  SECTION("<1,1> equals the domain volume") {
    CHECK(dot(CellField(Grid(2, 4, 1.0), 1.0),
              CellField(Grid(2, 4, 1.0), 1.0)) == Catch::Approx(4.0));
    CHECK(dot(CellField(Grid(3, 4, 1.0), 1.0),
              CellField(Grid(3, 4, 1.0), 1.0)) == Catch::Approx(8.0));
  }

  SECTION("positive definiteness") {
    Grid g(2, 4, 1.0);
    CellField v = random_cell(g, -1, 1, rng);
    CHECK(dot(v, v) > 0.0);
    CHECK(dot(CellField(g), CellField(g)) == 0.0);
  }

  SECTION("grid mismatch rejected") {
    CellField a(Grid(2, 4, 1.0)), b(Grid(2, 8, 1.0));
    CHECK_THROWS_AS(dot(a, b), GridMismatch);
  }

  SECTION("summation by parts with coefficient, random instances") {
    for (int dim : {2, 3}) {
      Grid g(dim, 8, 1.0);
      for (int rep = 0; rep < 5; ++rep) {
        CellField psi = random_cell(g, -1, 1, rng);
        CellField nu = random_cell(g, -1, 1, rng);
        FaceField D = random_face(g, 0.1, 2.0, rng);
        const double lhs = dot(psi, div_coeff_grad(D, nu));
        FaceField Dg = gradient(nu);
        for (int a = 0; a < dim; ++a)
          for (std::size_t c = 0; c < g.cells(); ++c)
            Dg.comp(a)[c] *= D.comp(a)[c];
        const double rhs = -face_dot(gradient(psi), Dg);
        CHECK(std::abs(lhs - rhs) <=
              1e-12 * (std::abs(lhs) + std::abs(rhs) + 1e-30));
      }
    }
  }

  SECTION("norms of the zero and constant fields") {
    Grid g(2, 4, 1.0);
    CellField z(g);
    CHECK(norm2(z) == 0.0);
    CHECK(norm_inf(z) == 0.0);
    CHECK(norm_p(z, 3.0) == 0.0);
    CHECK(norm_h1(z) == 0.0);
    CellField two(g, 2.0);
    CHECK(norm2(two) == Catch::Approx(4.0));  // 2 |Omega|^{1/2} on (-1,1)^2
    CHECK(norm_h1(two) == Catch::Approx(4.0));
  }

  SECTION("Hoelder: ||v||_2 <= |Omega|^{1/2} ||v||_inf") {
    Grid g(3, 6, 1.3);
    CellField v = random_cell(g, -5, 5, rng);
    CHECK(norm2(v) <= std::sqrt(g.volume()) * norm_inf(v) + 1e-12);
  }

  SECTION("p < 1 rejected") {
    CHECK_THROWS_AS(norm_p(CellField(Grid(2, 4, 1.0), 1.0), 0.5), Error);
  }
}

TEST_CASE("translation equivariance, bitwise") {
  for (int dim : {2, 3}) {
    Grid g(dim, 6, 1.0);
    CellField v = random_cell(g, -2, 2, rng);
    const int sx = 2, sy = 5, sz = dim == 3 ? 1 : 0;

    FaceField g1 = cyclic_shift(gradient(v), sx, sy, sz);
    FaceField g2 = gradient(cyclic_shift(v, sx, sy, sz));
    for (int a = 0; a < dim; ++a)
      for (std::size_t c = 0; c < g.cells(); ++c)
        CHECK(g1.comp(a)[c] == g2.comp(a)[c]);

    FaceField f = random_face(g, -1, 1, rng);
    CellField d1 = cyclic_shift(divergence(f), sx, sy, sz);
    CellField d2 = divergence(cyclic_shift(f, sx, sy, sz));
    for (std::size_t c = 0; c < g.cells(); ++c) CHECK(d1[c] == d2[c]);
  }
}

TEST_CASE("field snapshot round trip") {
  Grid g(2, 5, 0.75);
  CellField f(g);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : f) v = std::ldexp(u(rng), static_cast<int>(rng() % 40) - 20);

  std::ostringstream out;
  write_field(out, f, "n", 0.12345678901234567);
  std::istringstream in(out.str());
  FieldFile r = read_field(in);

  CHECK(r.name == "n");
  CHECK(r.time == 0.12345678901234567);
  REQUIRE(r.field.grid() == g);
  for (std::size_t c = 0; c < f.size(); ++c) CHECK(r.field[c] == f[c]);

  SECTION("header is the documented format") {
    const std::string header = out.str().substr(0, out.str().find('\n'));
    CHECK(header.rfind("pnp-field v1 dim=2 N=5 L=0.75 name=n time=", 0) == 0);
  }

  SECTION("bad inputs rejected") {
    std::istringstream bad1("not-a-field v1 dim=2\n");
    CHECK_THROWS_AS(read_field(bad1), Error);
    std::istringstream bad2("pnp-field v1 dim=2 N=4 L=1 name=x time=0\n1 2 3\n");
    CHECK_THROWS_AS(read_field(bad2), Error);
    CHECK_THROWS_AS(write_field(std::cout, f, "with space", 0.0), Error);
  }
}

#include <doctest.h>

#include <numbers>

#include "fpa/grid.hpp"
#include "generators.hpp"

using namespace fpa;
constexpr double pi = std::numbers::pi;

TEST_CASE("make_grids spacings and centers") {
  const PhaseGrid g = make_grids(2.0 * pi, 4, 8.0, 8);
  CHECK(g.x.dx() == doctest::Approx(pi / 2).epsilon(1e-15));
  const Field c = g.x.centers();
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(c[2] == doctest::Approx(pi).epsilon(1e-15));
  CHECK(c[3] == doctest::Approx(3 * pi / 2).epsilon(1e-15));
  CHECK(g.v.dv() == 2.0);
  CHECK(g.v.center(0) == -7.0);
  CHECK(g.cell_volume() == doctest::Approx(pi).epsilon(1e-15));

  CHECK(make_torus_grid(1.0, 10).dx() == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("make_grids rejects bad sizes") {
  CHECK_THROWS_AS(make_grids(2.0 * pi, 4, 8.0, 7), ConfigError);
  CHECK_THROWS_AS(make_grids(2.0 * pi, 3, 8.0, 8), ConfigError);
  CHECK_THROWS_AS(make_grids(0.0, 4, 8.0, 8), ConfigError);
  CHECK_THROWS_AS(make_grids(1.0, 4, -1.0, 8), ConfigError);
  CHECK_THROWS_AS(make_grids(1.0, 4, 1.0, 6), ConfigError);
}

TEST_CASE("velocity centers are symmetric") {
  const VelocityGrid v = make_velocity_grid(3.7, 24);
  for (int j = 0; j < v.nv; ++j) CHECK(v.center(j) == doctest::Approx(-v.center(v.nv - 1 - j)));
}

TEST_CASE("doubling nx halves dx exactly") {
  for (int n : {4, 6, 10, 64, 100}) {
    CHECK(make_torus_grid(2.0 * pi, 2 * n).dx() == make_torus_grid(2.0 * pi, n).dx() / 2.0);
  }
}

TEST_CASE("periodic_distance examples") {
  CHECK(periodic_distance(0.1, 0.9, 1.0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(periodic_distance(0.37, 0.37, 5.0) == 0.0);
  CHECK(periodic_distance(0.0, 0.5, 1.0) == 0.5);
  CHECK_THROWS(periodic_distance(1.0, 0.5, 1.0));
}

TEST_CASE("periodic_distance symmetry, bound and triangle inequality") {
  gen::Gen g(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const double L = g.uniform(0.1, 10.0);
    const double a = g.uniform(0.0, L), b = g.uniform(0.0, L), c = g.uniform(0.0, L);
    CAPTURE(trial);
    const double ab = periodic_distance(a, b, L);
    CHECK(ab == periodic_distance(b, a, L));
    CHECK(ab <= L / 2);
    CHECK(ab >= 0.0);
    CHECK(periodic_distance(a, c, L) <= ab + periodic_distance(b, c, L) + 1e-14 * L);
  }
}

TEST_CASE("integrate examples") {
  const PhaseGrid g = make_grids(2.0 * pi, 32, 4.0, 16);
  CHECK(integrate(Field::Ones(32), g, Domain::x) == doctest::Approx(2.0 * pi).epsilon(1e-15));
  const Field s = (g.x.centers() * (2.0 * pi / g.x.length)).sin();
  CHECK(std::abs(integrate(s, g, Domain::x)) < 1e-15);
  CHECK(integrate(PhaseField::Ones(32, 16), g, Domain::xv) ==
        doctest::Approx(2.0 * pi * 8.0).epsilon(1e-14));
  CHECK_THROWS_AS(integrate(Field::Ones(31), g, Domain::x), ShapeError);
  CHECK_THROWS_AS(integrate(Field::Ones(32), g, Domain::v), ShapeError);
  CHECK_THROWS_AS(integrate(PhaseField::Ones(16, 32), g, Domain::xv), ShapeError);
}

TEST_CASE("integrate matches a 16x refined quadrature of the piecewise profile") {
  gen::Gen g(3);
  const TorusGrid coarse = make_torus_grid(1.7, 16);
  const TorusGrid fine = make_torus_grid(1.7, 256);
  const Field f = g.noise(16, -1.0, 2.0);
  Field refined(256);
  for (int i = 0; i < 256; ++i) refined[i] = f[i / 16];
  CHECK(integrate(f, coarse) == doctest::Approx(integrate(refined, fine)).epsilon(1e-12));
}

TEST_CASE("integrate is linear") {
  gen::Gen g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const PhaseGrid grid = make_grids(g.uniform(0.5, 7.0), g.integer(4, 40), 3.0, 2 * g.integer(4, 20));
    const Field f = g.noise(grid.nx(), -1.0, 1.0);
    const Field h = g.noise(grid.nx(), -1.0, 1.0);
    const double a = g.uniform(-3.0, 3.0), b = g.uniform(-3.0, 3.0);
    const double lhs = integrate(Field(a * f + b * h), grid, Domain::x);
    const double rhs = a * integrate(f, grid, Domain::x) + b * integrate(h, grid, Domain::x);
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(rhs)) * grid.x.length);
  }
}

TEST_CASE("step_count requires commensurate times") {
  CHECK(step_count(1.0, 1e-3, "t_end") == 1000);
  CHECK(step_count(0.05, 1e-3, "report_every") == 50);
  CHECK_THROWS_AS(step_count(1.0, 0.3, "t_end"), ConfigError);
}

TEST_CASE("wrap_periodic lands in [0, L)") {
  gen::Gen g(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const double L = g.uniform(0.1, 3.0);
    const double x = g.uniform(-50.0, 50.0);
    const double y = wrap_periodic(x, L);
    CHECK(y >= 0.0);
    CHECK(y < L);
    const double k = std::round((x - y) / L);
    CHECK(std::abs(x - y - k * L) <= 1e-12 * (1.0 + std::abs(x)));
  }
}

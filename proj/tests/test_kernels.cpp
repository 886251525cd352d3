#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fpa/kernels.hpp"
#include "generators.hpp"

using namespace fpa;
constexpr double pi = std::numbers::pi;

namespace {

// Offsets measured as minimum-image distances, recomputed here without the
// library's index arithmetic.
double offset_distance(int k, const TorusGrid& g) {
  double d = std::fmod(std::abs(k * g.dx()), g.length);
  return std::min(d, g.length - d);
}

std::vector<double> bump_oracle(double r0, const TorusGrid& g) {
  std::vector<double> w(g.nx);
  double mass = 0.0;
  for (int k = 0; k < g.nx; ++k) {
    const double d = offset_distance(k, g);
    w[k] = d < r0 ? std::exp(-r0 * r0 / (r0 * r0 - d * d)) : 0.0;
    mass += w[k] * g.dx();
  }
  for (double& x : w) x /= mass;
  return w;
}

std::vector<double> wrapped_gaussian_oracle(double s, const TorusGrid& g) {
  std::vector<double> w(g.nx);
  double mass = 0.0;
  for (int k = 0; k < g.nx; ++k) {
    double acc = 0.0;
    for (int image = -6; image <= 6; ++image) {
      const double d = k * g.dx() + image * g.length;
      acc += std::exp(-d * d / (2.0 * s * s));
    }
    w[k] = acc;
    mass += acc * g.dx();
  }
  for (double& x : w) x /= mass;
  return w;
}

Field direct_convolution(const Field& f, const DiscreteKernel& phi) {
  const int n = phi.grid.nx;
  Field out = Field::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) out[i] += phi[i - k] * f[k] * phi.grid.dx();
  }
  return out;
}

}  // namespace

TEST_CASE("global_uniform kernel samples") {
  const TorusGrid g = make_torus_grid(2.0, 16);
  const DiscreteKernel phi = build_kernel({KernelFamily::global_uniform}, g);
  for (int k = 0; k < 16; ++k) CHECK(phi.samples[k] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(phi.samples.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("bump kernel on l = 1, nx = 64, r0 = 0.25") {
  const TorusGrid g = make_torus_grid(1.0, 64);
  const DiscreteKernel phi = build_kernel({KernelFamily::bump, 0.25}, g);
  const auto oracle = bump_oracle(0.25, g);
  int nonzero = 0;
  for (int k = 0; k < 64; ++k) {
    CAPTURE(k);
    CHECK(phi.samples[k] == doctest::Approx(oracle[k]).epsilon(1e-13));
    const int dist = std::min(k, 64 - k);
    if (dist < 16) {
      CHECK(phi.samples[k] > 0.0);
      ++nonzero;
    } else {
      CHECK(phi.samples[k] == 0.0);
    }
  }
  CHECK(nonzero == 31);
  CHECK(phi.samples.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("wrapped gaussian kernel matches the image sum") {
  for (double s : {0.05, 0.2, 0.5}) {
    const TorusGrid g = make_torus_grid(1.0, 48);
    const DiscreteKernel phi = build_kernel({KernelFamily::wrapped_gaussian, s}, g);
    const auto oracle = wrapped_gaussian_oracle(s, g);
    for (int k = 0; k < 48; ++k) CHECK(phi.samples[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
    CHECK(phi.samples.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(phi.samples.minCoeff() > 0.0);
  }
}

TEST_CASE("kernel samples are even and nonnegative") {
  gen::Gen gg(21);
  for (int trial = 0; trial < 60; ++trial) {
    const TorusGrid g = make_torus_grid(gg.uniform(0.5, 8.0), gg.integer(8, 80));
    const auto family = static_cast<KernelFamily>(gg.integer(0, 2));
    const double r0 = gg.uniform(3.0 * g.dx(), 0.5 * g.length);
    const DiscreteKernel phi = build_kernel({family, r0}, g);
    CAPTURE(trial);
    CHECK(phi.samples.minCoeff() >= 0.0);
    for (int k = 1; k < g.nx; ++k) CHECK(phi.samples[k] == phi.samples[g.nx - k]);
    CHECK(phi.samples.sum() * g.dx() == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("kernel configuration errors") {
  const TorusGrid g = make_torus_grid(1.0, 64);
  CHECK_THROWS_AS(build_kernel({KernelFamily::bump, 0.6}, g), ConfigError);
  CHECK_THROWS_AS(build_kernel({KernelFamily::wrapped_gaussian, 0.51}, g), ConfigError);
  CHECK_THROWS_AS(build_kernel({KernelFamily::bump, 0.25, 2.5}, g), ConfigError);
  CHECK_THROWS_AS(build_kernel({KernelFamily::bump, -0.1}, g), ConfigError);
  const DiscreteKernel ok = build_kernel({KernelFamily::bump, 0.25, 0.001}, g);
  CHECK(ok.c0 == 0.001);
  CHECK_THROWS_AS(build_kernel({KernelFamily::bump, 0.25, 0.01}, g), ConfigError);
}

TEST_CASE("convolution examples") {
  const TorusGrid g = make_torus_grid(2.0 * pi, 32);
  const DiscreteKernel bump = build_kernel({KernelFamily::bump, 1.0}, g);
  const Field c = Field::Constant(32, 2.5);
  CHECK((convolve_periodic(c, bump) - 2.5).abs().maxCoeff() < 1e-14);

  gen::Gen gg(4);
  const Field f = gg.noise(32, -1.0, 3.0);
  const DiscreteKernel global = build_kernel({KernelFamily::global_uniform}, g);
  CHECK((convolve_periodic(f, global) - f.mean()).abs().maxCoeff() < 1e-14);
  CHECK((convolve_periodic(f, bump) - direct_convolution(f, bump)).abs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(convolve_periodic(Field(Field::Ones(31)), bump), ShapeError);
}

TEST_CASE("convolution preserves mass and positivity") {
  gen::Gen gg(8);
  for (int trial = 0; trial < 100; ++trial) {
    const TorusGrid g = make_torus_grid(gg.uniform(0.5, 8.0), gg.integer(8, 64));
    const auto family = static_cast<KernelFamily>(gg.integer(0, 2));
    const DiscreteKernel phi = build_kernel({family, gg.uniform(3.0 * g.dx(), 0.5 * g.length)}, g);
    const Field f = gg.noise(g.nx, 0.0, 1.0);
    const Field out = convolve_periodic(f, phi);
    CAPTURE(trial);
    CHECK(std::abs(integrate(out, g) - integrate(f, g)) <= 1e-13 * integrate(f, g));
    CHECK(out.minCoeff() >= 0.0);
  }
}

TEST_CASE("Favre and mollified filters") {
  const TorusGrid g = make_torus_grid(1.0, 32);
  const DiscreteKernel phi = build_kernel({KernelFamily::bump, 0.3}, g);
  gen::Gen gg(12);
  const Field rho = gg.noise(32, 0.5, 2.0);
  const Field m = gg.noise(32, -1.0, 1.0);

  SUBCASE("constant velocity is a fixed point") {
    const Field fav = favre_filter(rho, Field(0.7 * rho), phi, 1e-12);
    CHECK((fav - 0.7).abs().maxCoeff() < 1e-14);
    const Field mol = mollified_filter(rho, Field(0.7 * rho), phi, 1e-12);
    CHECK((mol - 0.7).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("unit density gives m_phi") {
    const Field fav = favre_filter(Field::Ones(32), m, phi, 1e-12);
    CHECK((fav - direct_convolution(m, phi)).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("direct oracles") {
    const Field fav_oracle = direct_convolution(m, phi) / direct_convolution(rho, phi);
    CHECK((favre_filter(rho, m, phi, 1e-12) - fav_oracle).abs().maxCoeff() < 1e-12);
    const Field mol_oracle = direct_convolution(fav_oracle, phi);
    CHECK((mollified_filter(rho, m, phi, 1e-12) - mol_oracle).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("global kernel collapses to the mean velocity") {
    const DiscreteKernel global = build_kernel({KernelFamily::global_uniform}, g);
    const Field mol = mollified_filter(rho, m, global, 1e-12);
    CHECK((mol - m.sum() / rho.sum()).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("degenerate density throws") {
    Field vac = Field::Zero(32);
    vac[3] = 1.0;
    CHECK_THROWS_AS(favre_filter(vac, m, phi, 1e-10), DensityDegeneracy);
  }
}

TEST_CASE("momentum identity: u_F rho_phi integrates to the momentum") {
  gen::Gen gg(13);
  for (int trial = 0; trial < 100; ++trial) {
    const TorusGrid g = make_torus_grid(gg.uniform(0.5, 8.0), gg.integer(8, 64));
    const auto family = static_cast<KernelFamily>(gg.integer(0, 2));
    const DiscreteKernel phi = build_kernel({family, gg.uniform(3.0 * g.dx(), 0.5 * g.length)}, g);
    const Field rho = gg.density(g, 1.0, 0.8);
    const Field m = rho * gg.smooth(g, 3, 2.0);
    const Filtration f = filtrate(rho, m, phi, 1e-12);
    CAPTURE(trial);
    CHECK(std::abs(integrate(Field(f.u_favre * f.rho_phi), g) - integrate(m, g)) <=
          1e-12 * (1.0 + integrate(Field(m.abs()), g)));
  }
}

TEST_CASE("density margin examples") {
  const TorusGrid g = make_torus_grid(2.0, 40);
  for (double r : {0.05, 0.3, 0.77, 1.0}) {
    CHECK(hydrodynamic_density_margin(Field::Ones(40), g, r, 2.0) ==
          doctest::Approx(2.0 * r / 2.0).epsilon(1e-13));
  }
  Field spike = Field::Zero(40);
  spike[0] = 1.0 / g.dx();
  CHECK(hydrodynamic_density_margin(spike, g, 0.5 * g.dx(), 1.0) == 0.0);
}

TEST_CASE("density margin matches a brute-force sliding window") {
  gen::Gen gg(14);
  const TorusGrid g = make_torus_grid(1.0, 32);
  const int fine = 64;
  for (int trial = 0; trial < 20; ++trial) {
    const Field rho = gg.noise(32, 0.0, 2.0);
    const double M = integrate(rho, g);
    const double r = gg.uniform(0.01, 0.5);
    // Window mass by integrating the piecewise-constant density on a
    // sub-cell midpoint grid and counting only exact cut fractions at the
    // two window ends.
    double best = 1e300;
    for (int i = 0; i < 32; ++i) {
      const double lo = g.center(i) - r, hi = g.center(i) + r;
      double acc = 0.0;
      for (int k = 0; k < 32; ++k) {
        for (int s = 0; s < fine; ++s) {
          const double h = g.dx() / fine;
          const double a0 = g.center(k) - 0.5 * g.dx() + s * h;
          for (int image = -1; image <= 1; ++image) {
            const double a = a0 + image * g.length, b = a + h;
            acc += rho[k] * std::max(0.0, std::min(b, hi) - std::max(a, lo));
          }
        }
      }
      best = std::min(best, acc / M);
    }
    CHECK(hydrodynamic_density_margin(rho, g, r, M) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("density margin grows with the radius") {
  gen::Gen gg(15);
  for (int trial = 0; trial < 50; ++trial) {
    const TorusGrid g = make_torus_grid(gg.uniform(0.5, 5.0), gg.integer(8, 48));
    const Field rho = gg.noise(g.nx, 0.0, 1.0);
    const double M = integrate(rho, g);
    const double r1 = gg.uniform(0.01, 0.5) * g.length;
    const double r2 = gg.uniform(r1, 0.5 * g.length);
    CHECK(hydrodynamic_density_margin(rho, g, r2, M) >=
          hydrodynamic_density_margin(rho, g, r1, M) - 1e-14);
  }
}

TEST_CASE("density margin bounds the filtered density from below") {
  gen::Gen gg(16);
  for (int trial = 0; trial < 50; ++trial) {
    const TorusGrid g = make_torus_grid(gg.uniform(0.5, 5.0), gg.integer(16, 64));
    const double r0 = gg.uniform(4.0 * g.dx(), 0.5 * g.length);
    const DiscreteKernel phi = build_kernel({KernelFamily::bump, r0}, g);
    Field rho = gg.noise(g.nx, 0.0, 1.0);
    for (int i = 0; i < g.nx; ++i) if (gg.uniform(0, 1) < 0.3) rho[i] = 0.0;
    const double M = integrate(rho, g);
    const double r = gg.uniform(0.1, 1.0) * (r0 - 0.5 * g.dx());
    const double delta = hydrodynamic_density_margin(rho, g, r, M);
    CAPTURE(trial);
    CHECK(convolve_periodic(rho, phi).minCoeff() >= phi.c0 * delta * M * (1.0 - 1e-12));
  }
}

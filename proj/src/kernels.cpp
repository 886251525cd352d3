#include "fpa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fpa {

namespace {

constexpr int kGaussianImages = 6;

double bump(double d, double r0) {
  if (d >= r0) return 0.0;
  return std::exp(-r0 * r0 / (r0 * r0 - d * d));
}

double wrapped_gaussian_1d(double d, double width, double length) {
  double s = 0.0;
  for (int m = -kGaussianImages; m <= kGaussianImages; ++m) {
    const double y = d + m * length;
    s += std::exp(-y * y / (2.0 * width * width));
  }
  return s;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::global_uniform: return "global_uniform";
    case KernelFamily::bump: return "bump";
    case KernelFamily::wrapped_gaussian: return "wrapped_gaussian";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "global_uniform") return KernelFamily::global_uniform;
  if (name == "bump") return KernelFamily::bump;
  if (name == "wrapped_gaussian") return KernelFamily::wrapped_gaussian;
  throw ConfigError("unknown kernel family '" + name + "'");
}

double kernel_profile(const KernelSpec& spec, double d, double length) {
  switch (spec.family) {
    case KernelFamily::global_uniform: return 1.0;
    case KernelFamily::bump: return bump(d, spec.r0);
    case KernelFamily::wrapped_gaussian: return wrapped_gaussian_1d(d, spec.r0, length);
  }
  return 0.0;
}

double kernel_profile(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& d,
                      double length) {
  switch (spec.family) {
    case KernelFamily::global_uniform: return 1.0;
    case KernelFamily::bump: return bump(d.norm(), spec.r0);
    case KernelFamily::wrapped_gaussian: {
      double p = 1.0;
      for (Eigen::Index k = 0; k < d.size(); ++k) {
        p *= wrapped_gaussian_1d(d[k], spec.r0, length);
      }
      return p;
    }
  }
  return 0.0;
}

DiscreteKernel build_kernel(const KernelSpec& spec, const TorusGrid& grid) {
  const double half = 0.5 * grid.length;
  const int n = grid.nx;
  const double dx = grid.dx();

  DiscreteKernel k;
  k.grid = grid;
  k.family = spec.family;
  k.r0 = spec.family == KernelFamily::global_uniform ? half : spec.r0;

  if (!(k.r0 > 0.0)) throw ConfigError("kernel r0 must be positive");
  if (k.r0 > half * (1.0 + 1e-14)) {
    throw ConfigError("kernel r0 = " + std::to_string(k.r0) +
                      " exceeds half the domain length");
  }

  k.samples.resize(n);
  for (int off = 0; off < n; ++off) {
    const double d = std::min(off, n - off) * dx;
    k.samples[off] = kernel_profile(spec, d, grid.length);
  }
  const double mass = k.samples.sum() * dx;
  if (!(mass > 0.0)) {
    throw ConfigError("kernel has no samples inside its support; refine nx or grow r0");
  }
  k.samples /= mass;

  // Smallest sample on the communication window {dist < r0} (everything for
  // the global kernel).
  double window_min = std::numeric_limits<double>::infinity();
  for (int off = 0; off < n; ++off) {
    const double d = std::min(off, n - off) * dx;
    if (spec.family == KernelFamily::global_uniform || d < k.r0) {
      window_min = std::min(window_min, k.samples[off]);
    }
  }

  if (spec.c0) {
    const double c0 = *spec.c0;
    if (!(c0 > 0.0)) throw ConfigError("kernel c0 must be positive");
    if (c0 * 2.0 * k.r0 > 1.0 + 1e-14) {
      throw ConfigError("kernel c0 * 2 r0 > 1 is incompatible with unit mass");
    }
    if (window_min < c0 * (1.0 - 1e-12)) {
      throw ConfigError("kernel c0 = " + std::to_string(c0) +
                        " exceeds the discrete kernel minimum " +
                        std::to_string(window_min) + " on its range");
    }
    k.c0 = c0;
  } else {
    k.c0 = window_min;
  }
  return k;
}

Filtration filtrate(const Field& rho, const Field& m, const DiscreteKernel& phi,
                    double floor) {
  if (rho.size() != phi.grid.nx || m.size() != phi.grid.nx) {
    throw ShapeError("filtration: grid mismatch");
  }
  Filtration out;
  out.rho_phi = convolve_periodic(rho, phi);
  Eigen::Index imin = 0;
  const double min_rho_phi = out.rho_phi.minCoeff(&imin);
  if (!(min_rho_phi >= floor)) {
    throw DensityDegeneracy("filtration", min_rho_phi,
                            phi.grid.center(static_cast<int>(imin)));
  }
  out.m_phi = convolve_periodic(m, phi);
  out.u_favre = out.m_phi / out.rho_phi;
  out.u_mollified = convolve_periodic(out.u_favre, phi);
  return out;
}

Field favre_filter(const Field& rho, const Field& m, const DiscreteKernel& phi,
                   double floor) {
  Field rho_phi = convolve_periodic(rho, phi);
  Eigen::Index imin = 0;
  const double min_rho_phi = rho_phi.minCoeff(&imin);
  if (!(min_rho_phi >= floor)) {
    throw DensityDegeneracy("favre filter", min_rho_phi,
                            phi.grid.center(static_cast<int>(imin)));
  }
  return convolve_periodic(m, phi) / rho_phi;
}

Field mollified_filter(const Field& rho, const Field& m, const DiscreteKernel& phi,
                       double floor) {
  return convolve_periodic(favre_filter(rho, m, phi, floor), phi);
}

double hydrodynamic_density_margin(const Field& rho, const TorusGrid& grid, double r,
                                   double mass) {
  const int n = grid.nx;
  if (rho.size() != n) throw ShapeError("density margin: grid mismatch");
  if (!(r > 0.0) || r > 0.5 * grid.length * (1.0 + 1e-14)) {
    throw ConfigError("density margin radius must lie in (0, length/2]");
  }
  const double dx = grid.dx();
  const double L = grid.length;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double lo = grid.center(i) - r;
    const double hi = grid.center(i) + r;
    double windowed = 0.0;
    for (int k = 0; k < n; ++k) {
      double overlap = 0.0;
      for (int image = -1; image <= 1; ++image) {
        const double a = grid.center(k) - 0.5 * dx + image * L;
        const double b = a + dx;
        overlap += std::max(0.0, std::min(b, hi) - std::max(a, lo));
      }
      windowed += rho[k] * overlap;
    }
    best = std::min(best, windowed / mass);
  }
  return best;
}

}  // namespace fpa

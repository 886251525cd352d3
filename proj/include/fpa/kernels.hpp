#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>

#include "fpa/grid.hpp"

namespace fpa {

enum class KernelFamily { global_uniform, bump, wrapped_gaussian };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Communication kernel parameters. `r0` is the support radius (bump), the
/// Gaussian width (wrapped_gaussian), or ignored (global_uniform, which uses
/// half the period). `c0` is the promised lower bound on {dist < r0}; when
/// absent it is taken from the discretized kernel.
struct KernelSpec {
  KernelFamily family = KernelFamily::global_uniform;
  double r0 = 0.5;
  std::optional<double> c0{};
};

/// Unnormalized kernel profile at periodic distance `d` (0 <= d <= length/2).
double kernel_profile(const KernelSpec& spec, double d, double length);

/// Unnormalized kernel profile at a minimum-image displacement in one or two
/// dimensions. Bump is radial; the wrapped Gaussian is a product.
double kernel_profile(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& d,
                      double length);

/// Kernel samples phi_k at offsets k * dx, renormalized so that
/// sum_k phi_k dx = 1.
struct DiscreteKernel {
  TorusGrid grid;
  KernelFamily family = KernelFamily::global_uniform;
  double r0 = 0.0;
  double c0 = 0.0;
  Field samples;

  double operator[](int offset) const {
    const int n = grid.nx;
    return samples[((offset % n) + n) % n];
  }
};

DiscreteKernel build_kernel(const KernelSpec& spec, const TorusGrid& grid);

/// (g)_phi(x_i) = sum_k phi_{i-k} g_k dx, evaluated as the direct periodic sum.
template <typename Derived>
FieldT<typename Derived::Scalar> convolve_periodic(const Eigen::ArrayBase<Derived>& g,
                                                   const DiscreteKernel& phi) {
  using Scalar = typename Derived::Scalar;
  const int n = phi.grid.nx;
  if (g.size() != n) throw ShapeError("convolve_periodic: grid mismatch");
  const Scalar dx = Scalar(phi.grid.dx());
  FieldT<Scalar> out(n);
  for (int i = 0; i < n; ++i) {
    Scalar acc(0);
    for (int k = 0; k < n; ++k) {
      int off = i - k;
      if (off < 0) off += n;
      acc += Scalar(phi.samples[off]) * g[k];
    }
    out[i] = acc * dx;
  }
  return out;
}

/// Everything the filtration computes on the way to u_{phi,rho}.
struct Filtration {
  Field rho_phi;
  Field m_phi;
  Field u_favre;      ///< (m)_phi / rho_phi
  Field u_mollified;  ///< (u_favre)_phi
};

/// Throws DensityDegeneracy if min rho_phi < floor.
Filtration filtrate(const Field& rho, const Field& m, const DiscreteKernel& phi,
                    double floor);

Field favre_filter(const Field& rho, const Field& m, const DiscreteKernel& phi,
                   double floor);
Field mollified_filter(const Field& rho, const Field& m, const DiscreteKernel& phi,
                       double floor);

/// Default degeneracy floor: 1e-10 * M / length.
inline double default_density_floor(double mass, double length) {
  return 1e-10 * mass / length;
}

/// min over grid points x_i of (1/M) * mass of rho inside the open window
/// |x - x_i| < r, with rho read as piecewise constant on cells.
double hydrodynamic_density_margin(const Field& rho, const TorusGrid& grid, double r,
                                   double mass);

}  // namespace fpa

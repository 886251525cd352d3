#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "fpa/errors.hpp"

namespace fpa {

/// Samples of a scalar field at the cell centers of a TorusGrid.
template <typename Scalar>
using FieldT = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Phase-space samples f(x_i, v_j); rows index x, columns index v, stored
/// row-major so each x-column of velocities is contiguous.
template <typename Scalar>
using PhaseFieldT =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Field = FieldT<double>;
using PhaseField = PhaseFieldT<double>;

/// Uniform periodic grid on [0, length) with cell centers x_i = i * dx.
struct TorusGrid {
  double length = 1.0;
  int nx = 4;

  double dx() const { return length / nx; }
  double center(int i) const { return i * dx(); }
  Field centers() const;
};

/// Truncated velocity grid on [-vmax, vmax] with centers
/// v_j = -vmax + (j + 1/2) dv.
struct VelocityGrid {
  double vmax = 8.0;
  int nv = 8;

  double dv() const { return 2.0 * vmax / nv; }
  double center(int j) const { return -vmax + (j + 0.5) * dv(); }
  /// Face between cells j and j + 1.
  double face(int j) const { return -vmax + (j + 1) * dv(); }
  Field centers() const;
};

struct PhaseGrid {
  TorusGrid x;
  VelocityGrid v;

  double cell_volume() const { return x.dx() * v.dv(); }
  int nx() const { return x.nx; }
  int nv() const { return v.nv; }
};

TorusGrid make_torus_grid(double length, int nx);
VelocityGrid make_velocity_grid(double vmax, int nv);
PhaseGrid make_grids(double length, int nx, double vmax, int nv);

/// Distance on the circle of circumference `length`; the result is at most
/// length / 2.
template <typename Scalar>
Scalar periodic_distance(Scalar x, Scalar y, Scalar length) {
  using std::abs;
  using std::fmod;
  if (!(x >= Scalar(0) && x < length && y >= Scalar(0) && y < length)) {
    throw std::domain_error("periodic_distance: arguments must lie in [0, length)");
  }
  Scalar d = fmod(abs(x - y), length);
  return d < length - d ? d : length - d;
}

/// Minimum-image displacement a - b on the circle, in [-length/2, length/2].
template <typename Scalar>
Scalar periodic_displacement(Scalar a, Scalar b, Scalar length) {
  using std::floor;
  Scalar d = a - b;
  d -= length * floor(d / length + Scalar(0.5));
  return d;
}

/// Reduce a coordinate into [0, length).
template <typename Scalar>
Scalar wrap_periodic(Scalar x, Scalar length) {
  using std::floor;
  Scalar y = x - length * floor(x / length);
  if (y >= length) y -= length;
  if (y < Scalar(0)) y = Scalar(0);
  return y;
}

/// Number of steps of size dt that land on t; throws ConfigError if t is not
/// a multiple of dt.
long step_count(double t, double dt, const char* what);

enum class Domain { x, v, xv };

/// Midpoint quadrature: sum of samples times the cell weight of the tagged
/// domain. Rejects fields whose shape does not match the grid.
template <typename Derived>
typename Derived::Scalar integrate(const Eigen::ArrayBase<Derived>& field,
                                   const PhaseGrid& grid, Domain domain) {
  using Scalar = typename Derived::Scalar;
  switch (domain) {
    case Domain::x:
      if (field.size() != grid.nx()) {
        throw ShapeError("integrate: x-field has " + std::to_string(field.size()) +
                         " samples, grid has " + std::to_string(grid.nx()));
      }
      return field.sum() * Scalar(grid.x.dx());
    case Domain::v:
      if (field.size() != grid.nv()) {
        throw ShapeError("integrate: v-field has " + std::to_string(field.size()) +
                         " samples, grid has " + std::to_string(grid.nv()));
      }
      return field.sum() * Scalar(grid.v.dv());
    case Domain::xv:
      if (field.rows() != grid.nx() || field.cols() != grid.nv()) {
        throw ShapeError("integrate: phase field shape mismatch");
      }
      return field.sum() * Scalar(grid.cell_volume());
  }
  return Scalar(0);
}

/// Integral over one periodic grid without a phase grid around it.
template <typename Derived>
typename Derived::Scalar integrate(const Eigen::ArrayBase<Derived>& field,
                                   const TorusGrid& grid) {
  if (field.size() != grid.nx) {
    throw ShapeError("integrate: field does not match torus grid");
  }
  return field.sum() * typename Derived::Scalar(grid.dx());
}

}  // namespace fpa

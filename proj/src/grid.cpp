#include "fpa/grid.hpp"

#include <algorithm>

namespace fpa {

Field TorusGrid::centers() const {
  Field c(nx);
  for (int i = 0; i < nx; ++i) c[i] = center(i);
  return c;
}

Field VelocityGrid::centers() const {
  Field c(nv);
  for (int j = 0; j < nv; ++j) c[j] = center(j);
  return c;
}

TorusGrid make_torus_grid(double length, int nx) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ConfigError("domain length must be positive");
  }
  if (nx < 4) throw ConfigError("nx must be at least 4");
  return TorusGrid{length, nx};
}

VelocityGrid make_velocity_grid(double vmax, int nv) {
  if (!(vmax > 0.0) || !std::isfinite(vmax)) {
    throw ConfigError("vmax must be positive");
  }
  if (nv < 8) throw ConfigError("nv must be at least 8");
  if (nv % 2 != 0) throw ConfigError("nv must be even");
  return VelocityGrid{vmax, nv};
}

PhaseGrid make_grids(double length, int nx, double vmax, int nv) {
  return PhaseGrid{make_torus_grid(length, nx), make_velocity_grid(vmax, nv)};
}

long step_count(double t, double dt, const char* what) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t >= 0.0)) throw ConfigError(std::string(what) + " must be nonnegative");
  const double ratio = t / dt;
  const long n = std::lround(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError(std::string(what) + " = " + std::to_string(t) +
                      " is not a multiple of dt = " + std::to_string(dt));
  }
  return n;
}

}  // namespace fpa

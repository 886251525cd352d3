#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fpa/grid.hpp"
#include "fpa/kernels.hpp"

namespace fpa {

/// Isothermal Euler-alignment state in conservative variables.
struct MacroState {
  TorusGrid grid;
  Field rho;
  Field m;
  double t = 0.0;

  Field velocity() const { return m / rho; }
  double mass() const { return integrate(rho, grid); }
  double momentum() const { return integrate(m, grid); }
};

/// rho = (M / L)(1 + a cos(2 pi k x / L)), u = u_mean + b sin(2 pi k x / L).
struct MacroInit {
  double rho_amplitude = 0.0;
  double u_amplitude = 0.0;
  double u_mean = 0.0;
  int wavenumber = 1;
};

MacroState init_macro(const MacroInit& init, const TorusGrid& grid, double mass);

/// One step: MUSCL (minmod) reconstruction with a Rusanov flux and wave
/// speed |u| + 1, advanced by two-stage SSP Runge-Kutta, followed by the
/// explicit alignment source m += dt (rho u_{phi,rho} - m).
void macro_step(MacroState& state, double dt, const DiscreteKernel& phi, double floor = 0.0);

struct MacroReport {
  double t = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double Ecal = 0.0;
  double Ephi = 0.0;
  double Ephiphi = 0.0;
  double A = 0.0;
  double min_rho = 0.0;
  double max_abs_u = 0.0;

  static const std::vector<std::string>& columns();
  std::vector<double> values() const;
};

MacroReport macro_report(const MacroState& state, const DiscreteKernel& phi, double floor = 0.0);

struct MacroRunOptions {
  double t_end = 1.0;
  double dt = 1e-3;
  double report_every = 0.05;
  double snapshot_every = 0.0;
  double floor = 0.0;
};

std::vector<MacroReport> macro_run(MacroState& state, const DiscreteKernel& phi,
                                   const MacroRunOptions& options,
                                   const std::function<void(const MacroState&)>& snapshot = {});

}  // namespace fpa

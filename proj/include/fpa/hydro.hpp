#pragma once

#include <array>
#include <limits>
#include <numbers>
#include <vector>

#include "fpa/diagnostics.hpp"
#include "fpa/kinetic.hpp"
#include "fpa/macro.hpp"

namespace fpa {

struct HydroSweepOptions {
  double length = 2.0 * std::numbers::pi;
  int nx = 128;
  int nv = 64;
  double vmax = 0.0;  ///< <= 0 means max|u0| + 8
  double dt = 1e-3;
  double t_star = 0.5;
  double report_every = 0.05;
  double mass = 0.0;  ///< <= 0 means the domain length
  KernelSpec kernel;
  MacroInit init;
  TransportScheme transport = TransportScheme::limited_parabolic;
};

struct HydroSweepRow {
  double epsilon = 0.0;
  HydroReport final;
  std::vector<HydroReport> series;
  double max_decomposition_rel = 0.0;  ///< max |residual| / (1 + H_rel)
  double max_entropy_rate = -std::numeric_limits<double>::infinity();  ///< over report intervals
};

struct HydroSweepResult {
  std::vector<HydroSweepRow> rows;
  /// H_rel, rho_L1, momentum_L1, reynolds_L1 at t_star strictly decrease as
  /// epsilon decreases (rows sorted by decreasing epsilon).
  std::array<bool, 4> decreasing{};
  double entropy_rate_bound = 0.0;  ///< n M
  std::vector<MacroState> macro;    ///< reference at every report time
};

/// Runs the macroscopic reference from the given moments, then for each
/// epsilon the penalized kinetic equation started from the local Maxwellian
/// of the same data, comparing both at every report time.
HydroSweepResult hydro_sweep(const HydroSweepOptions& options, std::vector<double> epsilons);

}  // namespace fpa

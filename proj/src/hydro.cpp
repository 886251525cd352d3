#include "fpa/hydro.hpp"

#include <algorithm>
#include <functional>

namespace fpa {

HydroSweepResult hydro_sweep(const HydroSweepOptions& options, std::vector<double> epsilons) {
  if (epsilons.empty()) throw ConfigError("hydro sweep: empty epsilon list");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("hydro sweep: epsilon must be positive");
  }
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());

  const double mass = options.mass > 0.0 ? options.mass : options.length;
  const TorusGrid xg = make_torus_grid(options.length, options.nx);
  const DiscreteKernel phi = build_kernel(options.kernel, xg);
  const MacroState m0 = init_macro(options.init, xg, mass);
  const double vmax =
      options.vmax > 0.0 ? options.vmax : m0.velocity().abs().maxCoeff() + 8.0;
  const PhaseGrid grid{xg, make_velocity_grid(vmax, options.nv)};

  const long n = step_count(options.t_star, options.dt, "t_star");
  const long every = std::max(1L, step_count(options.report_every, options.dt, "report_every"));

  HydroSweepResult result;
  result.entropy_rate_bound = mass;

  {
    MacroState m = m0;
    result.macro.push_back(m);
    for (long s = 1; s <= n; ++s) {
      macro_step(m, options.dt, phi);
      m.t = s * options.dt;
      if (s % every == 0 || s == n) result.macro.push_back(m);
    }
  }

  for (double eps : epsilons) {
    KineticState k;
    k.grid = grid;
    k.f = local_maxwellian(grid, m0.rho, m0.velocity());
    k.mode = Mode::penalized;
    k.epsilon_pen = eps;
    StepOptions so;
    so.transport = options.transport;

    HydroSweepRow row;
    row.epsilon = eps;
    std::size_t r = 0;
    auto record = [&]() {
      const MacroState& ref = result.macro.at(r++);
      HydroReport h = hydro_report(k.f, grid, ref.rho, ref.velocity(), eps, k.t);
      row.max_decomposition_rel =
          std::max(row.max_decomposition_rel, h.decomposition_residual / (1.0 + std::abs(h.H_rel)));
      if (!row.series.empty()) {
        const HydroReport& prev = row.series.back();
        row.max_entropy_rate =
            std::max(row.max_entropy_rate, (h.H_kinetic - prev.H_kinetic) / (h.t - prev.t));
      }
      row.series.push_back(h);
    };
    record();
    for (long s = 1; s <= n; ++s) {
      step(k, options.dt, phi, so);
      k.t = s * options.dt;
      if (s % every == 0 || s == n) record();
    }
    row.final = row.series.back();
    result.rows.push_back(std::move(row));
  }

  result.decreasing.fill(true);
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const HydroReport& a = result.rows[i - 1].final;
    const HydroReport& b = result.rows[i].final;
    result.decreasing[0] = result.decreasing[0] && b.H_rel < a.H_rel;
    result.decreasing[1] = result.decreasing[1] && b.rho_L1 < a.rho_L1;
    result.decreasing[2] = result.decreasing[2] && b.momentum_L1 < a.momentum_L1;
    result.decreasing[3] = result.decreasing[3] && b.reynolds_L1 < a.reynolds_L1;
  }
  return result;
}

}  // namespace fpa

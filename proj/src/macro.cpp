#include "fpa/macro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpa/diagnostics.hpp"

namespace fpa {

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

double resolve_floor(const MacroState& s, double floor) {
  return floor > 0.0 ? floor : default_density_floor(s.mass(), s.grid.length);
}

void check_vacuum(const MacroState& s, double floor) {
  Eigen::Index imin = 0;
  const double rmin = s.rho.minCoeff(&imin);
  if (!(rmin >= floor)) {
    throw DensityDegeneracy("macro density (vacuum)", rmin,
                            s.grid.center(static_cast<int>(imin)), s.t);
  }
}

// -d/dx of the Rusanov flux of (rho, m) with minmod-limited slopes.
void flux_divergence(const Field& rho, const Field& m, double dx, Field& drho, Field& dm) {
  const int n = static_cast<int>(rho.size());
  Field sr(n);
  Field sm(n);
  for (int i = 0; i < n; ++i) {
    const int l = (i + n - 1) % n;
    const int r = (i + 1) % n;
    sr[i] = minmod(rho[i] - rho[l], rho[r] - rho[i]);
    sm[i] = minmod(m[i] - m[l], m[r] - m[i]);
  }
  Field fr(n);
  Field fm(n);
  for (int i = 0; i < n; ++i) {
    const int r = (i + 1) % n;
    const double rl = rho[i] + 0.5 * sr[i];
    const double ml = m[i] + 0.5 * sm[i];
    const double rr = rho[r] - 0.5 * sr[r];
    const double mr = m[r] - 0.5 * sm[r];
    const double ul = ml / rl;
    const double ur = mr / rr;
    const double a = std::max(std::abs(ul), std::abs(ur)) + 1.0;
    fr[i] = 0.5 * (ml + mr) - 0.5 * a * (rr - rl);
    fm[i] = 0.5 * (ml * ul + rl + mr * ur + rr) - 0.5 * a * (mr - ml);
  }
  for (int i = 0; i < n; ++i) {
    const int l = (i + n - 1) % n;
    drho[i] = -(fr[i] - fr[l]) / dx;
    dm[i] = -(fm[i] - fm[l]) / dx;
  }
}

}  // namespace

MacroState init_macro(const MacroInit& init, const TorusGrid& grid, double mass) {
  if (!(mass > 0.0)) throw ConfigError("macro init: mass must be positive");
  if (!(std::abs(init.rho_amplitude) < 1.0)) {
    throw ConfigError("macro init: |rho_amplitude| must be < 1");
  }
  const double k = 2.0 * std::numbers::pi * init.wavenumber / grid.length;
  const Field x = grid.centers();
  MacroState s;
  s.grid = grid;
  s.rho = (mass / grid.length) * (1.0 + init.rho_amplitude * (k * x).cos());
  s.m = s.rho * (init.u_mean + init.u_amplitude * (k * x).sin());
  return s;
}

void macro_step(MacroState& state, double dt, const DiscreteKernel& phi, double floor) {
  const double dx = state.grid.dx();
  const double fl = resolve_floor(state, floor);
  if (!(dt > 0.0)) throw ConfigError("macro: dt must be positive");
  check_vacuum(state, fl);
  const double speed = state.velocity().abs().maxCoeff() + 1.0;
  if (speed * dt > dx * (1.0 + 1e-12)) {
    throw ConfigError("macro: CFL violated, (max|u| + 1) dt = " + std::to_string(speed * dt) +
                      " > dx = " + std::to_string(dx));
  }

  const int n = state.grid.nx;
  Field dr(n);
  Field dm(n);
  flux_divergence(state.rho, state.m, dx, dr, dm);
  const Field r1 = state.rho + dt * dr;
  const Field m1 = state.m + dt * dm;
  if (!(r1.minCoeff() >= fl)) {
    Eigen::Index imin = 0;
    const double rmin = r1.minCoeff(&imin);
    throw DensityDegeneracy("macro density (vacuum)", rmin,
                            state.grid.center(static_cast<int>(imin)), state.t);
  }
  flux_divergence(r1, m1, dx, dr, dm);
  state.rho = 0.5 * (state.rho + r1 + dt * dr);
  state.m = 0.5 * (state.m + m1 + dt * dm);
  check_vacuum(state, fl);

  try {
    const Filtration filt = filtrate(state.rho, state.m, phi, fl);
    state.m += dt * (state.rho * filt.u_mollified - state.m);
  } catch (const DensityDegeneracy& e) {
    throw DensityDegeneracy(e.where(), e.min_value(), e.location(), state.t);
  }
  state.t += dt;
}

const std::vector<std::string>& MacroReport::columns() {
  static const std::vector<std::string> names = {"t",    "mass",    "momentum", "Ecal",
                                                 "Ephi", "Ephiphi", "A",        "min_rho",
                                                 "max_abs_u"};
  return names;
}

std::vector<double> MacroReport::values() const {
  return {t, mass, momentum, Ecal, Ephi, Ephiphi, A, min_rho, max_abs_u};
}

MacroReport macro_report(const MacroState& state, const DiscreteKernel& phi, double floor) {
  const double fl = resolve_floor(state, floor);
  MacroReport r;
  r.t = state.t;
  r.mass = state.mass();
  r.momentum = state.momentum();
  const MacroEnergies e = macro_energies(state.rho, state.m, phi, fl);
  r.Ecal = e.Ecal;
  r.Ephi = e.Ephi;
  r.Ephiphi = e.Ephiphi;
  r.A = alignment_functional(state.rho, state.m, phi, fl).direct;
  r.min_rho = state.rho.minCoeff();
  r.max_abs_u = state.velocity().abs().maxCoeff();
  return r;
}

std::vector<MacroReport> macro_run(MacroState& state, const DiscreteKernel& phi,
                                   const MacroRunOptions& options,
                                   const std::function<void(const MacroState&)>& snapshot) {
  const long n = step_count(options.t_end, options.dt, "t_end");
  const long every = std::max(1L, step_count(options.report_every, options.dt, "report_every"));
  const long snap_every = options.snapshot_every > 0.0
                              ? std::max(1L, step_count(options.snapshot_every, options.dt,
                                                        "snapshot_every"))
                              : 0;
  const double t0 = state.t;
  std::vector<MacroReport> out;
  out.push_back(macro_report(state, phi, options.floor));
  if (snapshot) snapshot(state);
  for (long s = 1; s <= n; ++s) {
    macro_step(state, options.dt, phi, options.floor);
    state.t = t0 + s * options.dt;
    if (s % every == 0 || s == n) out.push_back(macro_report(state, phi, options.floor));
    if (snapshot && snap_every > 0 && s % snap_every == 0) snapshot(state);
  }
  return out;
}

}  // namespace fpa

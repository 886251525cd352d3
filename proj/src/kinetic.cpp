#include "fpa/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fpa {

namespace {

// Bernoulli function w / (e^w - 1).
double bernoulli(double w) {
  if (w == 0.0) return 1.0;
  return w / std::expm1(w);
}

struct Tridiagonal {
  Field sub;   // coefficient of f_{j-1}
  Field diag;  // coefficient of f_j
  Field sup;   // coefficient of f_{j+1}
};

// Rows of the discrete operator L with (L f)_j = (F_{j+1/2} - F_{j-1/2}) / dv.
Tridiagonal operator_rows(const FaceWeights& w, double dv) {
  const Eigen::Index n = w.alpha.size() + 1;
  Tridiagonal L{Field::Zero(n), Field::Zero(n), Field::Zero(n)};
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    L.sup[j] = w.alpha[j] / dv;
    L.diag[j] -= w.beta[j] / dv;
    L.sub[j + 1] = w.beta[j] / dv;
    L.diag[j + 1] -= w.alpha[j] / dv;
  }
  return L;
}

// Thomas algorithm; for an M-matrix and nonnegative rhs every intermediate
// quantity keeps its sign, so the solution is nonnegative in floating point.
void solve_tridiagonal(const Field& a, const Field& b, const Field& c, Eigen::Ref<Field> x) {
  const Eigen::Index n = b.size();
  Field cp(n);
  Field dp(n);
  cp[0] = c[0] / b[0];
  dp[0] = x[0] / b[0];
  for (Eigen::Index j = 1; j < n; ++j) {
    const double denom = b[j] - a[j] * cp[j - 1];
    cp[j] = c[j] / denom;
    dp[j] = (x[j] - a[j] * dp[j - 1]) / denom;
  }
  x[n - 1] = dp[n - 1];
  for (Eigen::Index j = n - 2; j >= 0; --j) x[j] = dp[j] - cp[j] * x[j + 1];
}

double periodic_bump(double d, double width) {
  if (d >= width) return 0.0;
  const double s = d / width;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// Integral over the right fraction theta of cell k of the parabola matching
// the averages of cells k-1, k, k+1, scaled toward the mean where it would go
// negative.
double right_fraction_parabolic(double fl, double fk, double fr, double theta) {
  const double d1 = 0.5 * (fr - fl);
  const double d2 = fr - 2.0 * fk + fl;
  const double a0 = fk - d2 / 24.0;
  const double a1 = d1;
  const double a2 = 0.5 * d2;
  const double lo = 0.5 - theta;
  const double rq = a0 * theta + 0.5 * a1 * (0.25 - lo * lo) +
                    a2 / 3.0 * (0.125 - lo * lo * lo);

  double qmin = std::min(a0 - 0.5 * a1 + 0.25 * a2, a0 + 0.5 * a1 + 0.25 * a2);
  if (a2 > 0.0) {
    const double xi = -a1 / (2.0 * a2);
    if (xi > -0.5 && xi < 0.5) qmin = std::min(qmin, a0 + a1 * xi + a2 * xi * xi);
  }
  double r = rq;
  if (qmin < 0.0) {
    const double lambda = fk > 0.0 ? fk / (fk - qmin) : 0.0;
    r = theta * fk + lambda * (rq - theta * fk);
  }
  return std::clamp(r, 0.0, std::max(fk, 0.0));
}

}  // namespace

std::string to_string(Mode mode) {
  return mode == Mode::plain ? "plain" : "penalized";
}

Mode mode_from_string(const std::string& name) {
  if (name == "plain") return Mode::plain;
  if (name == "penalized") return Mode::penalized;
  throw ConfigError("unknown mode '" + name + "'");
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::maxwellian: return "maxwellian";
    case InitKind::shifted_maxwellian: return "shifted_maxwellian";
    case InitKind::modulated: return "modulated";
    case InitKind::double_bump: return "double_bump";
  }
  return "unknown";
}

InitKind init_kind_from_string(const std::string& name) {
  if (name == "maxwellian") return InitKind::maxwellian;
  if (name == "shifted_maxwellian") return InitKind::shifted_maxwellian;
  if (name == "modulated") return InitKind::modulated;
  if (name == "double_bump") return InitKind::double_bump;
  throw ConfigError("unknown init kind '" + name + "'");
}

std::string to_string(TransportScheme scheme) {
  return scheme == TransportScheme::linear ? "linear" : "limited_parabolic";
}

TransportScheme transport_scheme_from_string(const std::string& name) {
  if (name == "linear") return TransportScheme::linear;
  if (name == "limited_parabolic") return TransportScheme::limited_parabolic;
  throw ConfigError("unknown transport scheme '" + name + "'");
}

Field discrete_equilibrium(const VelocityGrid& grid, double sigma, double u_bar,
                           double mass_per_x) {
  if (!(sigma > 0.0)) throw ConfigError("equilibrium: sigma must be positive");
  if (std::abs(u_bar) + 6.0 * std::sqrt(sigma) > grid.vmax) {
    throw ConfigError("equilibrium: |u| + 6 sqrt(sigma) exceeds vmax");
  }
  // Ratios of consecutive samples of the Gaussian are exactly exp(-w) at each
  // face, which is the zero-flux condition of the exponentially fitted flux.
  const Field v = grid.centers();
  Field g = (-(v - u_bar).square() / (2.0 * sigma)).exp();
  g *= mass_per_x / (g.sum() * grid.dv());
  return g;
}

Field init_density(const InitAnsatz& ansatz, const TorusGrid& grid, double mass) {
  if (!(mass > 0.0)) throw ConfigError("init: mass must be positive");
  const double L = grid.length;
  const Field x = grid.centers();
  switch (ansatz.kind) {
    case InitKind::maxwellian:
    case InitKind::shifted_maxwellian:
      return Field::Constant(grid.nx, mass / L);
    case InitKind::modulated: {
      if (!(std::abs(ansatz.amplitude) < 1.0)) {
        throw ConfigError("modulated init: |amplitude| must be < 1");
      }
      const double k = 2.0 * std::numbers::pi * ansatz.wavenumber / L;
      return (mass / L) * (1.0 + ansatz.amplitude * (k * x).cos());
    }
    case InitKind::double_bump: {
      const double width = ansatz.bump_width * L;
      if (!(width > 0.0)) throw ConfigError("double_bump init: bump_width must be positive");
      if (ansatz.background < 0.0) {
        throw ConfigError("double_bump init: background must be nonnegative");
      }
      const double c1 = wrap_periodic(ansatz.bump_center * L, L);
      const double c2 = wrap_periodic((ansatz.bump_center + ansatz.bump_separation) * L, L);
      Field rho(grid.nx);
      for (int i = 0; i < grid.nx; ++i) {
        const double d1 = std::abs(periodic_displacement(x[i], c1, L));
        const double d2 = std::abs(periodic_displacement(x[i], c2, L));
        rho[i] = ansatz.background + periodic_bump(d1, width) + periodic_bump(d2, width);
      }
      const double total = rho.sum() * grid.dx();
      if (!(total > 0.0)) throw ConfigError("double_bump init: bumps fall between nodes");
      return rho * (mass / total);
    }
  }
  throw ConfigError("init: unhandled kind");
}

KineticState init_state(const InitAnsatz& ansatz, const PhaseGrid& grid, double sigma,
                        double mass) {
  const double center = ansatz.kind == InitKind::maxwellian ? 0.0 : ansatz.u_bar;
  const Field g = discrete_equilibrium(grid.v, sigma, center, 1.0);
  const Field rho = init_density(ansatz, grid.x, mass);
  KineticState s;
  s.grid = grid;
  s.sigma = sigma;
  s.f = rho.matrix() * g.matrix().transpose();
  return s;
}

void transport_substep(PhaseField& f, const PhaseGrid& grid, double tau,
                       TransportScheme scheme) {
  const int nx = grid.nx();
  const double dx = grid.x.dx();
  Field row(nx);
  Field right(nx);
  for (int j = 0; j < grid.nv(); ++j) {
    const double s = grid.v.center(j) * tau / dx;
    const double p_real = std::floor(s);
    const double theta = s - p_real;
    const long p = static_cast<long>(p_real);
    row = f.col(j);
    if (theta == 0.0) {
      right.setZero();
    } else if (scheme == TransportScheme::linear) {
      right = theta * row;
    } else {
      for (int k = 0; k < nx; ++k) {
        const double fl = row[(k + nx - 1) % nx];
        const double fr = row[(k + 1) % nx];
        right[k] = right_fraction_parabolic(fl, row[k], fr, theta);
      }
    }
    for (int i = 0; i < nx; ++i) {
      long c = (i - p) % nx;
      if (c < 0) c += nx;
      const long l = (c + nx - 1) % nx;
      f(i, j) = right[l] + (row[c] - right[c]);
    }
  }
}

FaceWeights chang_cooper_weights(const Field& drift, double diffusion, double dv) {
  FaceWeights w{Field(drift.size()), Field(drift.size())};
  const double scale = diffusion / dv;
  for (Eigen::Index j = 0; j < drift.size(); ++j) {
    const double z = drift[j] * dv / diffusion;
    w.alpha[j] = scale * bernoulli(-z);
    w.beta[j] = scale * bernoulli(z);
  }
  return w;
}

bool collide_column(Eigen::Ref<Field> column, const FaceWeights& w, double dv, double dt) {
  const Tridiagonal L = operator_rows(w, dv);
  const Eigen::Index n = column.size();
  const double max_rate = (-L.diag).maxCoeff();
  const bool implicit = 0.5 * dt * max_rate > 1.0;
  const double theta = implicit ? 1.0 : 0.5;

  if (!implicit) {
    const Field f = column;
    const double e = (1.0 - theta) * dt;
    for (Eigen::Index j = 0; j < n; ++j) {
      double r = (1.0 + e * L.diag[j]) * f[j];
      if (j > 0) r += e * L.sub[j] * f[j - 1];
      if (j + 1 < n) r += e * L.sup[j] * f[j + 1];
      column[j] = r;
    }
  }
  const Field a = -theta * dt * L.sub;
  const Field b = 1.0 - theta * dt * L.diag;
  const Field c = -theta * dt * L.sup;
  solve_tridiagonal(a, b, c, column);
  return implicit;
}

namespace {

struct Coefficients {
  Field u_phi;
  Field u_local;
};

Coefficients coefficients(const KineticState& state, const Field& rho, const Field& m,
                          const DiscreteKernel& phi, double floor, double mass) {
  Coefficients c;
  c.u_phi = filtrate(rho, m, phi, floor).u_mollified;
  if (state.mode == Mode::penalized) {
    const double vacuum = 1e-12 * mass / state.grid.x.length;
    c.u_local = m / rho.max(vacuum);
  }
  return c;
}

int collide(PhaseField& f, const KineticState& state, const Coefficients& c, double dt) {
  const PhaseGrid& g = state.grid;
  const int nv = g.nv();
  const double dv = g.v.dv();
  Field faces(nv - 1);
  for (int j = 0; j + 1 < nv; ++j) faces[j] = g.v.face(j);

  int implicit = 0;
  Field column(nv);
  for (int i = 0; i < g.nx(); ++i) {
    Field drift;
    double diffusion = 0.0;
    if (state.mode == Mode::plain) {
      drift = faces - c.u_phi[i];
      diffusion = state.sigma;
    } else {
      const double inv = 1.0 / state.epsilon_pen;
      drift = inv * (faces - c.u_local[i]) + (faces - c.u_phi[i]);
      diffusion = inv;
    }
    const FaceWeights w = chang_cooper_weights(drift, diffusion, dv);
    column = f.row(i).transpose();
    if (collide_column(column, w, dv, dt)) ++implicit;
    f.row(i) = column.transpose();
  }
  return implicit;
}

}  // namespace

StepInfo step(KineticState& state, double dt, const DiscreteKernel& phi,
              const StepOptions& options) {
  const PhaseGrid& g = state.grid;
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (g.v.vmax * dt > g.x.dx() * (1.0 + 1e-12)) {
    throw ConfigError("step: CFL violated, vmax * dt = " + std::to_string(g.v.vmax * dt) +
                      " > dx = " + std::to_string(g.x.dx()));
  }
  if (state.mode == Mode::penalized && !(state.epsilon_pen > 0.0)) {
    throw ConfigError("step: penalized mode needs epsilon_pen > 0");
  }
  if (phi.grid.nx != g.nx() || phi.grid.length != g.x.length) {
    throw ShapeError("step: kernel built on a different grid");
  }
  const double mass = state.mass();
  const double floor =
      options.floor > 0.0 ? options.floor : default_density_floor(mass, g.x.length);

  StepInfo info;
  transport_substep(state.f, g, 0.5 * dt, options.transport);
  try {
    const Moments mom = moments(state.f, g, floor);
    info.min_rho_phi = convolve_periodic(mom.rho, phi).minCoeff();
    const Coefficients c0 = coefficients(state, mom.rho, mom.m, phi, floor, mass);

    // Predictor-corrector on the velocity-dependent coefficients; rho is
    // unchanged by the collision, only m moves.
    PhaseField predicted = state.f;
    collide(predicted, state, c0, dt);
    const Moments mom_pred = moments(predicted, g, floor);
    const Field m_mid = 0.5 * (mom.m + mom_pred.m);
    const Coefficients c_mid = coefficients(state, mom.rho, m_mid, phi, floor, mass);
    info.implicit_columns = collide(state.f, state, c_mid, dt);
  } catch (const DensityDegeneracy& e) {
    throw DensityDegeneracy(e.where(), e.min_value(), e.location(), state.t);
  }
  transport_substep(state.f, g, 0.5 * dt, options.transport);
  state.t += dt;
  return info;
}

GuardReport continuation_guard(const KineticState& state, const DiscreteKernel& phi,
                               double floor) {
  const Moments mom = moments(state.f, state.grid, 0.0);
  const Field rho_phi = convolve_periodic(mom.rho, phi);
  Eigen::Index imin = 0;
  GuardReport r;
  r.min_rho_phi = rho_phi.minCoeff(&imin);
  r.location = state.grid.x.center(static_cast<int>(imin));
  r.pass = r.min_rho_phi >= floor;
  return r;
}

RunResult run(KineticState& state, const DiscreteKernel& phi, const RunOptions& options,
              const SnapshotSink& snapshot) {
  const long n = step_count(options.t_end, options.dt, "t_end");
  const long every = std::max(1L, step_count(options.report_every, options.dt, "report_every"));
  const long snap_every = options.snapshot_every > 0.0
                              ? std::max(1L, step_count(options.snapshot_every, options.dt,
                                                        "snapshot_every"))
                              : 0;

  const double t0 = state.t;
  const double mass = state.mass();
  ReportOptions ro = options.report;
  ro.sigma = state.sigma;
  ro.mass = mass;
  ro.u_bar = moments(state.f, state.grid, 0.0).m.sum() * state.grid.x.dx() / mass;

  RunResult result;
  result.min_rho_phi = continuation_guard(state, phi, 0.0).min_rho_phi;
  result.min_f = state.f.minCoeff();

  auto record = [&]() {
    if (options.with_reports) result.reports.push_back(report(state.f, state.grid, phi, ro, state.t));
  };

  try {
    record();
    if (snapshot) snapshot(state);
    for (long s = 1; s <= n; ++s) {
      const StepInfo info = step(state, options.dt, phi, options.step);
      state.t = t0 + s * options.dt;
      ++result.steps;
      result.min_rho_phi = std::min(result.min_rho_phi, info.min_rho_phi);
      result.min_f = std::min(result.min_f, state.f.minCoeff());
      result.implicit_columns += info.implicit_columns;
      if (s % every == 0 || s == n) record();
      if (snapshot && snap_every > 0 && s % snap_every == 0) snapshot(state);
    }
  } catch (const DensityDegeneracy& e) {
    result.guard = GuardEvent{state.t, e.min_value(), e.location(), e.where()};
    result.min_rho_phi = std::min(result.min_rho_phi, e.min_value());
  }
  return result;
}

}  // namespace fpa

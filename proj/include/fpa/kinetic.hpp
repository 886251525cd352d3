#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fpa/diagnostics.hpp"
#include "fpa/grid.hpp"
#include "fpa/kernels.hpp"

namespace fpa {

enum class Mode { plain, penalized };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct KineticState {
  PhaseGrid grid;
  PhaseField f;
  double t = 0.0;
  double sigma = 1.0;
  Mode mode = Mode::plain;
  double epsilon_pen = 0.0;

  double mass() const { return integrate(f, grid, Domain::xv); }
};

enum class InitKind { maxwellian, shifted_maxwellian, modulated, double_bump };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& name);

/// Initial data f0(x, v) = rho0(x) g(v) with g the discrete equilibrium at
/// u_bar. Lengths (bump_center, bump_separation, bump_width) are fractions
/// of the domain length.
struct InitAnsatz {
  InitKind kind = InitKind::maxwellian;
  double u_bar = 0.0;
  double amplitude = 0.0;  ///< modulated: rho0 ~ 1 + a cos(2 pi k x / length)
  int wavenumber = 1;
  double bump_center = 0.25;
  double bump_separation = 0.5;
  double bump_width = 0.1;
  double background = 0.0;  ///< double_bump: uniform floor relative to peak
};

/// Zero-flux state of the velocity-space scheme for drift v - u_bar and
/// diffusion sigma, normalized so that sum_j g_j dv = mass_per_x.
Field discrete_equilibrium(const VelocityGrid& grid, double sigma, double u_bar,
                           double mass_per_x);

/// Spatial profile of an ansatz on the torus, scaled to total mass `mass`.
Field init_density(const InitAnsatz& ansatz, const TorusGrid& grid, double mass);

KineticState init_state(const InitAnsatz& ansatz, const PhaseGrid& grid, double sigma,
                        double mass);

enum class TransportScheme {
  linear,            ///< periodic linear interpolation
  limited_parabolic  ///< conservative parabolic reconstruction, positivity limited
};

std::string to_string(TransportScheme scheme);
TransportScheme transport_scheme_from_string(const std::string& name);

/// Exact shift of every v-row by v_j * tau, in flux form: each row is
/// integrated against a piecewise reconstruction over the backtracked cells.
void transport_substep(PhaseField& f, const PhaseGrid& grid, double tau,
                       TransportScheme scheme = TransportScheme::limited_parabolic);

struct StepOptions {
  double floor = 0.0;  ///< <= 0 means the default density floor
  TransportScheme transport = TransportScheme::limited_parabolic;
};

struct StepInfo {
  double min_rho_phi = 0.0;
  int implicit_columns = 0;  ///< columns advanced by backward Euler instead of CN
};

/// Chang-Cooper face weights for one velocity column: the numerical flux at
/// face j + 1/2 is alpha_j f_{j+1} - beta_j f_j.
struct FaceWeights {
  Field alpha;
  Field beta;
};

/// `drift` holds the face drift coefficients A_{j+1/2} (nv - 1 entries) for
/// the flux D d_v f + A f.
FaceWeights chang_cooper_weights(const Field& drift, double diffusion, double dv);

/// Velocity-space drift-diffusion over dt for one column with fixed face
/// weights. Crank-Nicolson when its explicit half keeps the column
/// nonnegative, backward Euler otherwise. Returns true if backward Euler was
/// used.
bool collide_column(Eigen::Ref<Field> column, const FaceWeights& w, double dv, double dt);

/// One Strang step: half transport, full velocity-space step, half transport.
StepInfo step(KineticState& state, double dt, const DiscreteKernel& phi,
              const StepOptions& options = {});

struct GuardReport {
  double min_rho_phi = 0.0;
  double location = 0.0;
  bool pass = true;
};

GuardReport continuation_guard(const KineticState& state, const DiscreteKernel& phi,
                               double floor);

struct RunOptions {
  double t_end = 1.0;
  double dt = 1e-3;
  double report_every = 0.05;
  double snapshot_every = 0.0;  ///< <= 0 disables snapshots
  StepOptions step;
  ReportOptions report;  ///< sigma, mass and u_bar are taken from the initial state
  bool with_reports = true;
};

struct GuardEvent {
  double t = 0.0;
  double min_rho_phi = 0.0;
  double location = 0.0;
  std::string where;
};

struct RunResult {
  std::vector<EntropyReport> reports;
  long steps = 0;
  double min_rho_phi = 0.0;  ///< over every step taken
  double min_f = 0.0;        ///< over every step taken
  int implicit_columns = 0;
  std::optional<GuardEvent> guard;
};

using SnapshotSink = std::function<void(const KineticState&)>;

/// Advances to t_end with a fixed number of steps round(t_end / dt). Stops
/// early, with `guard` set, if the filtration degenerates.
RunResult run(KineticState& state, const DiscreteKernel& phi, const RunOptions& options,
              const SnapshotSink& snapshot = {});

}  // namespace fpa

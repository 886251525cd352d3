#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpa/kernels.hpp"
#include "fpa/kinetic.hpp"
#include "fpa/macro.hpp"

namespace fpa {

enum class Command { kinetic, particles, macro, hydro_sweep, diagnose };

std::string to_string(Command command);

enum ExitCode : int {
  kExitPass = 0,
  kExitMonitorFailure = 2,
  kExitSolverError = 3,
  kExitConfigError = 4,
};

struct DecayWindow {
  double t_begin = 1.0;
  double t_end = 5.0;
};

struct DiagnosticsConfig {
  std::optional<double> margin_radius;  ///< unset means r0 / 2
  std::optional<double> floor;          ///< unset means 1e-10 M / length
  std::optional<DecayWindow> decay_fit;
};

struct ParticlesConfig {
  int n_dim = 1;
  int N = 64;
  int deposition_nodes = 64;
  std::uint64_t seed = 1;
  int realizations = 1;
  std::string init_kind = "random";  ///< random | locked_pair (n_dim = 2, N = 2)
  double speed = 1.0;                ///< locked_pair
  double u_mean = 0.0;               ///< random
  double spread = 1.0;               ///< random
  double mass = 0.0;                 ///< default length^n_dim
  bool cucker_smale = false;
};

struct MacroConfig {
  MacroInit init;
};

struct HydroConfig {
  std::vector<double> epsilons{0.2, 0.1, 0.05};
  double t_star = 0.5;
  int nv = 64;
  std::optional<double> vmax;  ///< unset means max|u0| + 8
};

struct ScenarioConfig {
  double length = 1.0;
  int nx = 128;
  double vmax = 0.0;  ///< default |u_bar| + 8 sqrt(sigma)
  int nv = 128;
  KernelSpec kernel;
  double sigma = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  double report_every = 0.05;
  double snapshot_every = 0.0;
  InitAnsatz init;
  double mass = 0.0;  ///< default length
  Mode mode = Mode::plain;
  std::optional<double> epsilon_pen;
  TransportScheme transport = TransportScheme::limited_parabolic;
  DiagnosticsConfig diagnostics;
  std::optional<ParticlesConfig> particles;
  std::optional<MacroConfig> macro;
  std::optional<HydroConfig> hydro;
  std::string output_dir = "out";
};

/// Validates a JSON document and fills defaults; derived defaults (vmax,
/// masses) are resolved here so the struct always holds concrete values. Unknown keys, wrong types,
/// nonpositive physical parameters and mode-conditional mismatches throw
/// ConfigError naming the offending key.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Effective configuration with every default written out; parse_config of
/// the result reproduces the same configuration.
nlohmann::json to_json(const ScenarioConfig& config);

struct Monitor {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string rule;  ///< how value is compared with tolerance
};

nlohmann::json to_json(const Monitor& monitor);

struct CommandOptions {
  std::filesystem::path out_dir;
  std::optional<std::vector<double>> epsilons;  ///< hydro-sweep override
  std::optional<std::filesystem::path> snapshot;  ///< diagnose input
};

/// Runs one subcommand, writes its files under options.out_dir and returns
/// the process exit code. Solver errors (including the continuation guard)
/// are caught, recorded in summary.json and mapped to kExitSolverError.
int run_command(Command command, const ScenarioConfig& config, const CommandOptions& options,
                std::ostream& log);

}  // namespace fpa

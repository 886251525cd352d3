#include "fpa/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "fpa/diagnostics.hpp"
#include "fpa/errors.hpp"
#include "fpa/hydro.hpp"
#include "fpa/io.hpp"
#include "fpa/particles.hpp"

namespace fpa {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Typed access to one JSON object; every key read is remembered so that
// leftovers can be rejected as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(name(key) + " must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(name(key) + " must be an integer");
    return v.get<long>();
  }
  long integer(const std::string& key, long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0)) {
      throw ConfigError(name(key) + " must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(name(key) + " must be a string");
    return v.get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(name(key) + " must be a boolean");
    return v.get<bool>();
  }

  Section child(const std::string& key) { return Section(at(key), name(key)); }

  const json& raw(const std::string& key) { return at(key); }

  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + name(item.key()) + "'");
    }
  }

 private:
  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) throw ConfigError("missing required key '" + name(key) + "'");
    return node_.at(key);
  }
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double positive(double value, const std::string& key) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(key + " must be positive, got " + format_double(value));
  }
  return value;
}

double nonnegative(double value, const std::string& key) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError(key + " must be nonnegative, got " + format_double(value));
  }
  return value;
}

int at_least(long value, long lo, const std::string& key) {
  if (value < lo) {
    throw ConfigError(key + " must be at least " + std::to_string(lo) + ", got " +
                      std::to_string(value));
  }
  return static_cast<int>(value);
}

InitAnsatz parse_init(Section s) {
  InitAnsatz a;
  a.kind = init_kind_from_string(s.text("kind", "maxwellian"));
  a.u_bar = s.number("u_bar", 0.0);
  a.amplitude = s.number("amplitude", 0.0);
  a.wavenumber = at_least(s.integer("wavenumber", 1), 1, s.name("wavenumber"));
  a.bump_center = s.number("bump_center", a.bump_center);
  a.bump_separation = s.number("bump_separation", a.bump_separation);
  a.bump_width = positive(s.number("bump_width", a.bump_width), s.name("bump_width"));
  a.background = nonnegative(s.number("background", 0.0), s.name("background"));
  if (!(std::abs(a.amplitude) < 1.0)) throw ConfigError(s.name("amplitude") + ": |a| must be < 1");
  s.finish();
  return a;
}

MacroInit parse_macro_init(Section s) {
  MacroInit m;
  m.rho_amplitude = s.number("rho_amplitude", 0.0);
  m.u_amplitude = s.number("u_amplitude", 0.0);
  m.u_mean = s.number("u_mean", 0.0);
  m.wavenumber = at_least(s.integer("wavenumber", 1), 1, s.name("wavenumber"));
  if (!(std::abs(m.rho_amplitude) < 1.0)) {
    throw ConfigError(s.name("rho_amplitude") + ": |a| must be < 1");
  }
  s.finish();
  return m;
}

ParticlesConfig parse_particles(Section s, double length) {
  ParticlesConfig p;
  p.init_kind = s.text("init", "random");
  if (p.init_kind != "random" && p.init_kind != "locked_pair") {
    throw ConfigError(s.name("init") + " must be 'random' or 'locked_pair'");
  }
  const bool locked = p.init_kind == "locked_pair";
  p.n_dim = static_cast<int>(s.integer("n_dim", locked ? 2 : 1));
  if (p.n_dim != 1 && p.n_dim != 2) throw ConfigError(s.name("n_dim") + " must be 1 or 2");
  p.N = at_least(s.integer("N", locked ? 2 : 64), 1, s.name("N"));
  if (locked && (p.n_dim != 2 || p.N != 2)) {
    throw ConfigError(s.name("init") + " 'locked_pair' requires n_dim = 2 and N = 2");
  }
  p.deposition_nodes = at_least(s.integer("deposition_nodes", 64), 2, s.name("deposition_nodes"));
  p.seed = s.unsigned_integer("seed", 1);
  p.realizations = at_least(s.integer("realizations", 1), 1, s.name("realizations"));
  p.speed = s.number("speed", 1.0);
  p.u_mean = s.number("u_mean", 0.0);
  p.spread = nonnegative(s.number("spread", 1.0), s.name("spread"));
  p.mass = positive(s.number("mass", std::pow(length, p.n_dim)), s.name("mass"));
  p.cucker_smale = s.flag("cucker_smale", false);
  s.finish();
  return p;
}

HydroConfig parse_hydro(Section s) {
  HydroConfig h;
  if (s.has("epsilons")) {
    const json& list = s.raw("epsilons");
    if (!list.is_array() || list.empty()) {
      throw ConfigError(s.name("epsilons") + " must be a nonempty array");
    }
    h.epsilons.clear();
    for (const json& e : list) {
      if (!e.is_number()) throw ConfigError(s.name("epsilons") + " entries must be numbers");
      h.epsilons.push_back(positive(e.get<double>(), s.name("epsilons")));
    }
  }
  h.t_star = positive(s.number("t_star", h.t_star), s.name("t_star"));
  h.nv = at_least(s.integer("nv", h.nv), 8, s.name("nv"));
  if (s.has("vmax")) h.vmax = positive(s.number("vmax"), s.name("vmax"));
  s.finish();
  return h;
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::kinetic: return "kinetic";
    case Command::particles: return "particles";
    case Command::macro: return "macro";
    case Command::hydro_sweep: return "hydro-sweep";
    case Command::diagnose: return "diagnose";
  }
  return "unknown";
}

ScenarioConfig parse_config(const json& doc) {
  Section root(doc, "");
  ScenarioConfig c;

  if (root.has("domain")) {
    Section d = root.child("domain");
    c.length = positive(d.number("length", c.length), "domain.length");
    c.nx = at_least(d.integer("nx", c.nx), 4, "domain.nx");
    d.finish();
  }
  c.sigma = nonnegative(root.number("sigma", c.sigma), "sigma");
  if (root.has("init")) c.init = parse_init(root.child("init"));

  std::optional<double> vmax;
  if (root.has("velocity")) {
    Section v = root.child("velocity");
    if (v.has("vmax")) vmax = positive(v.number("vmax"), "velocity.vmax");
    c.nv = at_least(v.integer("nv", c.nv), 8, "velocity.nv");
    v.finish();
  }
  c.vmax = vmax ? *vmax : std::abs(c.init.u_bar) + 8.0 * std::sqrt(c.sigma);
  if (!(c.vmax > 0.0)) throw ConfigError("velocity.vmax must be given when sigma = 0");

  if (root.has("kernel")) {
    Section k = root.child("kernel");
    c.kernel.family = kernel_family_from_string(k.text("family", "global_uniform"));
    c.kernel.r0 = positive(k.number("r0", c.kernel.r0), "kernel.r0");
    if (k.has("c0")) c.kernel.c0 = positive(k.number("c0"), "kernel.c0");
    k.finish();
  }

  c.dt = positive(root.number("dt", c.dt), "dt");
  c.t_end = positive(root.number("t_end", c.t_end), "t_end");
  c.report_every = positive(root.number("report_every", c.report_every), "report_every");
  c.snapshot_every = nonnegative(root.number("snapshot_every", 0.0), "snapshot_every");
  c.mass = positive(root.number("mass", c.length), "mass");

  c.mode = mode_from_string(root.text("mode", "plain"));
  const bool has_eps = root.has("epsilon_pen");
  if (c.mode == Mode::penalized) {
    if (!has_eps) throw ConfigError("missing required key 'epsilon_pen' (mode is penalized)");
    c.epsilon_pen = positive(root.number("epsilon_pen"), "epsilon_pen");
  } else if (has_eps) {
    throw ConfigError("key 'epsilon_pen' conflicts with mode 'plain'");
  }
  c.transport = transport_scheme_from_string(root.text("transport", "limited_parabolic"));

  if (root.has("diagnostics")) {
    Section d = root.child("diagnostics");
    if (d.has("margin_radius")) {
      c.diagnostics.margin_radius = positive(d.number("margin_radius"), "diagnostics.margin_radius");
    }
    if (d.has("floor")) c.diagnostics.floor = positive(d.number("floor"), "diagnostics.floor");
    if (d.has("decay_fit")) {
      Section w = d.child("decay_fit");
      DecayWindow window;
      window.t_begin = nonnegative(w.number("t_begin", window.t_begin), "decay_fit.t_begin");
      window.t_end = positive(w.number("t_end", window.t_end), "decay_fit.t_end");
      if (!(window.t_end > window.t_begin)) {
        throw ConfigError("diagnostics.decay_fit: t_end must exceed t_begin");
      }
      w.finish();
      c.diagnostics.decay_fit = window;
    }
    d.finish();
  }

  if (root.has("particles")) c.particles = parse_particles(root.child("particles"), c.length);
  if (root.has("macro")) c.macro = MacroConfig{parse_macro_init(root.child("macro"))};
  if (root.has("hydro")) c.hydro = parse_hydro(root.child("hydro"));
  c.output_dir = root.text("output_dir", c.output_dir);
  root.finish();
  return c;
}

ScenarioConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["domain"] = {{"length", c.length}, {"nx", c.nx}};
  j["velocity"] = {{"vmax", c.vmax}, {"nv", c.nv}};
  json k = {{"family", to_string(c.kernel.family)}, {"r0", c.kernel.r0}};
  if (c.kernel.c0) k["c0"] = *c.kernel.c0;
  j["kernel"] = k;
  j["sigma"] = c.sigma;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["report_every"] = c.report_every;
  j["snapshot_every"] = c.snapshot_every;
  j["init"] = {{"kind", to_string(c.init.kind)},
               {"u_bar", c.init.u_bar},
               {"amplitude", c.init.amplitude},
               {"wavenumber", c.init.wavenumber},
               {"bump_center", c.init.bump_center},
               {"bump_separation", c.init.bump_separation},
               {"bump_width", c.init.bump_width},
               {"background", c.init.background}};
  j["mass"] = c.mass;
  j["mode"] = to_string(c.mode);
  if (c.epsilon_pen) j["epsilon_pen"] = *c.epsilon_pen;
  j["transport"] = to_string(c.transport);
  json d = json::object();
  if (c.diagnostics.margin_radius) d["margin_radius"] = *c.diagnostics.margin_radius;
  if (c.diagnostics.floor) d["floor"] = *c.diagnostics.floor;
  if (c.diagnostics.decay_fit) {
    d["decay_fit"] = {{"t_begin", c.diagnostics.decay_fit->t_begin},
                      {"t_end", c.diagnostics.decay_fit->t_end}};
  }
  j["diagnostics"] = d;
  if (c.particles) {
    const ParticlesConfig& p = *c.particles;
    j["particles"] = {{"init", p.init_kind},
                      {"n_dim", p.n_dim},
                      {"N", p.N},
                      {"deposition_nodes", p.deposition_nodes},
                      {"seed", p.seed},
                      {"realizations", p.realizations},
                      {"speed", p.speed},
                      {"u_mean", p.u_mean},
                      {"spread", p.spread},
                      {"mass", p.mass},
                      {"cucker_smale", p.cucker_smale}};
  }
  if (c.macro) {
    const MacroInit& m = c.macro->init;
    j["macro"] = {{"rho_amplitude", m.rho_amplitude},
                  {"u_amplitude", m.u_amplitude},
                  {"u_mean", m.u_mean},
                  {"wavenumber", m.wavenumber}};
  }
  if (c.hydro) {
    json h = {{"epsilons", c.hydro->epsilons}, {"t_star", c.hydro->t_star}, {"nv", c.hydro->nv}};
    if (c.hydro->vmax) h["vmax"] = *c.hydro->vmax;
    j["hydro"] = h;
  }
  j["output_dir"] = c.output_dir;
  return j;
}

json to_json(const Monitor& m) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"name", m.name},
          {"value", num(m.value)},
          {"tolerance", num(m.tolerance)},
          {"rule", m.rule},
          {"pass", m.pass}};
}

namespace {

Monitor at_most(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value <= tolerance, "value <= tolerance"};
}

Monitor at_least_tol(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value >= tolerance, "value >= tolerance"};
}

Monitor above(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value > tolerance, "value > tolerance"};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

struct Outcome {
  std::vector<Monitor> monitors;
  json extra = json::object();
  std::optional<json> error;
};

int finish(const std::filesystem::path& dir, Command command, Outcome& outcome,
           std::ostream& log) {
  bool all = true;
  json monitors = json::array();
  for (const Monitor& m : outcome.monitors) {
    all = all && m.pass;
    monitors.push_back(to_json(m));
    log << (m.pass ? "  ok    " : "  FAIL  ") << m.name << " = " << format_double(m.value)
        << " (" << m.rule << ", tolerance " << format_double(m.tolerance) << ")\n";
  }
  int code = kExitPass;
  if (outcome.error) {
    code = outcome.error->value("exit_code", static_cast<int>(kExitSolverError));
  } else if (!all) {
    code = kExitMonitorFailure;
  }
  json summary = outcome.extra;
  summary["command"] = to_string(command);
  summary["monitors"] = monitors;
  summary["all_monitors_pass"] = all;
  summary["error"] = outcome.error ? *outcome.error : json(nullptr);
  summary["exit_code"] = code;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  return code;
}

std::string snapshot_name(const std::string& stem, long index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%06ld.csv", index);
  return stem + buf;
}

// --- kinetic ---------------------------------------------------------------

double fisher_scale(const EntropyReport& r) { return std::abs(r.Ivv0) + std::abs(r.Ephi) + 1.0; }

double alignment_scale(const EntropyReport& r) {
  return std::max({std::abs(r.A_direct), std::abs(r.A_double), std::abs(r.Ephi)});
}

Outcome run_kinetic(const ScenarioConfig& c, const std::filesystem::path& dir) {
  if (!(c.sigma > 0.0)) throw ConfigError("sigma must be positive for kinetic runs");
  const PhaseGrid grid = make_grids(c.length, c.nx, c.vmax, c.nv);
  const DiscreteKernel phi = build_kernel(c.kernel, grid.x);
  KineticState state = init_state(c.init, grid, c.sigma, c.mass);
  state.mode = c.mode;
  state.epsilon_pen = c.epsilon_pen.value_or(0.0);
  const PhaseField f0 = state.f;
  const double M = state.mass();
  const double floor = c.diagnostics.floor.value_or(default_density_floor(M, c.length));

  RunOptions options;
  options.t_end = c.t_end;
  options.dt = c.dt;
  options.report_every = c.report_every;
  options.snapshot_every = c.snapshot_every;
  options.step.floor = floor;
  options.step.transport = c.transport;
  options.report.margin_radius = c.diagnostics.margin_radius.value_or(0.0);
  options.report.floor = floor;

  std::filesystem::create_directories(dir / "snapshots");
  const double t0 = state.t;
  const RunResult result = run(state, phi, options, [&](const KineticState& s) {
    const long index = std::lround((s.t - t0) / c.dt);
    write_phase_snapshot(dir / "snapshots" / snapshot_name("f", index), s.grid, s.f);
  });
  write_phase_snapshot(dir / "final_state.csv", state.grid, state.f);
  {
    CsvWriter ts(dir / "timeseries.csv", EntropyReport::columns());
    for (const EntropyReport& r : result.reports) ts.row(r.values());
  }

  Outcome out;
  const auto& reps = result.reports;
  double mass_drift = 0.0;
  double hierarchy = std::numeric_limits<double>::infinity();
  double a_rel = 0.0;
  double fisher_rel = 0.0;
  double pinsker = std::numeric_limits<double>::infinity();
  double logsob = std::numeric_limits<double>::infinity();
  double h_increase = -std::numeric_limits<double>::infinity();
  double e_max = -std::numeric_limits<double>::infinity();
  double control_min = std::numeric_limits<double>::infinity();
  double control_max = 0.0;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const EntropyReport& r = reps[k];
    // A against the mollified energy in the frame of the mean velocity.
    const double e_rel = r.Ephi - r.momentum * r.momentum / M;
    if (e_rel > 1e-10 * r.E) {
      control_min = std::min(control_min, r.A_direct / e_rel);
      control_max = std::max(control_max, r.A_direct / e_rel);
    }
    mass_drift = std::max(mass_drift, std::abs(r.mass - M) / M);
    hierarchy = std::min(hierarchy, r.hierarchy_slack());
    a_rel = std::max(a_rel, std::abs(r.A_direct - r.A_double) / std::max(alignment_scale(r), 1e-300));
    fisher_rel = std::max(fisher_rel, std::abs(r.fisher_identity_residual) /
                                          fisher_scale(r));
    pinsker = std::min(pinsker, r.pinsker_slack);
    if (r.H > 1e-10 && std::isfinite(r.logsob_ratio)) logsob = std::min(logsob, r.logsob_ratio);
    if (k > 0) h_increase = std::max(h_increase, r.H - reps[k - 1].H);
    e_max = std::max(e_max, r.E);
  }
  if (!reps.empty()) {
    out.monitors.push_back(at_most("mass_conservation", mass_drift, 1e-12));
    out.monitors.push_back(at_least_tol("positivity", result.min_f, 0.0));
    out.monitors.push_back(at_least_tol("energy_hierarchy", hierarchy, -1e-12));
    out.monitors.push_back(at_most("alignment_identity", a_rel, 1e-10));
    out.monitors.push_back(at_most("fisher_identity", fisher_rel, 1e-8));
    out.monitors.push_back(at_least_tol("pinsker", pinsker, -1e-10));
    if (std::isfinite(logsob)) {
      out.monitors.push_back(above("logsob_positive", logsob, 0.0));
    } else {
      out.monitors.push_back(
          {"logsob_positive", kNaN, 0.0, true, "vacuous: H <= 1e-10 throughout"});
    }
    if (reps.size() > 1 && c.mode == Mode::plain) {
      out.monitors.push_back(at_most("entropy_monotone", h_increase, 1e-10));
    }
    out.monitors.push_back(at_most("energy_bound", e_max, reps.front().E + 2.0 * M * c.t_end));
    if (std::isfinite(control_min)) {
      out.monitors.push_back(above("alignment_controls_energy", control_min, 0.0));
      out.extra["alignment_energy_ratio_min"] = control_min;
      out.extra["alignment_energy_ratio_max"] = control_max;
    }
  }
  if (!result.guard) {
    out.monitors.push_back(at_least_tol("continuation_guard", result.min_rho_phi, floor));
  }

  json fit_json = nullptr;
  if (c.diagnostics.decay_fit && !result.guard) {
    std::vector<double> t;
    std::vector<double> y;
    for (const EntropyReport& r : reps) {
      t.push_back(r.t);
      y.push_back(r.L1_to_maxwellian);
    }
    const DecayWindow w = *c.diagnostics.decay_fit;
    try {
      const DecayFit fit = fit_decay_rate(t, y, w.t_begin, w.t_end);
      fit_json = {{"c1", fit.c1},
                  {"c2", fit.c2},
                  {"r_squared", fit.r_squared_defined ? json(fit.r_squared) : json(nullptr)},
                  {"samples", fit.samples},
                  {"t_begin", w.t_begin},
                  {"t_end", w.t_end}};
      out.monitors.push_back(above("decay_rate_positive", fit.c2, 0.0));
      out.monitors.push_back(at_least_tol("decay_fit_r_squared",
                                          fit.r_squared_defined ? fit.r_squared : kNaN, 0.98));
    } catch (const std::invalid_argument& e) {
      out.monitors.push_back({"decay_fit", kNaN, 0.0, false, e.what()});
    }
  }

  const bool equilibrium =
      (c.init.kind == InitKind::maxwellian || c.init.kind == InitKind::shifted_maxwellian) &&
      c.mode == Mode::plain;
  if (equilibrium && !result.guard) {
    const double l1 = (state.f - f0).abs().sum() * grid.cell_volume();
    out.monitors.push_back(at_most("stationarity_L1", l1, 1e-10 * M));
  }

  out.extra["steps"] = result.steps;
  out.extra["final_t"] = state.t;
  out.extra["min_f"] = result.min_f;
  out.extra["min_rho_phi"] = result.min_rho_phi;
  out.extra["floor"] = floor;
  out.extra["backward_euler_columns"] = result.implicit_columns;
  out.extra["decay_fit"] = fit_json;
  if (result.guard) {
    out.error = json{{"error", "density degeneracy"},
                     {"where", result.guard->where},
                     {"time", result.guard->t},
                     {"min_rho_phi", result.guard->min_rho_phi},
                     {"location", result.guard->location},
                     {"floor", floor},
                     {"exit_code", static_cast<int>(kExitSolverError)}};
  }
  return out;
}

// --- particles -------------------------------------------------------------

void write_ensemble(const std::filesystem::path& path, const ParticleEnsemble& e) {
  std::vector<std::string> header{"id", "m", "x1"};
  if (e.dim == 2) header.push_back("x2");
  header.push_back("v1");
  if (e.dim == 2) header.push_back("v2");
  CsvWriter out(path, header);
  for (int p = 0; p < e.size(); ++p) {
    std::vector<std::string> row{std::to_string(e.id[p]), format_double(e.mass[p])};
    for (int d = 0; d < e.dim; ++d) row.push_back(format_double(e.x(p, d)));
    for (int d = 0; d < e.dim; ++d) row.push_back(format_double(e.v(p, d)));
    out.raw_row(row);
  }
}

Outcome run_particle_scenario(const ScenarioConfig& c, const std::filesystem::path& dir) {
  if (!c.particles) throw ConfigError("missing required key 'particles' for a particle run");
  const ParticlesConfig& pc = *c.particles;
  const bool locked = pc.init_kind == "locked_pair";

  ParticleModel model;
  model.kernel = c.kernel;
  model.sigma = c.sigma;
  model.deposition_nodes = pc.deposition_nodes;
  model.cucker_smale = pc.cucker_smale;
  if (c.diagnostics.floor) model.floor = *c.diagnostics.floor;
  ParticleRunOptions options;
  options.t_end = c.t_end;
  options.dt = c.dt;
  options.report_every = c.report_every;
  options.snapshot_every = c.snapshot_every;

  auto make = [&](std::uint64_t seed) {
    return locked ? locked_pair(c.length, pc.speed, pc.mass, seed)
                  : random_ensemble(pc.n_dim, pc.N, c.length, pc.mass, pc.u_mean, pc.spread,
                                    seed);
  };

  std::filesystem::create_directories(dir / "snapshots");
  const int K = pc.realizations;
  std::vector<std::vector<ParticleReport>> runs;
  double sum_m2 = 0.0;
  ParticleEnsemble first_final;
  for (int k = 0; k < K; ++k) {
    ParticleEnsemble ens = make(pc.seed + static_cast<std::uint64_t>(k));
    sum_m2 = ens.mass.squaredNorm();
    std::function<void(const ParticleEnsemble&)> sink;
    if (k == 0) {
      sink = [&](const ParticleEnsemble& e) {
        write_ensemble(dir / "snapshots" / snapshot_name("ensemble", static_cast<long>(e.step_index)), e);
      };
    }
    runs.push_back(run_particles(ens, model, options, sink));
    if (k == 0) first_final = ens;
  }
  write_ensemble(dir / "final_ensemble.csv", first_final);

  const int dim = first_final.dim;
  const std::size_t n_rep = runs.front().size();
  std::vector<std::string> header{"t"};
  for (int d = 0; d < dim; ++d) header.push_back("momentum" + std::to_string(d + 1));
  header.insert(header.end(), {"variance", "diameter"});
  std::vector<ParticleReport> mean(n_rep);
  {
    CsvWriter ts(dir / "timeseries.csv", header);
    for (std::size_t i = 0; i < n_rep; ++i) {
      ParticleReport& r = mean[i];
      r.t = runs.front()[i].t;
      r.momentum = Eigen::VectorXd::Zero(dim);
      for (const auto& run : runs) {
        r.momentum += run[i].momentum / K;
        r.variance += run[i].variance / K;
        r.diameter += run[i].diameter / K;
      }
      std::vector<double> row{r.t};
      for (int d = 0; d < dim; ++d) row.push_back(r.momentum[d]);
      row.push_back(r.variance);
      row.push_back(r.diameter);
      ts.row(row);
    }
  }

  Outcome out;
  const Eigen::VectorXd p0 = mean.front().momentum;
  if (c.sigma == 0.0) {
    double drift = 0.0;
    for (const auto& run : runs) {
      for (const ParticleReport& r : run) {
        drift = std::max(drift, (r.momentum - run.front().momentum).cwiseAbs().maxCoeff());
      }
    }
    out.monitors.push_back(at_most("momentum_conservation", drift, 1e-12 * std::max(1.0, pc.mass)));
  } else {
    double worst = 0.0;
    for (const ParticleReport& r : mean) {
      const double band = 4.0 * std::sqrt(2.0 * c.sigma * (r.t - mean.front().t) * sum_m2) /
                          std::sqrt(static_cast<double>(K));
      if (band > 0.0) worst = std::max(worst, (r.momentum - p0).cwiseAbs().maxCoeff() / band);
    }
    out.monitors.push_back(at_most("momentum_martingale_band_ratio", worst, 1.0));
  }

  const double var_ratio = mean.back().variance / mean.front().variance;
  const double diam_ratio = mean.back().diameter / mean.front().diameter;
  out.extra["variance_ratio"] = var_ratio;
  out.extra["diameter_ratio"] = diam_ratio;
  out.extra["realizations"] = K;
  if (locked) {
    const double min_dist = locked_pair_min_distance(c.length);
    const double reach = c.kernel.family == KernelFamily::global_uniform
                             ? std::numeric_limits<double>::infinity()
                             : 2.0 * c.kernel.r0;
    out.monitors.push_back(above("locked_geometry_separation", min_dist, reach));
    out.extra["locked_min_distance"] = min_dist;
    if (c.sigma == 0.0) {
      const bool persistent = diam_ratio >= 0.9;
      out.extra["persistent_misalignment"] = persistent;
      out.monitors.push_back(at_least_tol("persistent_misalignment", diam_ratio, 0.9));
    } else {
      out.extra["persistent_misalignment"] = diam_ratio >= 0.9;
      out.monitors.push_back(at_most("noise_breaks_lock_variance_ratio", var_ratio, 0.1));
    }
  }
  return out;
}

// --- macro -----------------------------------------------------------------

Outcome run_macro_scenario(const ScenarioConfig& c, const std::filesystem::path& dir) {
  if (!c.macro) throw ConfigError("missing required key 'macro' for a macro run");
  const TorusGrid grid = make_torus_grid(c.length, c.nx);
  const DiscreteKernel phi = build_kernel(c.kernel, grid);
  MacroState state = init_macro(c.macro->init, grid, c.mass);
  const double floor = c.diagnostics.floor.value_or(0.0);

  std::filesystem::create_directories(dir / "snapshots");
  auto write_state = [](const std::filesystem::path& path, const MacroState& s) {
    CsvWriter out(path, {"x", "rho", "m"});
    for (int i = 0; i < s.grid.nx; ++i) out.row({s.grid.center(i), s.rho[i], s.m[i]});
  };
  MacroRunOptions options{c.t_end, c.dt, c.report_every, c.snapshot_every, floor};
  const double t0 = state.t;
  Outcome out;
  std::vector<MacroReport> reps;
  try {
    reps = macro_run(state, phi, options, [&](const MacroState& s) {
      write_state(dir / "snapshots" / snapshot_name("macro", std::lround((s.t - t0) / c.dt)), s);
    });
  } catch (const DensityDegeneracy& e) {
    out.error = json{{"error", "density degeneracy"},
                     {"where", e.where()},
                     {"time", e.time()},
                     {"min_rho", e.min_value()},
                     {"location", e.location()},
                     {"exit_code", static_cast<int>(kExitSolverError)}};
    return out;
  }
  write_state(dir / "final_state.csv", state);
  {
    CsvWriter ts(dir / "timeseries.csv", MacroReport::columns());
    for (const MacroReport& r : reps) ts.row(r.values());
  }

  const double M = reps.front().mass;
  double mass_drift = 0.0;
  double mom_drift = 0.0;
  double umax = 0.0;
  double hierarchy = std::numeric_limits<double>::infinity();
  double a_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const MacroReport& r = reps[k];
    mass_drift = std::max(mass_drift, std::abs(r.mass - M) / M);
    mom_drift = std::max(mom_drift, std::abs(r.momentum - reps.front().momentum));
    umax = std::max(umax, r.max_abs_u);
    hierarchy = std::min({hierarchy, r.Ecal - r.Ephi, r.Ephi - r.Ephiphi, r.Ephiphi});
    if (k > 0) a_increase = std::max(a_increase, r.A - reps[k - 1].A);
  }
  out.monitors.push_back(at_most("mass_conservation", mass_drift, 1e-12));
  out.monitors.push_back(at_most("momentum_conservation", mom_drift, 1e-10 * M * umax));
  out.monitors.push_back(at_least_tol("energy_hierarchy", hierarchy, -1e-12));
  if (c.kernel.family == KernelFamily::global_uniform && reps.size() > 1) {
    out.monitors.push_back(at_most("alignment_monotone", a_increase, 1e-10));
  }
  out.extra["final_t"] = state.t;
  out.extra["min_rho"] = state.rho.minCoeff();
  return out;
}

// --- hydro sweep -----------------------------------------------------------

Outcome run_hydro_scenario(const ScenarioConfig& c, const std::vector<double>& eps,
                           const std::filesystem::path& dir) {
  if (!c.macro) throw ConfigError("missing required key 'macro' for a hydro sweep");
  const HydroConfig h = c.hydro.value_or(HydroConfig{});
  HydroSweepOptions o;
  o.length = c.length;
  o.nx = c.nx;
  o.nv = h.nv;
  o.vmax = h.vmax.value_or(0.0);
  o.dt = c.dt;
  o.t_star = h.t_star;
  o.report_every = c.report_every;
  o.mass = c.mass;
  o.kernel = c.kernel;
  o.init = c.macro->init;
  o.transport = c.transport;
  const HydroSweepResult sweep = hydro_sweep(o, eps);

  {
    CsvWriter table(dir / "sweep.csv",
                    {"epsilon", "H_rel", "rho_L1", "momentum_L1", "reynolds_L1",
                     "max_decomposition_rel", "max_entropy_rate"});
    for (const HydroSweepRow& r : sweep.rows) {
      table.row({r.epsilon, r.final.H_rel, r.final.rho_L1, r.final.momentum_L1,
                 r.final.reynolds_L1, r.max_decomposition_rel, r.max_entropy_rate});
    }
  }
  {
    std::vector<std::string> header{"epsilon"};
    for (const std::string& col : HydroReport::columns()) header.push_back(col);
    CsvWriter ts(dir / "timeseries.csv", header);
    for (const HydroSweepRow& r : sweep.rows) {
      for (const HydroReport& rep : r.series) {
        std::vector<double> row{r.epsilon};
        const auto v = rep.values();
        row.insert(row.end(), v.begin(), v.end());
        ts.row(row);
      }
    }
  }

  Outcome out;
  if (sweep.rows.size() > 1) {
    const char* names[4] = {"H_rel", "rho_L1", "momentum_L1", "reynolds_L1"};
    for (int k = 0; k < 4; ++k) {
      out.monitors.push_back({std::string("decreasing_in_epsilon_") + names[k],
                              sweep.decreasing[k] ? 1.0 : 0.0, 1.0, sweep.decreasing[k],
                              "strictly decreasing as epsilon decreases"});
    }
  }
  double decomposition = 0.0;
  double rate = -std::numeric_limits<double>::infinity();
  double h0 = 0.0;
  for (const HydroSweepRow& r : sweep.rows) {
    decomposition = std::max(decomposition, r.max_decomposition_rel);
    rate = std::max(rate, r.max_entropy_rate);
    h0 = std::max(h0, r.series.front().H_rel);
  }
  out.monitors.push_back(at_most("decomposition_identity", decomposition, 1e-10));
  out.monitors.push_back(at_most("entropy_rate_bound", rate, sweep.entropy_rate_bound + 1e-6));
  out.monitors.push_back(at_most("initial_relative_entropy", h0, 1e-8));
  out.extra["epsilons"] = eps;
  out.extra["t_star"] = h.t_star;
  return out;
}

// --- diagnose --------------------------------------------------------------

Outcome run_diagnose(const ScenarioConfig& c, const std::filesystem::path& snapshot,
                     const std::filesystem::path& dir, std::ostream& log) {
  if (!(c.sigma > 0.0)) throw ConfigError("sigma must be positive for diagnose");
  const PhaseSnapshot snap = read_phase_snapshot(snapshot, c.length);
  const DiscreteKernel phi = build_kernel(c.kernel, snap.grid.x);
  const double M = integrate(snap.f, snap.grid, Domain::xv);
  const Moments mom = moments(snap.f, snap.grid, 0.0);
  ReportOptions options;
  options.sigma = c.sigma;
  options.mass = M;
  options.u_bar = mom.m.sum() * snap.grid.x.dx() / M;
  options.margin_radius = c.diagnostics.margin_radius.value_or(0.0);
  options.floor = c.diagnostics.floor.value_or(0.0);
  const EntropyReport r = report(snap.f, snap.grid, phi, options);
  {
    CsvWriter out(dir / "report.csv", EntropyReport::columns());
    out.row(r.values());
  }
  const auto& cols = EntropyReport::columns();
  const auto vals = r.values();
  for (std::size_t k = 0; k < cols.size(); ++k) log << (k ? "," : "") << cols[k];
  log << "\n";
  for (std::size_t k = 0; k < vals.size(); ++k) log << (k ? "," : "") << format_double(vals[k]);
  log << "\n";

  Outcome out;
  out.monitors.push_back(at_least_tol("energy_hierarchy", r.hierarchy_slack(), -1e-12));
  out.monitors.push_back(at_least_tol("pinsker", r.pinsker_slack, -1e-10));
  out.extra["snapshot"] = snapshot.string();
  out.extra["nx"] = snap.grid.x.nx;
  out.extra["nv"] = snap.grid.v.nv;
  out.extra["vmax"] = snap.grid.v.vmax;
  return out;
}

}  // namespace

int run_command(Command command, const ScenarioConfig& config, const CommandOptions& options,
                std::ostream& log) {
  const std::filesystem::path dir =
      options.out_dir.empty() ? std::filesystem::path(config.output_dir) : options.out_dir;
  Outcome outcome;
  try {
    std::filesystem::create_directories(dir);
    write_text(dir / "effective_config.json", to_json(config).dump(2) + "\n");
    switch (command) {
      case Command::kinetic: outcome = run_kinetic(config, dir); break;
      case Command::particles: outcome = run_particle_scenario(config, dir); break;
      case Command::macro: outcome = run_macro_scenario(config, dir); break;
      case Command::hydro_sweep: {
        std::vector<double> eps = options.epsilons.value_or(
            config.hydro ? config.hydro->epsilons : HydroConfig{}.epsilons);
        outcome = run_hydro_scenario(config, eps, dir);
        break;
      }
      case Command::diagnose:
        if (!options.snapshot) throw ConfigError("diagnose requires a snapshot path");
        outcome = run_diagnose(config, *options.snapshot, dir, log);
        break;
    }
  } catch (const ConfigError& e) {
    outcome = {};
    outcome.error = json{{"error", "configuration error"},
                         {"message", e.what()},
                         {"exit_code", static_cast<int>(kExitConfigError)}};
  } catch (const ShapeError& e) {
    outcome = {};
    outcome.error = json{{"error", "configuration error"},
                         {"message", e.what()},
                         {"exit_code", static_cast<int>(kExitConfigError)}};
  } catch (const DensityDegeneracy& e) {
    outcome = {};
    outcome.error = json{{"error", "density degeneracy"},
                         {"where", e.where()},
                         {"time", e.time()},
                         {"min_rho_phi", e.min_value()},
                         {"location", e.location()},
                         {"exit_code", static_cast<int>(kExitSolverError)}};
  } catch (const std::exception& e) {
    outcome = {};
    outcome.error = json{{"error", "solver error"},
                         {"message", e.what()},
                         {"exit_code", static_cast<int>(kExitSolverError)}};
  }

  if (outcome.error) {
    const json& err = *outcome.error;
    std::cerr << "error: " << err.value("error", std::string("unknown"));
    if (err.contains("time")) std::cerr << " at t = " << format_double(err["time"].get<double>());
    if (err.contains("min_rho_phi")) {
      std::cerr << ", min rho_phi = " << format_double(err["min_rho_phi"].get<double>());
    }
    if (err.contains("message")) std::cerr << ": " << err["message"].get<std::string>();
    std::cerr << "\n";
  }
  try {
    std::filesystem::create_directories(dir);
    return finish(dir, command, outcome, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return outcome.error ? outcome.error->value("exit_code", 3) : kExitSolverError;
  }
}

}  // namespace fpa

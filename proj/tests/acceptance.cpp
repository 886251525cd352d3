// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Shipped scenarios are run through the same entry point as the
// CLI; their CSV output is then re-read and checked here.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fpa/diagnostics.hpp"
#include "fpa/kinetic.hpp"
#include "fpa/particles.hpp"
#include "fpa/scenario.hpp"
#include "generators.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fpa;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const fs::path kOut = fs::current_path() / "acceptance_out";

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::vector<double> col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("no column " + name);
    const std::size_t k = it - header.begin();
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    t.rows.push_back(row);
  }
  return t;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

struct Run {
  ScenarioConfig config;
  fs::path dir;
  int exit_code = -1;
  json summary;
};

Run run_scenario(const std::string& name, Command cmd) {
  Run r;
  r.config = load_config(fs::path(FPA_SCENARIO_DIR) / (name + ".json"));
  r.dir = kOut / name;
  fs::remove_all(r.dir);
  CommandOptions o;
  o.out_dir = r.dir;
  std::ostringstream log;
  std::cerr << "  running " << name << "\n";
  r.exit_code = run_command(cmd, r.config, o, log);
  r.summary = read_json(r.dir / "summary.json");
  return r;
}

Run run_config(const std::string& name, const ScenarioConfig& c) {
  Run r;
  r.config = c;
  r.dir = kOut / name;
  fs::remove_all(r.dir);
  CommandOptions o;
  o.out_dir = r.dir;
  std::ostringstream log;
  std::cerr << "  running " << name << "\n";
  r.exit_code = run_command(Command::kinetic, c, o, log);
  r.summary = read_json(r.dir / "summary.json");
  return r;
}

ScenarioConfig with_grid(const std::string& name, int nx, int nv, double dt, double sigma = 0.0) {
  json doc = to_json(load_config(fs::path(FPA_SCENARIO_DIR) / (name + ".json")));
  doc["domain"]["nx"] = nx;
  doc["velocity"]["nv"] = nv;
  doc["dt"] = dt;
  if (sigma > 0.0) {
    doc["sigma"] = sigma;
    doc["velocity"].erase("vmax");
  }
  return parse_config(doc);
}

int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s: %s | %s\n", id, pass ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double min_logsob(const Table& t) {
  const auto H = t.col("H");
  const auto L = t.col("logsob_ratio");
  double m = kInf;
  for (std::size_t k = 0; k < H.size(); ++k) {
    if (H[k] > 1e-10) m = std::min(m, L[k]);
  }
  return m;
}

DecayFit relaxation_fit(const Table& t) {
  return fit_decay_rate(t.col("t"), t.col("L1_to_maxwellian"), 1.0, 5.0);
}

// max |dH/dt + Ivv_filt + A| over report intervals, trapezoidal in the
// dissipation.
double entropy_law_residual(KernelFamily family, int n, double dt) {
  const double pi = std::numbers::pi;
  const PhaseGrid g = make_grids(2.0 * pi, n, 8.0, n);
  const DiscreteKernel phi = build_kernel({family, 1.0}, g.x);
  InitAnsatz a;
  a.kind = InitKind::modulated;
  a.amplitude = 0.3;
  KineticState s = init_state(a, g, 1.0, 2.0 * pi);
  RunOptions o;
  o.t_end = 0.4;
  o.dt = dt;
  o.report_every = 2.0 * dt;
  const RunResult r = run(s, phi, o);
  double worst = 0.0;
  for (std::size_t k = 1; k < r.reports.size(); ++k) {
    const EntropyReport& p = r.reports[k - 1];
    const EntropyReport& q = r.reports[k];
    const double res = (q.H - p.H) / (q.t - p.t) +
                       0.5 * (p.Ivv_filt + p.A_direct + q.Ivv_filt + q.A_direct);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

bool monitor_pass(const json& summary, const std::string& name) {
  for (const json& m : summary["monitors"]) {
    if (m["name"] == name) return m["pass"].get<bool>();
  }
  return false;
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  const double pi = std::numbers::pi;

  std::cerr << "shipped scenarios\n";
  std::map<std::string, Run> kinetic;
  for (const char* name : {"equilibrium", "relaxation_global", "flocking_state", "penalized"}) {
    kinetic[name] = run_scenario(name, Command::kinetic);
  }
  const Run guard = run_scenario("guard_trigger", Command::kinetic);
  const Run locked = run_scenario("locked_state", Command::particles);
  const Run locked_noisy = run_scenario("locked_state_noisy", Command::particles);
  const Run p1d = run_scenario("particles_1d", Command::particles);
  const Run p1d_noisy = run_scenario("particles_1d_noisy", Command::particles);
  const Run macro = run_scenario("macro_smooth", Command::macro);
  const Run hydro = run_scenario("hydro_sweep", Command::hydro_sweep);

  std::cerr << "sweeps and refinements\n";
  kinetic["relaxation_sigma_0.25"] =
      run_config("relaxation_sigma_0.25", with_grid("relaxation_global", 128, 128, 1e-3, 0.25));
  kinetic["relaxation_sigma_0.5"] =
      run_config("relaxation_sigma_0.5", with_grid("relaxation_global", 128, 128, 1e-3, 0.5));
  const Run relax_half = run_config("relaxation_half", with_grid("relaxation_global", 64, 64, 2e-3));
  const Run flock_half = run_config("flocking_half", with_grid("flocking_state", 64, 64, 2e-3));

  std::map<std::string, Table> ts;
  for (const auto& [name, r] : kinetic) ts[name] = read_csv(r.dir / "timeseries.csv");

  // 1
  {
    const Run& r = kinetic["equilibrium"];
    const Table fin = read_csv(r.dir / "final_state.csv");
    const PhaseGrid g = make_grids(r.config.length, r.config.nx, r.config.vmax, r.config.nv);
    const Field h = discrete_equilibrium(g.v, r.config.sigma, 0.0, r.config.mass / r.config.length);
    const auto f = fin.col("f");
    double l1 = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.nv(); ++j) l1 += std::abs(f[i * g.nv() + j] - h[j]);
    }
    l1 *= g.cell_volume();
    verdict(1, "equilibrium stationarity", r.exit_code == 0 && l1 <= 1e-10 * r.config.mass,
            "||f(1) - f(0)||_1 = " + fmt(l1) + " <= " + fmt(1e-10 * r.config.mass));
  }

  // 2
  {
    const DecayFit fit = relaxation_fit(ts["relaxation_global"]);
    verdict(2, "exponential relaxation", fit.r_squared_defined && fit.r_squared >= 0.98 && fit.c2 > 0.0,
            "c2 = " + fmt(fit.c2) + ", R^2 = " + fmt(fit.r_squared) + " over t in [1, 5]");
  }

  // 3
  {
    const std::vector<std::pair<double, std::string>> sweep = {
        {0.25, "relaxation_sigma_0.25"}, {0.5, "relaxation_sigma_0.5"}, {1.0, "relaxation_global"}};
    bool pos = true;
    double lo = kInf, hi = 0.0;
    std::string detail;
    for (const auto& [sigma, name] : sweep) {
      const DecayFit fit = relaxation_fit(ts[name]);
      pos = pos && fit.c2 > 0.0;
      lo = std::min(lo, fit.c2 / std::sqrt(sigma));
      hi = std::max(hi, fit.c2 / std::sqrt(sigma));
      detail += "c2(" + fmt(sigma) + ") = " + fmt(fit.c2) + "; ";
    }
    verdict(3, "sigma scaling", pos && hi < 5.0 * lo,
            detail + "c2/sqrt(sigma) spread factor " + fmt(hi / lo) + " < 5");
  }

  // 4
  {
    bool pass = true;
    std::string detail;
    for (KernelFamily fam : {KernelFamily::global_uniform, KernelFamily::bump}) {
      std::cerr << "  entropy law refinement (" << to_string(fam) << ")\n";
      std::vector<double> res;
      for (int lvl = 0; lvl < 3; ++lvl) {
        res.push_back(entropy_law_residual(fam, 32 << lvl, 0.008 / (1 << lvl)));
      }
      detail += to_string(fam) + ": " + fmt(res[0]) + ", " + fmt(res[1]) + ", " + fmt(res[2]) + "; ";
      for (int k = 1; k < 3; ++k) pass = pass && res[k] * 2.0 <= res[k - 1];
    }
    verdict(4, "entropy law residual refinement", pass, detail + "each halving >= 2x");
  }

  // 5
  {
    double worst = kInf;
    for (const auto& [name, t] : ts) {
      const auto E = t.col("E"), Ec = t.col("Ecal"), Ep = t.col("Ephi"), Epp = t.col("Ephiphi");
      for (std::size_t k = 0; k < E.size(); ++k) {
        worst = std::min({worst, E[k] - Ec[k], Ec[k] - Ep[k], Ep[k] - Epp[k], Epp[k]});
      }
    }
    const Table m = read_csv(macro.dir / "timeseries.csv");
    const auto Ec = m.col("Ecal"), Ep = m.col("Ephi"), Epp = m.col("Ephiphi");
    for (std::size_t k = 0; k < Ec.size(); ++k) {
      worst = std::min({worst, Ec[k] - Ep[k], Ep[k] - Epp[k], Epp[k]});
    }
    verdict(5, "energy hierarchy", worst >= -1e-12,
            "min slack over every report of every shipped scenario = " + fmt(worst));
  }

  // 6 and 7: random smooth states, then every reported kinetic time.
  {
    gen::Gen gg(2024);
    double a_rand = 0.0, f_rand = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const double sigma = gg.uniform(0.25, 1.5);
      const PhaseGrid g =
          make_grids(gg.uniform(1.0, 7.0), 32, 2.0 + 8.0 * std::sqrt(1.4 * sigma), 48);
      const auto fam = static_cast<KernelFamily>(gg.integer(1, 2));
      const DiscreteKernel phi = build_kernel({fam, gg.uniform(0.2, 0.5) * g.x.length}, g.x);
      const PhaseField f = gg.phase(g, 1.0, 0.5, sigma * gg.uniform(0.6, 1.4));
      ReportOptions o;
      o.sigma = sigma;
      o.mass = integrate(f, g, Domain::xv);
      const EntropyReport r = report(f, g, phi, o);
      a_rand = std::max(a_rand, std::abs(r.A_direct - r.A_double) / std::max(r.A_direct, 1e-30));
      f_rand = std::max(f_rand, std::abs(r.fisher_identity_residual) / (std::abs(r.Ivv0) + std::abs(r.Ephi) + 1.0));
    }
    double a_run = 0.0, f_run = 0.0;
    for (const auto& [name, t] : ts) {
      const auto Ad = t.col("A_direct"), Ab = t.col("A_double"), Ep = t.col("Ephi");
      const auto res = t.col("fisher_identity_residual"), I0 = t.col("Ivv0");
      for (std::size_t k = 0; k < Ad.size(); ++k) {
        const double scale = std::max({std::abs(Ad[k]), std::abs(Ab[k]), std::abs(Ep[k])});
        if (scale > 0.0) a_run = std::max(a_run, std::abs(Ad[k] - Ab[k]) / scale);
        f_run = std::max(f_run, std::abs(res[k]) / (std::abs(I0[k]) + std::abs(Ep[k]) + 1.0));
      }
    }
    verdict(6, "alignment functional identity", a_rand <= 1e-10 && a_run <= 1e-10,
            "random states " + fmt(a_rand) + ", kinetic runs " + fmt(a_run) + " <= 1e-10");
    verdict(7, "Fisher identity", f_rand <= 1e-8 && f_run <= 1e-8,
            "random states " + fmt(f_rand) + ", kinetic runs " + fmt(f_run) + " <= 1e-8");
  }

  // 8
  {
    double pinsker = kInf;
    bool logsob_pos = true;
    for (const auto& [name, t] : ts) {
      const auto P = t.col("pinsker_slack"), H = t.col("H"), L = t.col("logsob_ratio");
      for (std::size_t k = 0; k < P.size(); ++k) {
        pinsker = std::min(pinsker, P[k]);
        if (H[k] > 1e-10) logsob_pos = logsob_pos && L[k] > 0.0;
      }
    }
    const double r1 = min_logsob(ts["relaxation_global"]);
    const double r2 = min_logsob(read_csv(relax_half.dir / "timeseries.csv"));
    const double q1 = min_logsob(ts["flocking_state"]);
    const double q2 = min_logsob(read_csv(flock_half.dir / "timeseries.csv"));
    const bool stable = std::abs(r2 / r1 - 1.0) <= 0.2 && std::abs(q2 / q1 - 1.0) <= 0.2;
    verdict(8, "Pinsker and log-Sobolev monitors", pinsker >= -1e-10 && logsob_pos && stable,
            "min pinsker slack " + fmt(pinsker) + ", logsob min relaxation " + fmt(r1) + " vs " +
                fmt(r2) + ", flocking " + fmt(q1) + " vs " + fmt(q2) + " (halved grid)");
  }

  // 9
  {
    bool pass = true;
    std::string detail;
    std::vector<double> per_sigma;
    for (double sigma : {0.25, 1.0}) {
      const PhaseGrid g = make_grids(2.0 * pi, 128, 8.0 * std::sqrt(sigma) + 1.0, 128);
      const double M = 2.0 * pi;
      const Field rho0 = 1.0 + 0.2 * (g.x.centers() * (2.0 * pi / g.x.length)).cos();
      const Field mu = discrete_equilibrium(g.v, sigma, 0.0, 1.0);
      const PhaseField f0 = rho0.matrix() * mu.matrix().transpose();
      const double k = 2.0 * pi / g.x.length;
      const double exact = sigma * k * k * g.x.length * (1.0 - std::sqrt(1.0 - 0.04));
      const IsmallResult r = ismall_check(f0, g, sigma, M);
      const double rel = std::abs(r.fisher - exact) / exact;
      pass = pass && rel <= 1e-6;
      per_sigma.push_back(r.fisher / sigma);
      detail += "sigma " + fmt(sigma) + ": rel err " + fmt(rel) + "; ";
    }
    const double spread = std::abs(per_sigma[0] / per_sigma[1] - 1.0);
    pass = pass && spread <= 1e-6;
    verdict(9, "flocking-state Fisher check", pass, detail + "I/sigma spread " + fmt(spread));
  }

  // 10
  {
    const Table d = read_csv(p1d.dir / "timeseries.csv");
    const auto P = d.col("momentum1");
    double drift = 0.0;
    for (double p : P) drift = std::max(drift, std::abs(p - P.front()));
    const double tol = 1e-12 * std::max(1.0, p1d.config.particles->mass);
    const Table n = read_csv(p1d_noisy.dir / "timeseries.csv");
    const auto& pc = *p1d_noisy.config.particles;
    const double K = pc.realizations;
    const double sum_m2 = pc.mass * pc.mass / pc.N;
    const auto t = n.col("t"), Q = n.col("momentum1");
    double worst = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
      const double band = 4.0 * std::sqrt(2.0 * p1d_noisy.config.sigma * t[k] * sum_m2) / std::sqrt(K);
      worst = std::max(worst, std::abs(Q[k] - Q.front()) / band);
    }
    verdict(10, "particle momentum",
            drift <= tol && d.col("t").back() >= 50.0 && K >= 64 && worst <= 1.0,
            "sigma = 0 drift " + fmt(drift) + " over t <= " + fmt(d.col("t").back()) +
                "; noisy seed-mean / band max " + fmt(worst) + " over " + fmt(K) + " seeds");
  }

  // 11
  {
    const Table a = read_csv(locked.dir / "timeseries.csv");
    const auto D = a.col("diameter");
    const double keep = D.back() / D.front();
    const Table b = read_csv(locked_noisy.dir / "timeseries.csv");
    const auto V = b.col("variance");
    const double drop = V.back() / V.front();
    const double gap = locked_pair_min_distance(locked.config.length);
    verdict(11, "locked state",
            keep >= 0.9 && drop <= 0.1 && a.col("t").back() >= 50.0 && b.col("t").back() >= 200.0 &&
                locked_noisy.config.particles->realizations >= 16 &&
                gap > 2.0 * locked.config.kernel.r0,
            "sigma = 0 disagreement ratio " + fmt(keep) + " at t = " + fmt(a.col("t").back()) +
                "; sigma = " + fmt(locked_noisy.config.sigma) + " variance ratio " + fmt(drop) +
                " at t = " + fmt(b.col("t").back()) + "; min distance " + fmt(gap));
  }

  // 12
  {
    const Table s = read_csv(hydro.dir / "sweep.csv");
    bool decreasing = s.rows.size() == 3;
    for (const char* col : {"H_rel", "rho_L1", "momentum_L1", "reynolds_L1"}) {
      const auto c = s.col(col);
      for (std::size_t k = 1; k < c.size(); ++k) decreasing = decreasing && c[k] < c[k - 1];
    }
    const Table t = read_csv(hydro.dir / "timeseries.csv");
    const auto res = t.col("decomposition_residual"), H = t.col("H_rel"), tt = t.col("t");
    double decomposition = 0.0, h0 = 0.0;
    for (std::size_t k = 0; k < res.size(); ++k) {
      decomposition = std::max(decomposition, res[k] / (1.0 + std::abs(H[k])));
      if (tt[k] == 0.0) h0 = std::max(h0, H[k]);
    }
    double rate = -kInf;
    for (double r : s.col("max_entropy_rate")) rate = std::max(rate, r);
    const double bound = hydro.config.mass + 1e-6;
    verdict(12, "hydrodynamic limit",
            decreasing && decomposition <= 1e-10 && rate <= bound && h0 <= 1e-8,
            "four columns strictly decreasing: " + std::string(decreasing ? "yes" : "no") +
                "; decomposition " + fmt(decomposition) + "; max dH/dt " + fmt(rate) + " <= " +
                fmt(bound) + "; H(0) " + fmt(h0));
  }

  // 13
  {
    const json& err = guard.summary["error"];
    const bool named = err.is_object() && err.value("error", "") == "density degeneracy" &&
                       err.contains("time") && err.contains("min_rho_phi");
    bool healthy = true;
    for (const auto& [name, r] : kinetic) {
      healthy = healthy && r.exit_code == 0 && monitor_pass(r.summary, "continuation_guard");
    }
    healthy = healthy && relax_half.exit_code == 0 && flock_half.exit_code == 0 &&
              macro.exit_code == 0 && hydro.exit_code == 0;
    verdict(13, "continuation guard", guard.exit_code == 3 && named && healthy,
            "guard scenario exit " + std::to_string(guard.exit_code) + " at t = " +
                (named ? fmt(err["time"].get<double>()) : std::string("?")) +
                "; healthy kinetic runs above floor at every step: " + (healthy ? "yes" : "no"));
  }

  std::printf("acceptance: %d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "fpa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fpa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kVelocityStencil = 7;

// Cells with f below this and negligible stencil numerators are 0 * (0/0)
// in the continuum and are skipped.
double fisher_skip_threshold(const PhaseField& f, const PhaseGrid& grid) {
  const double mass = integrate(f, grid, Domain::xv);
  return 1e-30 * std::abs(mass) / (grid.x.length * grid.v.vmax);
}

double x_log_ratio(double a, double b) {
  if (a <= 0.0) return 0.0;
  if (b <= 0.0) return std::numeric_limits<double>::infinity();
  return a * std::log(a / b);
}

}  // namespace

Eigen::MatrixXd spectral_derivative_matrix(int n, double period) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double h = 2.0 * std::numbers::pi / n;
  const double scale = 2.0 * std::numbers::pi / period;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      if (i == k) continue;
      const int s = i - k;
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      const double half_angle = 0.5 * s * h;
      const double entry = (n % 2 == 0) ? 0.5 * sign / std::tan(half_angle)
                                        : 0.5 * sign / std::sin(half_angle);
      D(i, k) = scale * entry;
    }
  }
  return D;
}

Eigen::MatrixXd finite_difference_matrix(int n, double h, int width) {
  if (width < 2 || width > n) throw std::invalid_argument("finite difference: bad stencil width");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const int half = width / 2;
  Eigen::VectorXd nodes(width);
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - half, 0, n - width);
    for (int k = 0; k < width; ++k) nodes[k] = (start + k - i) * h;
    // Fornberg's recursion for first-derivative weights at 0.
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(width, 2);
    c(0, 0) = 1.0;
    double c1 = 1.0;
    for (int a = 1; a < width; ++a) {
      double c2 = 1.0;
      for (int b = 0; b < a; ++b) {
        const double c3 = nodes[a] - nodes[b];
        c2 *= c3;
        if (b == a - 1) {
          c(a, 1) = c1 * (c(a - 1, 0) - nodes[a - 1] * c(a - 1, 1)) / c2;
          c(a, 0) = -c1 * nodes[a - 1] * c(a - 1, 0) / c2;
        }
        c(b, 1) = (nodes[a] * c(b, 1) - c(b, 0)) / c3;
        c(b, 0) = nodes[a] * c(b, 0) / c3;
      }
      c1 = c2;
    }
    for (int k = 0; k < width; ++k) D(i, start + k) = c(k, 1);
  }
  return D;
}

// Where a line of samples is strictly positive the derivative is taken as
// f d(log f), which keeps the relative accuracy of the stencil in Gaussian
// tails; otherwise f is differentiated directly.
PhaseField derivative_x(const PhaseField& f, const PhaseGrid& grid) {
  const Eigen::MatrixXd D = spectral_derivative_matrix(grid.nx(), grid.x.length);
  PhaseField out(f.rows(), f.cols());
  Eigen::VectorXd line(f.rows());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    line = f.col(j).matrix();
    if (line.minCoeff() > 0.0) {
      out.col(j) = line.array() * (D * line.array().log().matrix()).array();
    } else {
      out.col(j) = (D * line).array();
    }
  }
  return out;
}

PhaseField derivative_v(const PhaseField& f, const PhaseGrid& grid) {
  const Eigen::MatrixXd D =
      finite_difference_matrix(grid.nv(), grid.v.dv(), kVelocityStencil);
  PhaseField out(f.rows(), f.cols());
  Eigen::VectorXd line(f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    line = f.row(i).transpose().matrix();
    if (line.minCoeff() > 0.0) {
      out.row(i) = (line.array() * (D * line.array().log().matrix()).array()).transpose();
    } else {
      out.row(i) = (D * line).array().transpose();
    }
  }
  return out;
}

Moments moments(const PhaseField& f, const PhaseGrid& grid, double floor) {
  if (f.rows() != grid.nx() || f.cols() != grid.nv()) {
    throw ShapeError("moments: phase field shape mismatch");
  }
  const double dv = grid.v.dv();
  const double dx = grid.x.dx();
  const Field v = grid.v.centers();
  Moments out;
  out.rho = f.rowwise().sum() * dv;
  out.m = (f.matrix() * v.matrix()).array() * dv;
  out.E = (f.matrix() * v.square().matrix()).sum() * dv * dx;
  out.Ecal = (out.m.square() / out.rho.max(floor)).sum() * dx;
  return out;
}

PhaseField maxwellian_grid(const PhaseGrid& grid, double sigma, double u_bar,
                           double mass) {
  if (!(sigma > 0.0)) throw ConfigError("maxwellian: sigma must be positive");
  if (std::abs(u_bar) + 6.0 * std::sqrt(sigma) > grid.v.vmax) {
    throw ConfigError("maxwellian: |u| + 6 sqrt(sigma) exceeds vmax");
  }
  const Field v = grid.v.centers();
  Field g = (-(v - u_bar).square() / (2.0 * sigma)).exp();
  const double total = g.sum() * grid.v.dv() * (grid.nx() * grid.x.dx());
  g *= mass / total;
  PhaseField mu(grid.nx(), grid.nv());
  mu.rowwise() = g.transpose();
  return mu;
}

PhaseField local_maxwellian(const PhaseGrid& grid, const Field& rho, const Field& u,
                            double temperature) {
  if (rho.size() != grid.nx() || u.size() != grid.nx()) {
    throw ShapeError("local_maxwellian: grid mismatch");
  }
  const Field v = grid.v.centers();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * temperature);
  PhaseField mu(grid.nx(), grid.nv());
  for (int i = 0; i < grid.nx(); ++i) {
    mu.row(i) =
        (rho[i] * norm) * (-(v - u[i]).square() / (2.0 * temperature)).exp().transpose();
  }
  return mu;
}

double relative_entropy(const PhaseField& f, const PhaseField& mu, const PhaseGrid& grid,
                        double sigma) {
  if (f.rows() != mu.rows() || f.cols() != mu.cols()) {
    throw ShapeError("relative_entropy: shape mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) acc += x_log_ratio(f(i, j), mu(i, j));
  }
  return sigma * acc * grid.cell_volume();
}

double fisher_vv(const PhaseField& f, const PhaseGrid& grid, const Field& u_center,
                 double sigma) {
  if (u_center.size() != grid.nx()) throw ShapeError("fisher_vv: grid mismatch");
  const PhaseField dvf = derivative_v(f, grid);
  const Field v = grid.v.centers();
  const double thr = fisher_skip_threshold(f, grid);
  double acc = 0.0;
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      const double fij = f(i, j);
      const double a = sigma * dvf(i, j) + (v[j] - u_center[i]) * fij;
      if (fij < thr && std::abs(a) < thr) continue;
      acc += a * a / fij;
    }
  }
  return acc * grid.cell_volume();
}

double fisher_vv(const PhaseField& f, const PhaseGrid& grid, double u_center,
                 double sigma) {
  return fisher_vv(f, grid, Field::Constant(grid.nx(), u_center), sigma);
}

FisherCross fisher_cross(const PhaseField& f, const PhaseGrid& grid, double sigma,
                         double u_center) {
  const PhaseField dxf = derivative_x(f, grid);
  const PhaseField dvf = derivative_v(f, grid);
  const Field v = grid.v.centers();
  const double thr = fisher_skip_threshold(f, grid);
  const double root_sigma = std::sqrt(sigma);
  FisherCross out;
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      const double fij = f(i, j);
      const double a = sigma * dvf(i, j) + (v[j] - u_center) * fij;
      const double b = root_sigma * dxf(i, j);
      if (fij < thr && std::max(std::abs(a), std::abs(b)) < thr) continue;
      out.xv += a * b / fij;
      out.xx += b * b / fij;
    }
  }
  out.xv *= grid.cell_volume();
  out.xx *= grid.cell_volume();
  return out;
}

MacroEnergies macro_energies(const Field& rho, const Field& m, const DiscreteKernel& phi,
                             double floor) {
  const double dx = phi.grid.dx();
  const Filtration filt = filtrate(rho, m, phi, floor);
  MacroEnergies out;
  out.Ecal = (m.square() / rho.max(floor)).sum() * dx;
  out.Ephi = (filt.m_phi.square() / filt.rho_phi).sum() * dx;
  out.Ephiphi = (rho * filt.u_mollified.square()).sum() * dx;
  return out;
}

Energies energies(const PhaseField& f, const PhaseGrid& grid, const DiscreteKernel& phi,
                  double floor) {
  const Moments mom = moments(f, grid, floor);
  const MacroEnergies macro = macro_energies(mom.rho, mom.m, phi, floor);
  return Energies{mom.E, macro.Ecal, macro.Ephi, macro.Ephiphi};
}

AlignmentFunctional alignment_functional(const Field& rho, const Field& m,
                                         const DiscreteKernel& phi, double floor) {
  const int n = phi.grid.nx;
  const double dx = phi.grid.dx();
  const double u_mean = m.sum() / rho.sum();
  const Field m_rel = m - u_mean * rho;
  const Filtration filt = filtrate(rho, m_rel, phi, floor);

  AlignmentFunctional out;
  out.direct = (filt.rho_phi * filt.u_favre.square()).sum() * dx -
               (rho * filt.u_mollified.square()).sum() * dx;

  // rho_phiphi(x_i, x_k) = sum_xi phi(xi - x_i) phi(xi - x_k) rho(xi) dx
  Eigen::MatrixXd Phi(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) Phi(a, b) = phi[a - b];
  }
  const Eigen::MatrixXd rho_phiphi =
      Phi.transpose() * rho.matrix().asDiagonal() * Phi * dx;
  const Field& w = filt.u_favre;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double d = w[i] - w[k];
      acc += rho_phiphi(i, k) * d * d;
    }
  }
  out.dbl = 0.5 * acc * dx * dx;
  return out;
}

double EntropyReport::hierarchy_slack() const {
  return std::min({E - Ecal, Ecal - Ephi, Ephi - Ephiphi, Ephiphi});
}

const std::vector<std::string>& EntropyReport::columns() {
  static const std::vector<std::string> names = {
      "t",      "mass",    "momentum", "E",        "Ecal",
      "Ephi",   "Ephiphi", "A_direct", "A_double", "H",
      "Ivv0",   "Ivv_filt", "Ixv",     "Ixx",      "Itilde",
      "fisher_identity_residual", "pinsker_slack", "logsob_ratio",
      "L1_to_maxwellian", "min_rho_phi", "density_margin"};
  return names;
}

std::vector<double> EntropyReport::values() const {
  return {t,    mass, momentum, E,   Ecal,   Ephi, Ephiphi, A_direct,
          A_double, H, Ivv0, Ivv_filt, Ixv, Ixx, Itilde,
          fisher_identity_residual, pinsker_slack, logsob_ratio,
          L1_to_maxwellian, min_rho_phi, density_margin};
}

EntropyReport report(const PhaseField& f, const PhaseGrid& grid, const DiscreteKernel& phi,
                     const ReportOptions& options, double t) {
  const double sigma = options.sigma;
  const double floor = options.floor > 0.0
                           ? options.floor
                           : default_density_floor(options.mass, grid.x.length);
  const double dx = grid.x.dx();

  EntropyReport r;
  r.t = t;
  const Moments mom = moments(f, grid, floor);
  r.mass = mom.rho.sum() * dx;
  r.momentum = mom.m.sum() * dx;
  r.E = mom.E;

  const Filtration filt = filtrate(mom.rho, mom.m, phi, floor);
  const MacroEnergies macro = macro_energies(mom.rho, mom.m, phi, floor);
  r.Ecal = macro.Ecal;
  r.Ephi = macro.Ephi;
  r.Ephiphi = macro.Ephiphi;

  const AlignmentFunctional A = alignment_functional(mom.rho, mom.m, phi, floor);
  r.A_direct = A.direct;
  r.A_double = A.dbl;

  const PhaseField mu = maxwellian_grid(grid, sigma, options.u_bar, options.mass);
  r.H = relative_entropy(f, mu, grid, sigma);
  r.L1_to_maxwellian = (f - mu).abs().sum() * grid.cell_volume();

  r.Ivv0 = fisher_vv(f, grid, options.u_bar, sigma);
  r.Ivv_filt = fisher_vv(f, grid, filt.u_mollified, sigma);
  const FisherCross cross = fisher_cross(f, grid, sigma, options.u_bar);
  r.Ixv = cross.xv;
  r.Ixx = cross.xx;
  r.Itilde = r.Ivv0 + r.Ixv + r.Ixx;

  // Fisher identity in the frame moving with u_bar (the literal identity when
  // u_bar = 0).
  const MacroEnergies rel =
      macro_energies(mom.rho, mom.m - options.u_bar * mom.rho, phi, floor);
  r.fisher_identity_residual = r.Ivv_filt - r.Ivv0 - rel.Ephiphi + 2.0 * rel.Ephi;

  r.pinsker_slack =
      r.H - sigma / (2.0 * options.mass) * r.L1_to_maxwellian * r.L1_to_maxwellian;
  r.logsob_ratio = r.H > 1e-14 ? r.I_full() / r.H : kNaN;
  r.min_rho_phi = filt.rho_phi.minCoeff();
  const double radius = options.margin_radius > 0.0 ? options.margin_radius : 0.5 * phi.r0;
  r.density_margin = hydrodynamic_density_margin(mom.rho, grid.x, radius, r.mass);
  return r;
}

IsmallResult ismall_check(const PhaseField& f0, const PhaseGrid& grid, double sigma,
                          double mass) {
  const Moments mom = moments(f0, grid, 0.0);
  const double u_bar = mom.m.sum() / mom.rho.sum();
  IsmallResult out;
  out.fisher = fisher_vv(f0, grid, u_bar, sigma) + fisher_cross(f0, grid, sigma, u_bar).xx;
  out.ratio = out.fisher / (sigma * mass);
  return out;
}

DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> y,
                        double t_begin, double t_end) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay_rate: size mismatch");
  std::vector<double> ts;
  std::vector<double> ls;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_begin || t[k] > t_end) continue;
    if (!(y[k] > 0.0)) {
      throw std::invalid_argument("fit_decay_rate: nonpositive sample at t = " +
                                  std::to_string(t[k]));
    }
    ts.push_back(t[k]);
    ls.push_back(std::log(y[k]));
  }
  const std::size_t n = ts.size();
  if (n < 8) throw std::invalid_argument("fit_decay_rate: fewer than 8 samples in window");

  double t_mean = 0.0;
  double l_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    t_mean += ts[k];
    l_mean += ls[k];
  }
  t_mean /= n;
  l_mean /= n;
  double stt = 0.0;
  double stl = 0.0;
  double sll = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    stt += (ts[k] - t_mean) * (ts[k] - t_mean);
    stl += (ts[k] - t_mean) * (ls[k] - l_mean);
    sll += (ls[k] - l_mean) * (ls[k] - l_mean);
  }
  const bool flat = std::all_of(ls.begin(), ls.end(), [&](double l) { return l == ls.front(); });
  const double slope = flat ? 0.0 : stl / stt;
  const double intercept = l_mean - slope * t_mean;

  DecayFit fit;
  fit.samples = static_cast<int>(n);
  fit.c1 = std::exp(intercept);
  fit.c2 = -slope;
  if (!flat && sll > 0.0) {
    double ss_res = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e = ls[k] - (intercept + slope * ts[k]);
      ss_res += e * e;
    }
    fit.r_squared = 1.0 - ss_res / sll;
    fit.r_squared_defined = true;
  } else {
    fit.r_squared = kNaN;
    fit.r_squared_defined = false;
  }
  return fit;
}

const std::vector<std::string>& HydroReport::columns() {
  static const std::vector<std::string> names = {
      "t",       "H_rel",    "H_kinetic", "G_macro",
      "H_self",  "H_macro",  "decomposition_residual", "split_residual",
      "reynolds_L1", "fisher_eps", "rho_L1", "momentum_L1", "mass"};
  return names;
}

std::vector<double> HydroReport::values() const {
  return {t,      H_rel,   H_kinetic, G_macro, H_self,      H_macro, decomposition_residual,
          split_residual, reynolds_L1, fisher_eps, rho_L1, momentum_L1, mass};
}

HydroReport hydro_report(const PhaseField& f, const PhaseGrid& grid, const Field& rho,
                         const Field& u, double epsilon, double t) {
  const int nx = grid.nx();
  const double dx = grid.x.dx();
  const double dv = grid.v.dv();
  if (rho.size() != nx || u.size() != nx) throw ShapeError("hydro_report: grid mismatch");
  {
    Eigen::Index imin = 0;
    const double rmin = rho.minCoeff(&imin);
    if (!(rmin > 0.0)) {
      throw DensityDegeneracy("macro density", rmin, grid.x.center(static_cast<int>(imin)), t);
    }
  }

  const Moments mom = moments(f, grid, 0.0);
  {
    Eigen::Index imin = 0;
    const double rmin = mom.rho.minCoeff(&imin);
    if (!(rmin > 0.0)) {
      throw DensityDegeneracy("kinetic density", rmin, grid.x.center(static_cast<int>(imin)),
                              t);
    }
  }
  const Field& rho_e = mom.rho;
  const Field u_e = mom.m / rho_e;
  const Field v = grid.v.centers();

  const PhaseField mu = local_maxwellian(grid, rho, u);
  const PhaseField mu_e = local_maxwellian(grid, rho_e, u_e);

  HydroReport r;
  r.t = t;
  r.mass = rho_e.sum() * dx;
  r.H_rel = relative_entropy(f, mu, grid, 1.0);
  r.H_self = relative_entropy(f, mu_e, grid, 1.0);
  r.H_macro = (0.5 * rho_e * (u_e - u).square() + rho_e * (rho_e / rho).log()).sum() * dx;
  r.decomposition_residual = std::abs(r.H_rel - r.H_self - r.H_macro);

  double boltzmann = 0.0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      const double fij = f(i, j);
      if (fij > 0.0) boltzmann += fij * std::log(fij);
      boltzmann += 0.5 * v[j] * v[j] * fij;
    }
  }
  r.H_kinetic = boltzmann * dx * dv + 0.5 * r.mass * std::log(2.0 * std::numbers::pi);
  r.G_macro =
      (0.5 * rho_e * u.square() - mom.m * u - rho_e * rho.log()).sum() * dx;
  r.split_residual = r.H_rel - r.H_kinetic - r.G_macro;

  const Field second = (f.matrix() * v.square().matrix()).array() * dv;
  r.reynolds_L1 = (second - mom.m.square() / rho_e - rho_e).abs().sum() * dx;

  const PhaseField dvf = derivative_v(f, grid);
  const double thr = fisher_skip_threshold(f, grid);
  const double k = 1.0 + 0.5 * epsilon;
  double info = 0.0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      const double fij = f(i, j);
      const double a = dvf(i, j) + k * (v[j] - u_e[i]) * fij;
      if (fij < thr && std::abs(a) < thr) continue;
      info += a * a / fij;
    }
  }
  r.fisher_eps = info * dx * dv;
  r.rho_L1 = (rho_e - rho).abs().sum() * dx;
  r.momentum_L1 = (mom.m - rho * u).abs().sum() * dx;
  return r;
}

}  // namespace fpa

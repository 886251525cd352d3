#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "fpa/grid.hpp"
#include "fpa/kernels.hpp"

namespace fpa {

/// Fourier differentiation matrix on n equispaced points of a periodic
/// interval of length `period`. Antisymmetric, so its rows and columns sum
/// to zero.
Eigen::MatrixXd spectral_derivative_matrix(int n, double period);

/// First-derivative matrix on n nodes with spacing h using `width`-point
/// stencils, centered in the interior and one-sided near the ends.
Eigen::MatrixXd finite_difference_matrix(int n, double h, int width);

/// d/dx and d/dv of a phase field. The x-derivative is Fourier on the
/// periodic grid, the v-derivative uses 7-point stencils; along lines where f
/// is strictly positive both are applied to log f and multiplied back, so the
/// error stays relative to f far out in the velocity tails.
PhaseField derivative_x(const PhaseField& f, const PhaseGrid& grid);
PhaseField derivative_v(const PhaseField& f, const PhaseGrid& grid);

struct Moments {
  Field rho;    ///< sum_j f_ij dv
  Field m;      ///< sum_j v_j f_ij dv
  double E = 0.0;     ///< sum v^2 f dv dx
  double Ecal = 0.0;  ///< sum m^2 / max(rho, floor) dx
};

Moments moments(const PhaseField& f, const PhaseGrid& grid, double floor);

/// Global Maxwellian sampled pointwise and renormalized to mass exactly M.
PhaseField maxwellian_grid(const PhaseGrid& grid, double sigma, double u_bar,
                           double mass);

/// Local Maxwellian rho(x) (2 pi T)^{-1/2} exp(-|v - u(x)|^2 / (2T)), sampled
/// pointwise without renormalization.
PhaseField local_maxwellian(const PhaseGrid& grid, const Field& rho, const Field& u,
                            double temperature = 1.0);

/// sigma * sum f log(f / mu) dx dv with 0 log 0 = 0.
double relative_entropy(const PhaseField& f, const PhaseField& mu, const PhaseGrid& grid,
                        double sigma);

/// Partial Fisher information centered at a velocity field u(x):
/// sum |sigma d_v f + (v - u) f|^2 / f dx dv.
double fisher_vv(const PhaseField& f, const PhaseGrid& grid, const Field& u_center,
                 double sigma);
double fisher_vv(const PhaseField& f, const PhaseGrid& grid, double u_center,
                 double sigma);

struct FisherCross {
  double xv = 0.0;  ///< sigma^{1/2} sum d_x f (sigma d_v f + (v - u) f) / f
  double xx = 0.0;  ///< sigma sum |d_x f|^2 / f
};

/// Cross and spatial Fisher terms in the hypocoercive weighting; `u_center`
/// is the constant velocity the Maxwellian is centered at.
FisherCross fisher_cross(const PhaseField& f, const PhaseGrid& grid, double sigma,
                         double u_center = 0.0);

struct MacroEnergies {
  double Ecal = 0.0;
  double Ephi = 0.0;
  double Ephiphi = 0.0;
};

struct Energies {
  double E = 0.0;
  double Ecal = 0.0;
  double Ephi = 0.0;
  double Ephiphi = 0.0;
};

MacroEnergies macro_energies(const Field& rho, const Field& m, const DiscreteKernel& phi,
                             double floor);
Energies energies(const PhaseField& f, const PhaseGrid& grid, const DiscreteKernel& phi,
                  double floor);

struct AlignmentFunctional {
  double direct = 0.0;  ///< E_phi - E_phiphi
  double dbl = 0.0;     ///< 1/2 sum sum rho_phiphi(x, y) |u_F(x) - u_F(y)|^2
};

/// Both forms of the alignment functional. Each is evaluated in the frame
/// moving with the mean velocity; both forms are Galilean invariant, and this
/// keeps E_phi - E_phiphi free of cancellation when the field is nearly
/// aligned.
AlignmentFunctional alignment_functional(const Field& rho, const Field& m,
                                         const DiscreteKernel& phi, double floor);

struct EntropyReport {
  double t = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double E = 0.0;
  double Ecal = 0.0;
  double Ephi = 0.0;
  double Ephiphi = 0.0;
  double A_direct = 0.0;
  double A_double = 0.0;
  double H = 0.0;
  double Ivv0 = 0.0;
  double Ivv_filt = 0.0;
  double Ixv = 0.0;
  double Ixx = 0.0;
  double Itilde = 0.0;
  double fisher_identity_residual = 0.0;
  double pinsker_slack = 0.0;
  double logsob_ratio = 0.0;  ///< NaN when H <= 1e-14
  double L1_to_maxwellian = 0.0;
  double min_rho_phi = 0.0;
  double density_margin = 0.0;

  double I_full() const { return Ivv0 + Ixx; }
  /// Smallest of E - Ecal, Ecal - Ephi, Ephi - Ephiphi, Ephiphi.
  double hierarchy_slack() const;

  static const std::vector<std::string>& columns();
  std::vector<double> values() const;
};

struct ReportOptions {
  double sigma = 1.0;
  double u_bar = 0.0;
  double mass = 1.0;
  double margin_radius = 0.0;  ///< <= 0 means r0 / 2 of the kernel
  double floor = 0.0;          ///< <= 0 means the default density floor
};

EntropyReport report(const PhaseField& f, const PhaseGrid& grid, const DiscreteKernel& phi,
                     const ReportOptions& options, double t = 0.0);

struct IsmallResult {
  double fisher = 0.0;  ///< I(f0) with the full Fisher information
  double ratio = 0.0;   ///< I(f0) / (sigma M)
};

IsmallResult ismall_check(const PhaseField& f0, const PhaseGrid& grid, double sigma,
                          double mass);

struct DecayFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double r_squared = 0.0;
  bool r_squared_defined = false;
  int samples = 0;
};

/// Least-squares fit of log y = log c1 - c2 t over samples with t in
/// [t_begin, t_end].
DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> y,
                        double t_begin, double t_end);

struct HydroReport {
  double t = 0.0;
  double H_rel = 0.0;       ///< H(f^eps | mu), mu the local Maxwellian of (rho, u)
  double H_kinetic = 0.0;   ///< H_eps
  double G_macro = 0.0;     ///< G_eps
  double H_self = 0.0;      ///< H(f^eps | mu^eps)
  double H_macro = 0.0;     ///< H(mu^eps | mu)
  double decomposition_residual = 0.0;
  double split_residual = 0.0;  ///< H_rel - H_eps - G_eps
  double reynolds_L1 = 0.0;
  double fisher_eps = 0.0;
  double rho_L1 = 0.0;
  double momentum_L1 = 0.0;
  double mass = 0.0;

  static const std::vector<std::string>& columns();
  std::vector<double> values() const;
};

/// Compares a penalized kinetic state to a macroscopic solution (rho, u) at
/// unit temperature. Throws DensityDegeneracy if rho has a vacuum.
HydroReport hydro_report(const PhaseField& f, const PhaseGrid& grid, const Field& rho,
                         const Field& u, double epsilon, double t = 0.0);

}  // namespace fpa

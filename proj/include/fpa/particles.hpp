#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "fpa/kernels.hpp"

namespace fpa {

/// N weighted agents on the torus [0, length)^dim, dim in {1, 2}. Row p of
/// x and v belongs to the particle with label id[p], whose noise substream is
/// stream[p]; permuting rows together with these labels permutes
/// trajectories.
struct ParticleEnsemble {
  int dim = 1;
  double length = 1.0;
  Eigen::MatrixXd x;
  Eigen::MatrixXd v;
  Eigen::VectorXd mass;
  std::vector<long> id;
  std::vector<std::uint64_t> stream;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step_index = 0;

  int size() const { return static_cast<int>(x.rows()); }
  double total_mass() const { return mass.sum(); }
  Eigen::VectorXd momentum() const { return v.transpose() * mass; }
  Eigen::VectorXd mean_velocity() const { return momentum() / total_mass(); }
};

struct ParticleModel {
  KernelSpec kernel;
  double sigma = 0.0;
  int deposition_nodes = 64;  ///< per dimension
  /// Smallest admissible deposited density at a node some particle reads.
  double floor = std::numeric_limits<double>::min();
  /// Multiply the alignment rate (and noise variance) by the local
  /// strength kappa_i = sum_j m_j phi(x_i - x_j) instead of 1.
  bool cucker_smale = false;
};

/// Builds an ensemble with equal masses summing to `total_mass`, validating
/// shapes and wrapping positions into the torus.
ParticleEnsemble make_ensemble(int dim, double length, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& v, double total_mass,
                               std::uint64_t seed);

/// N particles with uniform positions and Gaussian velocities (mean u_mean,
/// standard deviation spread per component), drawn from the seed's stream.
ParticleEnsemble random_ensemble(int dim, int n, double length, double total_mass,
                                 double u_mean, double spread, std::uint64_t seed);

/// Two particles on perpendicular wrapped lines: A starts at (0, L/4) moving
/// along x, B at (3L/4, 0) moving along y, both at `speed`. Their periodic
/// distance never drops below L / (2 sqrt 2).
ParticleEnsemble locked_pair(double length, double speed, double total_mass,
                             std::uint64_t seed);

/// Smallest periodic distance between the two particles of locked_pair over
/// all times, computed by sampling one period of the relative orbit.
double locked_pair_min_distance(double length, int samples = 100000);

/// <v>_i of the averaged model: the y-integral is a quadrature over the
/// deposition grid, with each particle's kernel weights renormalized to unit
/// quadrature mass.
Eigen::MatrixXd averaged_velocity(const ParticleEnsemble& ens, const ParticleModel& model);

/// kappa_i = sum_j m_j phi(x_i - x_j) with phi normalized to unit quadrature
/// mass on the deposition grid.
Eigen::VectorXd communication_strength(const ParticleEnsemble& ens,
                                       const ParticleModel& model);

/// Euler-Maruyama: v <- v + kappa (<v> - v) dt + sqrt(2 sigma kappa dt) xi,
/// x <- x + v dt (mod length), with kappa = 1 unless cucker_smale.
void step_em(ParticleEnsemble& ens, double dt, const ParticleModel& model);

struct ParticleReport {
  double t = 0.0;
  Eigen::VectorXd momentum;
  double variance = 0.0;  ///< sum m_i |v_i - v_bar|^2 / M
  double diameter = 0.0;  ///< max_{i,j} |v_i - v_j|
};

ParticleReport particle_report(const ParticleEnsemble& ens);

struct ParticleRunOptions {
  double t_end = 1.0;
  double dt = 1e-2;
  double report_every = 0.05;
  double snapshot_every = 0.0;
};

std::vector<ParticleReport> run_particles(
    ParticleEnsemble& ens, const ParticleModel& model, const ParticleRunOptions& options,
    const std::function<void(const ParticleEnsemble&)>& snapshot = {});

}  // namespace fpa

#include "fpa/particles.hpp"

#include <algorithm>
#include <cmath>

#include "fpa/philox.hpp"

namespace fpa {

namespace {

// Below this a kernel weight is dropped, so every deposited density a
// particle reads stays a normal double.
constexpr double kWeightCutoff = 1e-250;

struct Deposition {
  int n = 0;       // nodes per dimension
  int dim = 1;
  double dy = 0.0;
  double cell = 0.0;  // dy^dim
  int total() const { return dim == 1 ? n : n * n; }
};

struct NodeWeights {
  std::vector<int> node;
  std::vector<double> w;
};

bool compact_support(const KernelSpec& spec, double length) {
  return spec.family == KernelFamily::bump && spec.r0 < 0.5 * length;
}

// Node indices along one dimension whose periodic distance to x may be
// below r0.
std::vector<int> candidate_nodes(double x, double r0, const Deposition& dep, bool compact) {
  std::vector<int> out;
  if (!compact) {
    out.resize(dep.n);
    for (int k = 0; k < dep.n; ++k) out[k] = k;
    return out;
  }
  const long lo = static_cast<long>(std::ceil((x - r0) / dep.dy));
  const long hi = static_cast<long>(std::floor((x + r0) / dep.dy));
  if (hi - lo + 1 >= dep.n) return candidate_nodes(x, r0, dep, false);
  for (long k = lo; k <= hi; ++k) out.push_back(static_cast<int>(((k % dep.n) + dep.n) % dep.n));
  return out;
}

// Kernel weights of one particle on the deposition grid, normalized to unit
// quadrature mass.
NodeWeights particle_weights(const Eigen::VectorXd& xp, const KernelSpec& spec,
                             double length, const Deposition& dep) {
  const bool compact = compact_support(spec, length);
  NodeWeights nw;
  Eigen::VectorXd d(dep.dim);
  if (dep.dim == 1) {
    for (int k : candidate_nodes(xp[0], spec.r0, dep, compact)) {
      d[0] = periodic_displacement(k * dep.dy, xp[0], length);
      const double w = kernel_profile(spec, d, length);
      if (w > kWeightCutoff) {
        nw.node.push_back(k);
        nw.w.push_back(w);
      }
    }
  } else {
    const std::vector<int> kx = candidate_nodes(xp[0], spec.r0, dep, compact);
    const std::vector<int> ky = candidate_nodes(xp[1], spec.r0, dep, compact);
    for (int a : kx) {
      d[0] = periodic_displacement(a * dep.dy, xp[0], length);
      for (int b : ky) {
        d[1] = periodic_displacement(b * dep.dy, xp[1], length);
        const double w = kernel_profile(spec, d, length);
        if (w > kWeightCutoff) {
          nw.node.push_back(a + dep.n * b);
          nw.w.push_back(w);
        }
      }
    }
  }
  double z = 0.0;
  for (double w : nw.w) z += w;
  z *= dep.cell;
  if (!(z > 0.0)) {
    throw ConfigError("particle kernel has no deposition node inside its support; "
                      "increase deposition_nodes or r0");
  }
  for (double& w : nw.w) w /= z;
  return nw;
}

Deposition make_deposition(const ParticleEnsemble& ens, const ParticleModel& model) {
  if (ens.dim != 1 && ens.dim != 2) throw ConfigError("particles: dimension must be 1 or 2");
  if (model.deposition_nodes < 4) throw ConfigError("particles: deposition_nodes must be >= 4");
  if (model.kernel.family != KernelFamily::global_uniform &&
      model.kernel.r0 > 0.5 * ens.length * (1.0 + 1e-14)) {
    throw ConfigError("particles: kernel r0 exceeds half the domain length");
  }
  Deposition dep;
  dep.n = model.deposition_nodes;
  dep.dim = ens.dim;
  dep.dy = ens.length / dep.n;
  dep.cell = std::pow(dep.dy, ens.dim);
  return dep;
}

std::vector<NodeWeights> all_weights(const ParticleEnsemble& ens, const ParticleModel& model,
                                     const Deposition& dep) {
  std::vector<NodeWeights> out(ens.size());
  for (int p = 0; p < ens.size(); ++p) {
    out[p] = particle_weights(ens.x.row(p).transpose(), model.kernel, ens.length, dep);
  }
  return out;
}

}  // namespace

ParticleEnsemble make_ensemble(int dim, double length, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& v, double total_mass,
                               std::uint64_t seed) {
  if (dim != 1 && dim != 2) throw ConfigError("particles: dimension must be 1 or 2");
  if (!(length > 0.0)) throw ConfigError("particles: length must be positive");
  if (!(total_mass > 0.0)) throw ConfigError("particles: mass must be positive");
  if (x.cols() != dim || v.cols() != dim || x.rows() != v.rows() || x.rows() < 1) {
    throw ShapeError("particles: positions and velocities must be N x dim");
  }
  ParticleEnsemble e;
  e.dim = dim;
  e.length = length;
  e.x = x.unaryExpr([length](double y) { return wrap_periodic(y, length); });
  e.v = v;
  const Eigen::Index n = x.rows();
  e.mass = Eigen::VectorXd::Constant(n, total_mass / n);
  e.id.resize(n);
  e.stream.resize(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    e.id[p] = p;
    e.stream[p] = static_cast<std::uint64_t>(p);
  }
  e.seed = seed;
  return e;
}

ParticleEnsemble random_ensemble(int dim, int n, double length, double total_mass,
                                 double u_mean, double spread, std::uint64_t seed) {
  if (n < 1) throw ConfigError("particles: N must be positive");
  Eigen::MatrixXd x(n, dim);
  Eigen::MatrixXd v(n, dim);
  // Initial data draws from stream ids above every particle substream.
  const std::uint64_t base = std::uint64_t{1} << 40;
  for (int p = 0; p < n; ++p) {
    const auto u = uniform_block(seed, base + 2 * static_cast<std::uint64_t>(p), 0);
    const auto z = normal_block(seed, base + 2 * static_cast<std::uint64_t>(p) + 1, 0);
    for (int d = 0; d < dim; ++d) {
      x(p, d) = u[d] * length;
      v(p, d) = u_mean + spread * z[d];
    }
  }
  return make_ensemble(dim, length, x, v, total_mass, seed);
}

ParticleEnsemble locked_pair(double length, double speed, double total_mass,
                             std::uint64_t seed) {
  Eigen::MatrixXd x(2, 2);
  Eigen::MatrixXd v(2, 2);
  x << 0.0, 0.25 * length, 0.75 * length, 0.0;
  v << speed, 0.0, 0.0, speed;
  return make_ensemble(2, length, x, v, total_mass, seed);
}

double locked_pair_min_distance(double length, int samples) {
  double best = length;
  for (int k = 0; k < samples; ++k) {
    const double s = length * k / samples;
    const double dx = periodic_displacement(s, 0.75 * length, length);
    const double dy = periodic_displacement(0.25 * length, s, length);
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

Eigen::MatrixXd averaged_velocity(const ParticleEnsemble& ens, const ParticleModel& model) {
  const Deposition dep = make_deposition(ens, model);
  const std::vector<NodeWeights> weights = all_weights(ens, model, dep);
  const int total = dep.total();

  // Phase 1: deposited density and momentum on the nodes.
  Eigen::VectorXd den = Eigen::VectorXd::Zero(total);
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(total, ens.dim);
  for (int p = 0; p < ens.size(); ++p) {
    const NodeWeights& nw = weights[p];
    for (std::size_t q = 0; q < nw.node.size(); ++q) {
      const double mw = ens.mass[p] * nw.w[q];
      den[nw.node[q]] += mw;
      num.row(nw.node[q]) += mw * ens.v.row(p);
    }
  }

  // Phase 2: every particle reads the filtered velocity through its weights.
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(ens.size(), ens.dim);
  for (int p = 0; p < ens.size(); ++p) {
    const NodeWeights& nw = weights[p];
    for (std::size_t q = 0; q < nw.node.size(); ++q) {
      const int k = nw.node[q];
      if (!(den[k] >= model.floor)) {
        throw DensityDegeneracy("particle deposition node " + std::to_string(k), den[k],
                                (k % dep.n) * dep.dy, ens.t);
      }
      avg.row(p) += (nw.w[q] * dep.cell / den[k]) * num.row(k);
    }
  }
  return avg;
}

Eigen::VectorXd communication_strength(const ParticleEnsemble& ens,
                                       const ParticleModel& model) {
  const Deposition dep = make_deposition(ens, model);
  Eigen::VectorXd d(ens.dim);
  // Unit-mass normalization of the kernel on the deposition grid.
  const double norm = [&] {
    double s = 0.0;
    const int n = dep.n;
    for (int k = 0; k < dep.total(); ++k) {
      for (int a = 0; a < ens.dim; ++a) {
        const int idx = a == 0 ? k % n : k / n;
        d[a] = periodic_displacement(idx * dep.dy, 0.0, ens.length);
      }
      s += kernel_profile(model.kernel, d, ens.length);
    }
    return s * dep.cell;
  }();

  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(ens.size());
  for (int i = 0; i < ens.size(); ++i) {
    for (int j = 0; j < ens.size(); ++j) {
      for (int a = 0; a < ens.dim; ++a) {
        d[a] = periodic_displacement(ens.x(i, a), ens.x(j, a), ens.length);
      }
      kappa[i] += ens.mass[j] * kernel_profile(model.kernel, d, ens.length) / norm;
    }
  }
  return kappa;
}

void step_em(ParticleEnsemble& ens, double dt, const ParticleModel& model) {
  if (!(dt > 0.0)) throw ConfigError("particles: dt must be positive");
  if (model.sigma < 0.0) throw ConfigError("particles: sigma must be nonnegative");
  const Eigen::MatrixXd avg = averaged_velocity(ens, model);
  const Eigen::VectorXd kappa = model.cucker_smale
                                    ? communication_strength(ens, model)
                                    : Eigen::VectorXd::Ones(ens.size());
  for (int p = 0; p < ens.size(); ++p) {
    const double rate = kappa[p];
    const double amp = std::sqrt(2.0 * model.sigma * rate * dt);
    const auto z = normal_block(ens.seed, ens.stream[p], ens.step_index);
    for (int a = 0; a < ens.dim; ++a) {
      double vn = ens.v(p, a) + rate * (avg(p, a) - ens.v(p, a)) * dt;
      if (model.sigma > 0.0) vn += amp * z[a];
      ens.v(p, a) = vn;
      ens.x(p, a) = wrap_periodic(ens.x(p, a) + vn * dt, ens.length);
    }
  }
  ++ens.step_index;
  ens.t += dt;
}

ParticleReport particle_report(const ParticleEnsemble& ens) {
  ParticleReport r;
  r.t = ens.t;
  r.momentum = ens.momentum();
  const Eigen::VectorXd mean = ens.mean_velocity();
  double var = 0.0;
  for (int p = 0; p < ens.size(); ++p) {
    var += ens.mass[p] * (ens.v.row(p).transpose() - mean).squaredNorm();
  }
  r.variance = var / ens.total_mass();
  for (int i = 0; i < ens.size(); ++i) {
    for (int j = i + 1; j < ens.size(); ++j) {
      r.diameter = std::max(r.diameter, (ens.v.row(i) - ens.v.row(j)).norm());
    }
  }
  return r;
}

std::vector<ParticleReport> run_particles(
    ParticleEnsemble& ens, const ParticleModel& model, const ParticleRunOptions& options,
    const std::function<void(const ParticleEnsemble&)>& snapshot) {
  const long n = step_count(options.t_end, options.dt, "t_end");
  const long every = std::max(1L, step_count(options.report_every, options.dt, "report_every"));
  const long snap_every = options.snapshot_every > 0.0
                              ? std::max(1L, step_count(options.snapshot_every, options.dt,
                                                        "snapshot_every"))
                              : 0;
  const double t0 = ens.t;
  std::vector<ParticleReport> out;
  out.push_back(particle_report(ens));
  if (snapshot) snapshot(ens);
  for (long s = 1; s <= n; ++s) {
    step_em(ens, options.dt, model);
    ens.t = t0 + s * options.dt;
    if (s % every == 0 || s == n) out.push_back(particle_report(ens));
    if (snapshot && snap_every > 0 && s % snap_every == 0) snapshot(ens);
  }
  return out;
}

}  // namespace fpa

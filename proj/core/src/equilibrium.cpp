#include "pentrap/equilibrium.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pentrap/forces.hpp"
#include "pentrap/rng.hpp"

namespace pentrap {

namespace {

// Pack/unpack the 2N planar coordinates.
Eigen::VectorXd pack(const std::vector<Vec3>& pos) {
  Eigen::VectorXd x(2 * pos.size());
  for (size_t j = 0; j < pos.size(); ++j) {
    x(2 * j) = pos[j].x;
    x(2 * j + 1) = pos[j].y;
  }
  return x;
}

std::vector<Vec3> unpack(const Eigen::VectorXd& x) {
  std::vector<Vec3> pos(static_cast<size_t>(x.size() / 2));
  for (size_t j = 0; j < pos.size(); ++j) pos[j] = {x(2 * j), x(2 * j + 1), 0.0};
  return pos;
}

double planar_energy(const Eigen::VectorXd& x, const System& sys) {
  return potential_energy_scaled(unpack(x), sys);
}

Eigen::VectorXd planar_gradient(const Eigen::VectorXd& x, const System& sys) {
  std::vector<Vec3> force;
  position_force_scaled(unpack(x), sys, force);
  Eigen::VectorXd g(x.size());
  for (size_t j = 0; j < force.size(); ++j) {
    g(2 * j) = -force[j].x;  // gradient = -force
    g(2 * j + 1) = -force[j].y;
  }
  return g;
}

// Backtracking Armijo line search. Returns the accepted step length, or 0
// when no decrease could be found.
double line_search(const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
                   double f0, const Eigen::VectorXd& g0, const System& sys,
                   double& f_out) {
  const double slope = g0.dot(dir);
  if (slope >= 0.0) return 0.0;  // not a descent direction
  double alpha = 1.0;
  for (int k = 0; k < 60; ++k) {
    double f;
    try {
      f = planar_energy(x + alpha * dir, sys);
    } catch (const CoincidentIons&) {
      alpha *= 0.5;
      continue;
    }
    if (f <= f0 + 1e-4 * alpha * slope) {
      f_out = f;
      return alpha;
    }
    alpha *= 0.5;
  }
  return 0.0;
}

// Rigid rotation is an exact symmetry of every energy term except the wall,
// whose contribution is (ww^2/2)(P cos 2phi - Q sin 2phi) under a rotation by
// phi, with P = sum(x^2 - y^2) and Q = sum(2xy). The optimal crystal
// orientation is therefore available in closed form; snapping to it removes
// the gradient component along the nearly-flat rotational valley that a
// line-search minimizer crawls along.
void align_to_wall(Eigen::VectorXd& x, const System& sys) {
  if (sys.sf.wall == 0.0) return;
  const int n = static_cast<int>(x.size() / 2);
  double p = 0.0, q = 0.0;
  for (int j = 0; j < n; ++j) {
    const double xx = x(2 * j), yy = x(2 * j + 1);
    p += xx * xx - yy * yy;
    q += 2.0 * xx * yy;
  }
  const double r = std::hypot(p, q);
  if (r < 1e-300) return;
  const double phi = 0.5 * (constants::pi - std::atan2(q, p));
  const double c = std::cos(phi), s = std::sin(phi);
  for (int j = 0; j < n; ++j) {
    const double xx = x(2 * j), yy = x(2 * j + 1);
    x(2 * j) = c * xx - s * yy;
    x(2 * j + 1) = s * xx + c * yy;
  }
}

// Metropolis-style annealing pass over single-ion displacements; returns the
// best configuration visited. Used only as an optional seed improver.
Eigen::VectorXd anneal(Eigen::VectorXd x, const System& sys, std::uint64_t seed) {
  Rng rng(seed, 0x616e6e65616cULL);
  const int n = static_cast<int>(x.size() / 2);
  double energy = planar_energy(x, sys);
  Eigen::VectorXd best = x;
  double best_energy = energy;

  double theta = 0.3 * std::abs(energy) / std::max(1, n);  // start hot
  const int sweeps = 200;
  double radius = 0.5;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int j = 0; j < n; ++j) {
      const double ang = rng.uniform(0.0, 2.0 * constants::pi);
      const double rad = radius * std::sqrt(rng.uniform01());
      Eigen::VectorXd trial = x;
      trial(2 * j) += rad * std::cos(ang);
      trial(2 * j + 1) += rad * std::sin(ang);
      double e_new;
      try {
        e_new = planar_energy(trial, sys);
      } catch (const CoincidentIons&) {
        continue;
      }
      const double d = e_new - energy;
      if (d <= 0.0 || rng.uniform01() < std::exp(-d / theta)) {
        x = trial;
        energy = e_new;
        if (energy < best_energy) {
          best_energy = energy;
          best = x;
        }
      }
    }
    theta *= 0.97;
    radius = std::max(0.02, radius * 0.99);
  }
  return best;
}

}  // namespace

std::vector<Vec3> seed_lattice(int n_ions, double spacing) {
  if (n_ions < 1) throw ValidationError("seed_lattice: n_ions must be >= 1");
  if (!(spacing > 0.0)) throw ValidationError("seed_lattice: spacing must be > 0");

  // Generate triangular-lattice sites m*a1 + k*a2 out to a safe radius, then
  // keep the n_ions closest to the origin.
  const int range = static_cast<int>(std::ceil(2.0 * std::sqrt(n_ions))) + 2;
  struct Site {
    double x, y, r2, angle;
  };
  std::vector<Site> sites;
  sites.reserve((2 * range + 1) * (2 * range + 1));
  for (int m = -range; m <= range; ++m) {
    for (int k = -range; k <= range; ++k) {
      const double x = spacing * (m + 0.5 * k);
      const double y = spacing * (std::sqrt(3.0) / 2.0 * k);
      const double r2 = x * x + y * y;
      double ang = std::atan2(y, x);
      if (ang < 0.0) ang += 2.0 * constants::pi;
      sites.push_back({x, y, r2, ang});
    }
  }
  std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
    if (a.r2 != b.r2) return a.r2 < b.r2;
    return a.angle < b.angle;
  });

  std::vector<Vec3> out(static_cast<size_t>(n_ions));
  for (int j = 0; j < n_ions; ++j) out[j] = {sites[j].x, sites[j].y, 0.0};
  return out;
}

double two_ion_separation(const System& sys) {
  const double soft = sys.sf.perp * sys.sf.perp - sys.sf.wall * sys.sf.wall;
  return std::cbrt(2.0 / soft);
}

EquilibriumConfiguration find_equilibrium(const std::vector<Vec3>& seed,
                                          const System& sys,
                                          const MinimizerOptions& opts) {
  if (static_cast<int>(seed.size()) != sys.n())
    throw ValidationError("find_equilibrium: seed size does not match N");

  Eigen::VectorXd x = pack(seed);
  const int dim = static_cast<int>(x.size());

  std::string descriptor = "user-seed";
  if (opts.annealing_prepass && sys.n() > 1) {
    x = anneal(x, sys, opts.annealing_seed);
    descriptor += "+annealed";
  }

  double f = planar_energy(x, sys);
  Eigen::VectorXd g = planar_gradient(x, sys);

  // BFGS carries the search down to where the quadratic model is reliable;
  // Newton steps with the analytic Hessian then finish the convergence. At
  // that stage progress is measured on the gradient norm, because energy
  // differences near the minimum sink below double precision long before
  // the force-norm target is reached.
  const double newton_threshold = std::max(opts.tolerance, 1e-6);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);
  long long budget = opts.max_iterations;

  for (int attempt = 0; attempt < 50; ++attempt) {
    // BFGS phase.
    Eigen::MatrixXd h_inv = identity;
    bool fresh = true;
    while (g.norm() > newton_threshold) {
      if (--budget < 0)
        throw NoConvergence("find_equilibrium: exceeded max_iterations");

      Eigen::VectorXd dir = -(h_inv * g);
      if (fresh) dir = -g / std::max(1.0, g.norm());  // conservative first step

      double f_new = f;
      double alpha = line_search(x, dir, f, g, sys, f_new);
      if (alpha == 0.0) {
        if (!fresh) {  // restart with a steepest-descent step
          h_inv = identity;
          fresh = true;
          continue;
        }
        throw NoConvergence("find_equilibrium: line search failed");
      }

      const Eigen::VectorXd s = alpha * dir;
      const Eigen::VectorXd x_new = x + s;
      const Eigen::VectorXd g_new = planar_gradient(x_new, sys);
      const Eigen::VectorXd y = g_new - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const double rho = 1.0 / sy;
        h_inv = (identity - rho * s * y.transpose()) * h_inv *
                    (identity - rho * y * s.transpose()) +
                rho * s * s.transpose();
        fresh = false;
      }
      x = x_new;
      f = f_new;
      g = g_new;
    }

    // Snap the crystal to the optimal wall orientation before polishing. The
    // rotation can kick the gradient back up; the damped Newton stage below
    // absorbs that rather than bouncing back into BFGS.
    align_to_wall(x, sys);
    f = planar_energy(x, sys);
    g = planar_gradient(x, sys);

    const Eigen::MatrixXd h = planar_hessian_scaled(unpack(x), sys);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success)
      throw NoConvergence("find_equilibrium: Hessian eigensolver failed");

    if (es.eigenvalues()(0) <= 0.0) {
      // Stationary but indefinite: this is a saddle, not a minimum. The
      // energy decreases quadratically along the negative-curvature
      // direction, so step off it and resume the search.
      const Eigen::VectorXd v = es.eigenvectors().col(0);
      double alpha_found = 0.0, sign_found = 0.0;
      for (const double sign : {1.0, -1.0}) {
        for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
          double ft;
          try {
            ft = planar_energy(x + (sign * alpha) * v, sys);
          } catch (const CoincidentIons&) {
            continue;
          }
          if (ft < f - 1e-14 * std::abs(f)) {
            alpha_found = alpha;
            sign_found = sign;
            break;
          }
        }
        if (alpha_found > 0.0) break;
      }
      if (alpha_found == 0.0)
        throw SaddleDetected(
            "find_equilibrium: converged to a saddle (non-positive-definite "
            "planar Hessian) and could not escape");
      x += (sign_found * alpha_found) * v;
      f = planar_energy(x, sys);
      g = planar_gradient(x, sys);
      continue;
    }

    // Trust-region Newton polish. Crystal rotations (global, and internal
    // ring rotations in shell-structured crystals) give the Hessian
    // nearly-zero eigenvalues whose energy valleys are sinusoidal, so an
    // uncapped Newton step overshoots the valley scale and oscillates. The
    // step cap walks down such valleys monotonically; near the minimum the
    // quadratic model takes over and steps are accepted on gradient
    // reduction, where energy differences are already below rounding.
    double mu = 1e-9;
    double cap = 0.5;
    for (int k = 0; k < 500 && g.norm() > opts.tolerance; ++k) {
      const Eigen::MatrixXd hk =
          planar_hessian_scaled(unpack(x), sys) + mu * identity;
      Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(hk).solve(-g);
      const double len = step.norm();
      if (len > cap) step *= cap / len;
      Eigen::VectorXd x_try = x + step;
      align_to_wall(x_try, sys);
      double f_try;
      try {
        f_try = planar_energy(x_try, sys);
      } catch (const CoincidentIons&) {
        mu *= 10.0;
        cap = std::max(1e-4, 0.5 * cap);
        continue;
      }
      const Eigen::VectorXd g_try = planar_gradient(x_try, sys);
      if (f_try < f - 1e-14 * std::abs(f) || g_try.norm() < g.norm()) {
        x = x_try;
        f = f_try;
        g = g_try;
        mu = std::max(1e-12, mu / 3.0);
        cap = std::min(1.0, 1.5 * cap);
      } else {
        mu *= 10.0;
        cap = std::max(1e-4, 0.5 * cap);
        if (mu > 1e3) break;
      }
    }
    if (g.norm() > opts.tolerance)
      throw NoConvergence("find_equilibrium: Newton polish stalled at |g|=" +
                          std::to_string(g.norm()));

    EquilibriumConfiguration eq;
    eq.positions = unpack(x);
    eq.energy = planar_energy(x, sys);
    eq.gradient_norm = g.norm();
    eq.seed_descriptor = descriptor;
    return eq;
  }
  throw NoConvergence("find_equilibrium: repeated saddle escapes did not settle");
}

EquilibriumConfiguration find_equilibrium(const System& sys,
                                          const MinimizerOptions& opts) {
  const double spacing = (sys.n() > 1) ? two_ion_separation(sys) : 1.0;
  auto seed = seed_lattice(sys.n(), spacing);
  // The bare lattice carries exact mirror symmetries that the gradient flow
  // preserves, which can park the search on a saddle. A tiny deterministic
  // jitter breaks them; user-provided seeds are taken verbatim.
  if (sys.n() > 1) {
    Rng jitter(0x7a1b2c3d, static_cast<std::uint64_t>(sys.n()));
    for (auto& p : seed) {
      p.x += 1e-3 * spacing * jitter.gaussian();
      p.y += 1e-3 * spacing * jitter.gaussian();
    }
  }
  auto eq = find_equilibrium(seed, sys, opts);
  eq.seed_descriptor = "triangular(a=" + std::to_string(spacing) + ")+jitter" +
                       (opts.annealing_prepass ? "+annealed" : "");
  return eq;
}

}  // namespace pentrap

#include "pentrap/forces.hpp"

#include <cmath>
#include <string>

namespace pentrap {

void CrystalState::validate(const System& sys) const {
  if (n() != sys.n())
    throw ValidationError("CrystalState: ion count " + std::to_string(n()) +
                          " does not match configured N=" + std::to_string(sys.n()));
  if (static_cast<int>(velocities.size()) != n())
    throw ValidationError("CrystalState: positions/velocities size mismatch");
  if (!finite()) throw ValidationError("CrystalState: non-finite entry");
}

namespace {

[[noreturn]] void throw_coincident(int j, int k, double r) {
  throw CoincidentIons("ions " + std::to_string(j) + " and " + std::to_string(k) +
                       " closer than the minimum separation (r=" + std::to_string(r) +
                       " internal units)");
}

}  // namespace

double potential_energy_scaled(const std::vector<Vec3>& positions, const System& sys) {
  const double wp2 = sys.sf.perp * sys.sf.perp;
  const double ww2 = sys.sf.wall * sys.sf.wall;
  const int n = static_cast<int>(positions.size());

  double trap = 0.0;
  for (const auto& p : positions) {
    trap += 0.5 * (p.z * p.z + wp2 * (p.x * p.x + p.y * p.y) +
                   ww2 * (p.x * p.x - p.y * p.y));
  }

  double coulomb = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double r = (positions[j] - positions[k]).norm();
      if (r < sys.min_separation) throw_coincident(j, k, r);
      coulomb += 1.0 / r;
    }
  }
  return trap + coulomb;
}

void position_force_scaled(const std::vector<Vec3>& positions, const System& sys,
                           std::vector<Vec3>& force_out) {
  const double wx2 = sys.sf.perp * sys.sf.perp + sys.sf.wall * sys.sf.wall;
  const double wy2 = sys.sf.perp * sys.sf.perp - sys.sf.wall * sys.sf.wall;
  const int n = static_cast<int>(positions.size());

  force_out.assign(positions.size(), Vec3{});
  for (int j = 0; j < n; ++j) {
    const Vec3& p = positions[j];
    force_out[j].x -= wx2 * p.x;
    force_out[j].y -= wy2 * p.y;
    force_out[j].z -= p.z;
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const Vec3 d = positions[j] - positions[k];
      const double r2 = d.norm2();
      const double r = std::sqrt(r2);
      if (r < sys.min_separation) throw_coincident(j, k, r);
      const double inv_r3 = 1.0 / (r2 * r);
      const Vec3 f = inv_r3 * d;  // repulsive, pushes j away from k
      force_out[j] += f;
      force_out[k] -= f;
    }
  }
}

void accelerations_scaled(const CrystalState& state, const System& sys,
                          std::vector<Vec3>& accel_out) {
  position_force_scaled(state.positions, sys, accel_out);
  const double wc = sys.sf.c_prime;
  const int n = state.n();
  for (int j = 0; j < n; ++j) {
    accel_out[j].x += wc * state.velocities[j].y;
    accel_out[j].y -= wc * state.velocities[j].x;
  }
}

double kinetic_energy_scaled(const CrystalState& state) {
  double t = 0.0;
  for (const auto& v : state.velocities) t += v.norm2();
  return 0.5 * t;
}

double total_potential_energy(const CrystalState& state, const System& sys) {
  state.validate(sys);
  return potential_energy_scaled(state.positions, sys) * sys.scales.energy;
}

std::vector<Vec3> accelerations(const CrystalState& state, const System& sys) {
  state.validate(sys);
  std::vector<Vec3> a;
  accelerations_scaled(state, sys, a);
  for (auto& v : a) v *= sys.scales.acceleration;
  return a;
}

EnergyBreakdown total_energy(const CrystalState& state, const System& sys) {
  state.validate(sys);
  EnergyBreakdown e;
  e.kinetic = kinetic_energy_scaled(state) * sys.scales.energy;
  e.potential = potential_energy_scaled(state.positions, sys) * sys.scales.energy;
  e.total = e.kinetic + e.potential;
  return e;
}

Eigen::MatrixXd planar_hessian_scaled(const std::vector<Vec3>& positions,
                                      const System& sys) {
  const int n = static_cast<int>(positions.size());
  const double wx2 = sys.sf.perp * sys.sf.perp + sys.sf.wall * sys.sf.wall;
  const double wy2 = sys.sf.perp * sys.sf.perp - sys.sf.wall * sys.sf.wall;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    h(2 * j, 2 * j) = wx2;
    h(2 * j + 1, 2 * j + 1) = wy2;
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const Vec3 d = positions[j] - positions[k];
      const double r2 = d.x * d.x + d.y * d.y;
      const double r = std::sqrt(r2);
      if (r < sys.min_separation) throw_coincident(j, k, r);
      const double inv_r5 = 1.0 / (r2 * r2 * r);
      const double inv_r3 = 1.0 / (r2 * r);
      // d^2(1/r)/dd_a dd_b = 3 d_a d_b / r^5 - delta_ab / r^3
      const double pxx = 3.0 * d.x * d.x * inv_r5 - inv_r3;
      const double pyy = 3.0 * d.y * d.y * inv_r5 - inv_r3;
      const double pxy = 3.0 * d.x * d.y * inv_r5;
      const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
      h(xj, xj) += pxx; h(yj, yj) += pyy;
      h(xj, yj) += pxy; h(yj, xj) += pxy;
      h(xk, xk) += pxx; h(yk, yk) += pyy;
      h(xk, yk) += pxy; h(yk, xk) += pxy;
      h(xj, xk) -= pxx; h(xk, xj) -= pxx;
      h(yj, yk) -= pyy; h(yk, yj) -= pyy;
      h(xj, yk) -= pxy; h(yk, xj) -= pxy;
      h(yj, xk) -= pxy; h(xk, yj) -= pxy;
    }
  }
  return h;
}

Eigen::MatrixXd axial_hessian_scaled(const std::vector<Vec3>& positions,
                                     const System& sys) {
  const int n = static_cast<int>(positions.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // trap term, omega_par^2 = 1
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const Vec3 d = positions[j] - positions[k];
      const double r2 = d.x * d.x + d.y * d.y;
      const double r = std::sqrt(r2);
      if (r < sys.min_separation) throw_coincident(j, k, r);
      const double inv_r3 = 1.0 / (r2 * r);
      // d^2(1/r)/dz_j dz_j = -1/r^3 at z = 0; cross term +1/r^3
      h(j, j) -= inv_r3;
      h(k, k) -= inv_r3;
      h(j, k) += inv_r3;
      h(k, j) += inv_r3;
    }
  }
  return h;
}

}  // namespace pentrap

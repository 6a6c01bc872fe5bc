#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pentrap/state.hpp"
#include "pentrap/trap.hpp"

namespace pentrap {

// Rotating-frame effective potential and its derivatives. The internal-unit
// potential of a configuration is
//
//   Phi = sum_j [ z_j^2/2 + wp^2 (x_j^2+y_j^2)/2 + ww^2 (x_j^2-y_j^2)/2 ]
//       + sum_{j<k} 1/r_jk
//
// with wp = omega_perp/omega_par and ww = omega_w/omega_par. All routines
// throw CoincidentIons when a pair distance falls below sys.min_separation.

// Potential energy, internal units.
double potential_energy_scaled(const std::vector<Vec3>& positions, const System& sys);

// -dPhi/dr for every ion (the position-dependent force; mass is 1), internal units.
void position_force_scaled(const std::vector<Vec3>& positions, const System& sys,
                           std::vector<Vec3>& force_out);

// Right-hand side of the velocity equations, including the velocity-dependent
// omega_c' terms, internal units.
void accelerations_scaled(const CrystalState& state, const System& sys,
                          std::vector<Vec3>& accel_out);

// SI-facing wrappers.
double total_potential_energy(const CrystalState& state, const System& sys);  // J
std::vector<Vec3> accelerations(const CrystalState& state, const System& sys);  // m/s^2

struct EnergyBreakdown {
  double kinetic = 0.0;    // J
  double potential = 0.0;  // J
  double total = 0.0;      // J
};

// Rotating-frame energy H = T + V of a state.
EnergyBreakdown total_energy(const CrystalState& state, const System& sys);

// Kinetic energy in internal units (m = 1).
double kinetic_energy_scaled(const CrystalState& state);

// Exact second derivatives of Phi at a planar configuration (z = 0 assumed),
// internal units. The planar block is 2N x 2N with basis x1,y1,...,xN,yN;
// the axial block is N x N. Cross blocks vanish identically at z = 0.
Eigen::MatrixXd planar_hessian_scaled(const std::vector<Vec3>& positions, const System& sys);
Eigen::MatrixXd axial_hessian_scaled(const std::vector<Vec3>& positions, const System& sys);

}  // namespace pentrap

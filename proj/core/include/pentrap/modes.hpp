#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "pentrap/equilibrium.hpp"
#include "pentrap/trap.hpp"

namespace pentrap {

/**
 * Linearization of the dynamics about a planar equilibrium, internal units
 * (ion mass = 1). The planar basis is ordered x1,y1,...,xN,yN.
 *
 * k_perp and k_par are the exact analytic second-derivative matrices of the
 * potential. The Lorentz coupling enters through the antisymmetric matrix L
 * with per-ion blocks [[0, wc'], [-wc', 0]].
 */
struct LinearizedModel {
  Eigen::MatrixXd k_perp;  // 2N x 2N
  Eigen::MatrixXd k_par;   // N x N
  double omega_c_prime = 0.0;           // internal units
  std::vector<Vec3> equilibrium_positions;

  int n_ions() const { return static_cast<int>(equilibrium_positions.size()); }

  Eigen::MatrixXd lorentz() const;        // 2N x 2N
  Eigen::MatrixXd energy_matrix() const;  // 4N x 4N, diag(k_perp, I)
};

// Throws NotPositiveDefinite when either stiffness matrix fails a
// definiteness check (saddle or unconverged equilibrium).
LinearizedModel build_linearized_model(const EquilibriumConfiguration& eq,
                                       const System& sys);

// Axial-only variant for thermal snapshots: stiffness of the out-of-plane
// motion at an arbitrary planar configuration.
Eigen::MatrixXd axial_stiffness(const std::vector<Vec3>& planar_positions,
                                const System& sys);

/**
 * Out-of-plane (drumhead) modes. frequencies are internal angular units
 * sorted descending, so index 0 is the center-of-mass mode at omega_par.
 * eigenvectors columns are orthonormal; the sign gauge makes the
 * largest-magnitude component positive.
 */
struct DrumheadModes {
  Eigen::VectorXd frequencies;   // N, descending
  Eigen::MatrixXd eigenvectors;  // N x N, column n = mode n
};

DrumheadModes drumhead_modes(const LinearizedModel& model);
DrumheadModes drumhead_modes_of(const Eigen::MatrixXd& k_par);

enum class Branch { ExB, Cyclotron };

/**
 * In-plane magnetized modes from the generalized Hermitian eigenproblem
 * D_H u = omega E u with E = diag(k_perp, I). Only the 2N positive-frequency
 * solutions are kept, sorted ascending; the first N are the ExB branch and
 * the last N the cyclotron branch.
 *
 * Eigenvectors are E-normalized (<u|E|u> = 1, internal energy units) with
 * the global phase fixed by making the largest-magnitude component of the
 * position part real positive.
 */
struct InPlaneModes {
  Eigen::VectorXd frequencies;    // 2N, ascending, internal angular units
  Eigen::MatrixXcd eigenvectors;  // 4N x 2N, (position; velocity) stacking
  Eigen::VectorXd energy_norms;   // <u|E|u> per mode (1 after normalization)
  double max_eigen_residual = 0.0;    // max ||D_H u - w E u|| / ||E u||
  double spectral_gap_ratio = 0.0;    // branch gap / ExB bandwidth
  int n = 0;                          // ion count

  Branch branch(int mode) const { return mode < n ? Branch::ExB : Branch::Cyclotron; }

  Eigen::VectorXcd position_part(int mode) const {
    return eigenvectors.col(mode).head(2 * n);
  }
  Eigen::VectorXcd velocity_part(int mode) const {
    return eigenvectors.col(mode).tail(2 * n);
  }
};

// Set zero_lorentz to solve the bare SHO problem (L = 0); branch labels are
// meaningless in that limit.
InPlaneModes inplane_modes(const LinearizedModel& model, bool zero_lorentz = false);

// Single-ion analytic frequencies in the rotating frame (wall ignored),
// internal units: omega_pm = (sqrt(wc'^2 + 4 wp^2) +- wc') / 2.
double single_ion_omega_plus(const ScaledFrequencies& sf);
double single_ion_omega_minus(const ScaledFrequencies& sf);

}  // namespace pentrap

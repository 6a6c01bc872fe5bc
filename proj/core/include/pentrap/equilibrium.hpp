#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pentrap/state.hpp"
#include "pentrap/trap.hpp"

namespace pentrap {

// Planar minimum-energy configuration, internal units. z is identically zero.
struct EquilibriumConfiguration {
  std::vector<Vec3> positions;   // z == 0
  double energy = 0.0;           // minimized potential, internal units
  double gradient_norm = 0.0;    // residual force norm at the minimum
  std::string seed_descriptor;

  int n() const { return static_cast<int>(positions.size()); }

  CrystalState to_state() const {
    CrystalState s;
    s.positions = positions;
    s.velocities.assign(positions.size(), Vec3{});
    return s;
  }
};

struct MinimizerOptions {
  double tolerance = 1e-10;   // force-norm target, internal units
  int max_iterations = 20000;
  bool annealing_prepass = false;  // stochastic pre-pass before the local search
  std::uint64_t annealing_seed = 0;
};

// Sites of a triangular lattice closest to the origin, deterministic ordering
// by radius then angle. spacing in internal units; z == 0.
std::vector<Vec3> seed_lattice(int n_ions, double spacing);

// Local minimizer of the planar potential (quasi-Newton with backtracking
// line search, analytic gradient, Newton polish near the optimum). Throws
// NoConvergence or SaddleDetected.
EquilibriumConfiguration find_equilibrium(const std::vector<Vec3>& seed,
                                          const System& sys,
                                          const MinimizerOptions& opts = {});

// Convenience: seed with a triangular lattice at the two-ion equilibrium
// spacing and minimize.
EquilibriumConfiguration find_equilibrium(const System& sys,
                                          const MinimizerOptions& opts = {});

// Separation of the two-ion equilibrium along the soft (y) axis, internal
// units: d = (2 / (wp^2 - ww^2))^(1/3).
double two_ion_separation(const System& sys);

}  // namespace pentrap

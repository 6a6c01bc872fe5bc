#pragma once

#include <complex>
#include <vector>

#include "pentrap/forces.hpp"
#include "pentrap/modes.hpp"
#include "pentrap/state.hpp"

namespace pentrap {

// Which coordinate series a trajectory keeps. Production runs at large N
// record only the axes a study consumes; Full retains everything.
enum class RecordSet { Full, Positions, Axial, InPlane };

struct IntegratorConfig {
  double dt = 0.0;       // s; <= 0 selects the default 2pi/(100 omega_+)
  double t_total = 0.0;  // s
  int record_stride = 1;
  int energy_check_stride = 1000;
  RecordSet record = RecordSet::Full;
  bool allow_large_dt = false;  // override the dt <= 2pi/(40 omega_+) guard

  void validate() const;
};

/**
 * Recorded samples of a molecular-dynamics run, SI units. Series are stored
 * per axis and ion as series[ion][sample]; axes excluded by the record set
 * are empty. The energy series holds the rotating-frame H = T + V at the
 * energy-check instants.
 */
struct Trajectory {
  std::vector<std::vector<double>> x, y, z;     // m
  std::vector<std::vector<double>> vx, vy, vz;  // m/s
  std::vector<double> times;  // s

  std::vector<double> energy_times;  // s
  std::vector<double> kinetic, potential, total;  // J

  double dt = 0.0;         // integrator step actually used [s]
  double sample_dt = 0.0;  // spacing of recorded samples [s]
  CrystalState final_state;  // internal units

  int n_ions() const { return static_cast<int>(times.empty() ? 0 : x_or_z().size()); }
  int n_samples() const { return static_cast<int>(times.size()); }

  // Fractional spread of the total energy: (max - min) / |mean|.
  double energy_fluctuation() const;
  // Same spread relative to the thermal (excess) energy H - reference.
  double thermal_energy_fluctuation(double reference_energy_joule) const;

 private:
  const std::vector<std::vector<double>>& x_or_z() const {
    return x.empty() ? z : x;
  }
};

// Default integration step 2pi/(100 omega_+) [s], stricter than the
// enforcement bound 2pi/(40 omega_+).
double default_time_step(const System& sys);

// Classic fixed-step RK4 on the full nonlinear equations of motion.
// Throws StepTooLarge when dt exceeds the guard without allow_large_dt,
// NumericalBlowup when a coordinate becomes non-finite.
Trajectory integrate(const CrystalState& initial, const System& sys,
                     const IntegratorConfig& cfg);

// Harmonic evolution of the in-plane mode expansion at time t (internal
// units): q(t) = sum_n 2 Re[A_n exp(-i w_n t) u_n]. The cross-check oracle
// for integrate() at small amplitude.
struct InPlaneDeviation {
  std::vector<Vec3> displacements;  // z = 0
  std::vector<Vec3> velocities;     // z = 0
};

InPlaneDeviation harmonic_evolve(const InPlaneModes& modes,
                                 const std::vector<std::complex<double>>& amplitudes,
                                 double t);

// Axial analogue built on the drumhead eigenvectors.
struct AxialDeviation {
  std::vector<double> z;
  std::vector<double> vz;
};

AxialDeviation harmonic_evolve_axial(const DrumheadModes& modes,
                                     const std::vector<std::complex<double>>& amplitudes,
                                     double t);

}  // namespace pentrap

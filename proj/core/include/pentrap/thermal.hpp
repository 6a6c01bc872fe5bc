#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "pentrap/equilibrium.hpp"
#include "pentrap/modes.hpp"
#include "pentrap/rng.hpp"
#include "pentrap/state.hpp"

namespace pentrap {

struct SamplerConfig {
  double t_perp = 0.0;  // K
  double t_par = 0.0;   // K
  int mh_scans = 200000;          // measurement scans after burn-in
  int mh_burn_in_scans = 1000;
  int snapshot_stride = 100;      // scans between retained snapshots
  double mh_step_radius_m = 0.0;  // meters; <= 0 selects the adaptive radius
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Stationary in-plane configurations drawn from exp(-Phi / k_B T_perp) with
// z pinned to zero, plus chain diagnostics. Positions internal units.
struct SnapshotEnsemble {
  std::vector<std::vector<Vec3>> snapshots;
  double acceptance_rate = 0.0;         // measurement phase
  double mean_delta_phi_per_ion = 0.0;  // <Phi - Phi_0>/N, internal units
  double step_radius = 0.0;             // frozen proposal radius, internal units
};

// Metropolis accept rule for an energy increase delta (internal units) at
// scaled temperature theta = k_B T / E0. Downhill moves always accept.
bool mh_accept(double delta, double theta, Rng& rng);

// In-plane velocity kicks: i.i.d. zero-mean Gaussians with variance k_B T/m
// per Cartesian component (internal units). z components are zero.
std::vector<Vec3> sample_velocity_kicks(int n_ions, double temperature_kelvin,
                                        const Scales& scales, Rng& rng);

// Complex amplitudes of the in-plane modes for an initial condition with
// dr = 0: A_n = i w_n <u_n^r | v> for E-normalized eigenvectors.
std::vector<std::complex<double>> project_mode_amplitudes(
    const std::vector<Vec3>& velocities, const InPlaneModes& modes);

// General phase-space projection A_n = <u_n| E |(dr, v)> used by the
// harmonic-evolution cross-checks.
std::vector<std::complex<double>> project_phase_space(
    const std::vector<Vec3>& displacements, const std::vector<Vec3>& velocities,
    const InPlaneModes& modes, const LinearizedModel& model);

// Metropolis-Hastings chain over the in-plane coordinates at T_perp. One
// scan displaces every ion once, sequentially, each within a disc of the
// current proposal radius. With t_perp == 0 the equilibrium itself is
// returned as the sole snapshot and no chain is run.
SnapshotEnsemble mh_sample_inplane(const EquilibriumConfiguration& eq,
                                   const System& sys, const SamplerConfig& sampler,
                                   std::uint64_t stream = 0);

// Thermal axial initialization: drumhead mode amplitudes with independent
// Gaussian real and imaginary parts giving mean mode energy k_B T, then
// assembled into z and v_z through the eigenvector matrix. Internal units.
struct AxialSample {
  std::vector<double> z;
  std::vector<double> vz;
};

AxialSample sample_axial_thermal(const DrumheadModes& modes,
                                 double temperature_kelvin, const Scales& scales,
                                 Rng& rng);

// Monte-Carlo comparison of two SHO initialization methods (independent
// Gaussian x,v versus a velocity kick at 2T followed by a random mixing
// phase). Arguments in any consistent unit system; k_B enters explicitly.
struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct KickMoments {
  MomentEstimate x2, v2, xv, x2v2;
};

struct ShoKickReport {
  KickMoments method1;  // independent Gaussian x and v
  KickMoments method2;  // velocity kick at 2T + uniform mixing phase
  double expected_x2 = 0.0;       // k_B T / k
  double expected_v2 = 0.0;       // k_B T / m
  double expected_x2v2_m1 = 0.0;  // (k_B T)^2 / (k m)
  double expected_x2v2_m2 = 0.0;  // 1.5 (k_B T)^2 / (k m)
};

ShoKickReport sho_kick_moment_study(double k, double m, double temperature_kelvin,
                                    int n_samples, Rng& rng);

}  // namespace pentrap

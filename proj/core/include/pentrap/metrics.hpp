#pragma once

#include <Eigen/Dense>

#include "pentrap/modes.hpp"
#include "pentrap/trap.hpp"

namespace pentrap {

// Ratio of the DC components of potential and kinetic energy of an in-plane
// mode: <u_r|K|u_r> / (w^2 <u_r|u_r>) with unit ion mass.
double energy_ratio(const InPlaneModes& modes, int mode, const LinearizedModel& model);

// Normalized rotation sense of an in-plane mode: +1 pure counterclockwise,
// -1 pure clockwise. Satisfies R_n = 1 + (wc'/w_n) chi_n.
double helicity(const InPlaneModes& modes, int mode, const LinearizedModel& model);

// Linear approximation of R_n across the cyclotron branch:
// 1 - wc'/w+ + (wc'/w+^2)(w_n - w+). Units cancel, so any consistent
// frequency units work.
double cyclotron_ratio_approx(double omega_n, double omega_c_prime, double omega_plus);

// Mean squared thermal displacement of an in-plane mode at temperature T:
// (2/(1+R_n)) k_B T / (m w_n^2), in m^2.
double mode_msd(const InPlaneModes& modes, int mode, const LinearizedModel& model,
                double temperature_kelvin, const System& sys);

struct EntropySupport {
  Eigen::VectorXd entropy_bits;  // H_n = -sum_j |b_jn|^2 log2 |b_jn|^2
  Eigen::VectorXd support;       // S_n = 2^H_n, effective supporting-ion count
};

EntropySupport mode_entropy_support(const DrumheadModes& modes);

// Long-wavelength reference frequencies for the two drumhead branches below
// the center-of-mass mode [rad/s]: tilt = sqrt(w_par^2 - w_perp^2),
// potato_chip = sqrt(w_par^2 - 7 w_perp^2 / 4). Throws ImaginaryFrequency
// when w_par^2 <= 7 w_perp^2 / 4.
struct ColdFluidRefs {
  double tilt = 0.0;
  double potato_chip = 0.0;
};

ColdFluidRefs cold_fluid_reference(const CharacteristicFrequencies& freqs);

// Convenience table for export: all per-mode in-plane metrics at once.
struct InPlaneMetricsTable {
  Eigen::VectorXd r;       // energy ratios
  Eigen::VectorXd chi;     // helicities
  Eigen::VectorXd msd_m2;  // thermal displacement at the reference temperature
  double reference_temperature_kelvin = 0.0;
};

InPlaneMetricsTable inplane_metrics(const InPlaneModes& modes,
                                    const LinearizedModel& model,
                                    double temperature_kelvin, const System& sys);

}  // namespace pentrap

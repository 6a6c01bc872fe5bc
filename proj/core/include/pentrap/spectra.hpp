#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pentrap/dynamics.hpp"

namespace pentrap {

enum class SpectrumKind { Psd, Odf };
enum class SpectrumAxis { Axial, InPlane };

struct Spectrum {
  std::vector<double> frequency_hz;  // strictly increasing
  std::vector<double> values;        // PSD [m^2/Hz] or bright fraction
  SpectrumKind kind = SpectrumKind::Psd;
  SpectrumAxis axis = SpectrumAxis::Axial;
  int n_realizations = 0;
};

/**
 * One-sided power spectral density of the recorded ion motion, averaged over
 * the trajectory ensemble and summed over ions. The transform is the plain
 * rectangular-window DFT with 1/sqrt(T_tot) normalization; for the in-plane
 * axis the PSD is P_x + P_y of the rotating-frame coordinates. Interior bins
 * carry the positive- and negative-frequency contributions; the DC and
 * Nyquist bins are single-counted so the bin sum times the bin width equals
 * the time-averaged total squared displacement.
 */
Spectrum psd(const std::vector<Trajectory>& ensemble, SpectrumAxis axis);

struct OdfConfig {
  double f0 = 0.0;     // spin-dependent force magnitude [N]
  double mu_r = 0.0;   // difference frequency [rad/s]
  double tau = 0.0;    // arm time [s]
  double t_pi = 0.0;   // echo-pulse duration [s]
  double gamma = 0.0;  // off-resonant scattering rate [1/s]

  double sequence_length() const { return 2.0 * tau + t_pi; }
  void validate() const;
};

/**
 * Fraction of ions in the bright state after the Ramsey/spin-echo sequence,
 * averaged over ions and realizations. Per ion the accumulated phase is
 *
 *   A_j = (2 F0/hbar) Int g(t) z_j(t) cos(mu_R t) dt,
 *
 * with g = +1 on (0,tau), 0 on (tau,tau+t_pi), -1 afterwards, integrated by
 * the trapezoidal rule on the recorded grid, and
 * P_j = (1 - exp(-2 Gamma tau) cos A_j)/2. The force exerts no back-action
 * on the recorded motion (mean-field treatment).
 */
double odf_bright_fraction(const std::vector<Trajectory>& ensemble,
                           const OdfConfig& odf);

// Bright fraction versus difference frequency over a scan grid, reusing one
// trajectory ensemble for every grid point.
Spectrum odf_spectrum(const std::vector<Trajectory>& ensemble, const OdfConfig& base,
                      const std::vector<double>& mu_r_grid_hz, int n_threads = 1);

// Factory form: the ensemble is produced once, then scanned.
Spectrum odf_spectrum(const std::function<std::vector<Trajectory>()>& make_ensemble,
                      const OdfConfig& base, const std::vector<double>& mu_r_grid_hz,
                      int n_threads = 1);

// dB helper for PSD comparisons: 10 log10(v).
double to_db(double value);

}  // namespace pentrap

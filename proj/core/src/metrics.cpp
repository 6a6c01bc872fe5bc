#include "pentrap/metrics.hpp"

#include <cmath>

#include "pentrap/constants.hpp"

namespace pentrap {

double energy_ratio(const InPlaneModes& modes, int mode, const LinearizedModel& model) {
  const Eigen::VectorXcd ur = modes.position_part(mode);
  const Eigen::MatrixXcd k = model.k_perp.cast<std::complex<double>>();
  const double w = modes.frequencies(mode);
  return ur.dot(k * ur).real() / (w * w * ur.squaredNorm());
}

double helicity(const InPlaneModes& modes, int mode, const LinearizedModel& model) {
  // <u_r|(-iL)|u_r> / (wc' <u_r|u_r>) with per-ion blocks of -iL/wc' equal to
  // the Pauli y matrix in the (x_j, y_j) basis.
  const Eigen::VectorXcd ur = modes.position_part(mode);
  const int n = model.n_ions();
  std::complex<double> acc(0.0, 0.0);
  const std::complex<double> i_unit(0.0, 1.0);
  for (int j = 0; j < n; ++j) {
    const std::complex<double> x = ur(2 * j);
    const std::complex<double> y = ur(2 * j + 1);
    // sigma_y (x, y) = (-i y, i x)
    acc += std::conj(x) * (-i_unit * y) + std::conj(y) * (i_unit * x);
  }
  return acc.real() / ur.squaredNorm();
}

double cyclotron_ratio_approx(double omega_n, double omega_c_prime, double omega_plus) {
  if (!(omega_plus > 0.0))
    throw ValidationError("cyclotron_ratio_approx: omega_plus must be > 0");
  return 1.0 - omega_c_prime / omega_plus +
         omega_c_prime / (omega_plus * omega_plus) * (omega_n - omega_plus);
}

double mode_msd(const InPlaneModes& modes, int mode, const LinearizedModel& model,
                double temperature_kelvin, const System& sys) {
  if (temperature_kelvin < 0.0)
    throw ValidationError("mode_msd: temperature must be >= 0");
  const double r = energy_ratio(modes, mode, model);
  const double w_si = modes.frequencies(mode) * sys.scales.frequency;
  return 2.0 / (1.0 + r) * constants::k_B * temperature_kelvin /
         (sys.config.ion_mass * w_si * w_si);
}

EntropySupport mode_entropy_support(const DrumheadModes& modes) {
  const int n = static_cast<int>(modes.frequencies.size());
  EntropySupport out;
  out.entropy_bits.resize(n);
  out.support.resize(n);
  for (int m = 0; m < n; ++m) {
    double h = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = modes.eigenvectors(j, m) * modes.eigenvectors(j, m);
      if (p > 0.0) h -= p * std::log2(p);  // 0 log 0 := 0
    }
    out.entropy_bits(m) = h;
    out.support(m) = std::exp2(h);
  }
  return out;
}

ColdFluidRefs cold_fluid_reference(const CharacteristicFrequencies& freqs) {
  const double wpar2 = freqs.omega_par * freqs.omega_par;
  const double wperp2 = freqs.omega_perp * freqs.omega_perp;
  const double chip2 = wpar2 - 1.75 * wperp2;
  // The boundary itself is admissible (zero frequency); only a genuinely
  // negative square is an error.
  if (chip2 < -1e-12 * wpar2)
    throw ImaginaryFrequency("cold_fluid_reference: omega_par^2 < 7 omega_perp^2 / 4");
  ColdFluidRefs refs;
  refs.tilt = std::sqrt(wpar2 - wperp2);
  refs.potato_chip = std::sqrt(std::max(0.0, chip2));
  return refs;
}

InPlaneMetricsTable inplane_metrics(const InPlaneModes& modes,
                                    const LinearizedModel& model,
                                    double temperature_kelvin, const System& sys) {
  const int count = static_cast<int>(modes.frequencies.size());
  InPlaneMetricsTable t;
  t.r.resize(count);
  t.chi.resize(count);
  t.msd_m2.resize(count);
  t.reference_temperature_kelvin = temperature_kelvin;
  for (int i = 0; i < count; ++i) {
    t.r(i) = energy_ratio(modes, i, model);
    t.chi(i) = helicity(modes, i, model);
    t.msd_m2(i) = mode_msd(modes, i, model, temperature_kelvin, sys);
  }
  return t;
}

}  // namespace pentrap

#include "pentrap/trap.hpp"

#include <cmath>
#include <string>

#include "pentrap/constants.hpp"

namespace pentrap {

void TrapConfig::validate() const {
  if (!(ion_mass > 0.0)) throw ValidationError("TrapConfig: ion_mass must be > 0");
  if (!(ion_charge > 0.0)) throw ValidationError("TrapConfig: ion_charge must be > 0");
  if (!(b_field > 0.0)) throw ValidationError("TrapConfig: b_field must be > 0");
  if (!(v0 > 0.0)) throw ValidationError("TrapConfig: v0 must be > 0");
  if (vw < 0.0) throw ValidationError("TrapConfig: vw must be >= 0");
  if (!(omega_r > 0.0)) throw ValidationError("TrapConfig: omega_r must be > 0");
  if (n_ions < 1) throw ValidationError("TrapConfig: n_ions must be >= 1");
  derive_frequencies(*this);  // throws UnstableTrap on bad planar confinement
}

CharacteristicFrequencies derive_frequencies(const TrapConfig& cfg) {
  CharacteristicFrequencies f;
  f.omega_c = cfg.ion_charge * cfg.b_field / cfg.ion_mass;
  f.omega_c_prime = f.omega_c - 2.0 * cfg.omega_r;
  f.omega_par = std::sqrt(2.0 * cfg.ion_charge * cfg.v0 / cfg.ion_mass);
  f.omega_w = std::sqrt(2.0 * cfg.ion_charge * cfg.vw / cfg.ion_mass);

  const double wp2 = f.omega_c * cfg.omega_r - cfg.omega_r * cfg.omega_r -
                     0.5 * f.omega_par * f.omega_par;
  if (wp2 <= 0.0)
    throw UnstableTrap("derive_frequencies: omega_perp^2 <= 0 (no radial confinement)");
  if (wp2 <= f.omega_w * f.omega_w)
    throw UnstableTrap("derive_frequencies: omega_perp^2 <= omega_w^2 (wall overpowers radial confinement)");
  f.omega_perp = std::sqrt(wp2);
  return f;
}

double Scales::thermal_energy(double temperature_kelvin) const {
  return constants::k_B * temperature_kelvin / energy;
}

System System::create(const TrapConfig& cfg, double min_separation_m) {
  cfg.validate();
  System sys;
  sys.config = cfg;
  sys.freqs = derive_frequencies(cfg);

  const double w = sys.freqs.omega_par;
  Scales& s = sys.scales;
  s.frequency = w;
  s.time = 1.0 / w;
  s.length = std::cbrt(constants::k_e * cfg.ion_charge * cfg.ion_charge /
                       (cfg.ion_mass * w * w));
  s.velocity = s.length * w;
  s.acceleration = s.length * w * w;
  s.energy = cfg.ion_mass * w * w * s.length * s.length;

  sys.sf.perp = sys.freqs.omega_perp / w;
  sys.sf.wall = sys.freqs.omega_w / w;
  sys.sf.c_prime = sys.freqs.omega_c_prime / w;

  sys.min_separation = min_separation_m / s.length;
  return sys;
}

TrapConfig trap_from_frequencies(double ion_mass, double ion_charge, int n_ions,
                                 double omega_c, double omega_r,
                                 double omega_par, double omega_w) {
  TrapConfig cfg;
  cfg.ion_mass = ion_mass;
  cfg.ion_charge = ion_charge;
  cfg.n_ions = n_ions;
  cfg.omega_r = omega_r;
  cfg.b_field = ion_mass * omega_c / ion_charge;
  cfg.v0 = ion_mass * omega_par * omega_par / (2.0 * ion_charge);
  cfg.vw = ion_mass * omega_w * omega_w / (2.0 * ion_charge);
  return cfg;
}

}  // namespace pentrap

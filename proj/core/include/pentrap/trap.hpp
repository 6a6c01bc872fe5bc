#pragma once

#include <cstdint>

#include "pentrap/errors.hpp"

namespace pentrap {

/**
 * Trap and crystal parameters, SI units.
 *
 * The electric quadrupole amplitude v0 and the rotating-wall amplitude vw
 * follow the convention omega_par = sqrt(2 e V0 / m) and
 * omega_w = sqrt(2 e Vw / m).
 */
struct TrapConfig {
  double ion_mass = 0.0;    // kg
  double ion_charge = 0.0;  // C
  double b_field = 0.0;     // T, along +z
  double v0 = 0.0;          // axial quadrupole amplitude
  double vw = 0.0;          // rotating-wall amplitude
  double omega_r = 0.0;     // wall rotation frequency [rad/s]
  int n_ions = 0;

  // Throws ValidationError on a malformed field, UnstableTrap when the
  // derived planar confinement is not positive on both axes.
  void validate() const;
};

// Derived angular frequencies [rad/s].
struct CharacteristicFrequencies {
  double omega_c = 0.0;        // bare cyclotron, e B / m
  double omega_c_prime = 0.0;  // effective cyclotron, omega_c - 2 omega_r
  double omega_par = 0.0;      // axial trapping, sqrt(2 e V0 / m)
  double omega_perp = 0.0;     // radial trapping, sqrt(omega_c omega_r - omega_r^2 - omega_par^2/2)
  double omega_w = 0.0;        // wall correction, sqrt(2 e Vw / m)
};

// Deterministic and pure. Throws UnstableTrap when omega_perp^2 <= 0 or
// omega_perp^2 <= omega_w^2.
CharacteristicFrequencies derive_frequencies(const TrapConfig& cfg);

/**
 * Internal unit system.
 *
 * Everything inside the library is dimensionless: time in 1/omega_par,
 * length in l0 = (k_e e^2 / (m omega_par^2))^(1/3), energy in
 * m omega_par^2 l0^2. In these units the ion mass, the Coulomb prefactor
 * k_e e^2 and the axial trap frequency are all exactly 1. SI conversion
 * happens only at I/O boundaries.
 */
struct Scales {
  double length = 0.0;        // l0 [m]
  double time = 0.0;          // 1/omega_par [s]
  double velocity = 0.0;      // l0 omega_par [m/s]
  double acceleration = 0.0;  // l0 omega_par^2 [m/s^2]
  double energy = 0.0;        // m omega_par^2 l0^2 [J]
  double frequency = 0.0;     // omega_par [rad/s]

  // k_B T expressed in internal energy units.
  double thermal_energy(double temperature_kelvin) const;
};

// Frequencies divided by omega_par (so the axial frequency is 1).
struct ScaledFrequencies {
  double perp = 0.0;
  double wall = 0.0;
  double c_prime = 0.0;
};

/**
 * Bundle of SI configuration, derived frequencies and the internal unit
 * system. Every physics routine takes one of these; construction validates
 * the trap.
 */
struct System {
  TrapConfig config;
  CharacteristicFrequencies freqs;
  Scales scales;
  ScaledFrequencies sf;
  double min_separation = 0.0;  // internal units; Coulomb guard

  static System create(const TrapConfig& cfg, double min_separation_m = 1e-12);

  int n() const { return config.n_ions; }
};

// Back out B_z, V0, VW from a characteristic-frequency set (the frequencies
// are the primary inputs; voltages are derived for display).
TrapConfig trap_from_frequencies(double ion_mass, double ion_charge, int n_ions,
                                 double omega_c, double omega_r,
                                 double omega_par, double omega_w);

}  // namespace pentrap

#pragma once

namespace pentrap::constants {

// CODATA 2018 values, SI.
inline constexpr double k_e = 8.9875517923e9;        // Coulomb constant [N m^2 C^-2]
inline constexpr double k_B = 1.380649e-23;          // Boltzmann [J/K] (exact)
inline constexpr double hbar = 1.054571817e-34;      // reduced Planck [J s]
inline constexpr double q_e = 1.602176634e-19;       // elementary charge [C] (exact)
inline constexpr double amu = 1.66053906660e-27;     // atomic mass unit [kg]

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace pentrap::constants

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pentrap/thermal.hpp"
#include "pentrap/trap.hpp"

namespace pentrap {

struct IntegratorSettings {
  double dt = 0.0;          // s; 0 selects the default 2pi/(100 omega_+)
  double t_total = 560e-6;  // s
  int record_stride_axial = 64;   // drumhead PSD sampling
  int record_stride_inplane = 32; // in-plane PSD sampling (covers the cyclotron band)
  int record_stride_odf = 4;      // ODF phase integrals need a finer grid
  int energy_check_stride = 1000;
};

struct OdfSettings {
  double f0 = 6e-23;    // N; calibrated so the c.m. resonance reaches ~0.5
  double gamma = 200.0; // 1/s off-resonant scattering
  double t_pi = 0.0;    // s; idealized instantaneous echo
  double mu_start_hz = 0.0;  // 0 = span the drumhead band automatically
  double mu_stop_hz = 0.0;
  double mu_step_hz = 2.5e3;
};

struct StudyParams {
  std::vector<double> temperatures_k = {0.0, 1e-3, 10e-3};       // MD studies
  std::vector<double> histogram_temperatures_k = {1e-3, 10e-3};  // snapshot study
  double histogram_bin_hz = 500.0;
  double surface_t_start_k = 2e-4;  // fluctuation surface grid
  double surface_t_step_k = 2e-4;
  double surface_t_stop_k = 10e-3;
  double support_t_k = 2e-4;
  double vk_t_k = 10e-3;  // velocity-kick comparison temperature
  int n_snapshots = 2000;
  int n_realizations = 96;
  double sho_k = 1.0;   // appendix study oscillator
  double sho_m = 1.0;
  double sho_t = 300.0;
  long long sho_samples = 1000000;
};

struct RunConfig {
  TrapConfig trap;
  SamplerConfig sampler;
  IntegratorSettings integrator;
  OdfSettings odf;
  StudyParams study;
  std::uint64_t seed = 0;
  bool seed_explicit = false;
  int threads = 0;  // 0 = all hardware threads
  std::string out_dir = "out";
  std::string preset;         // "", "ci" or "paper"
  std::string resolved_json;  // canonical echo of the resolved configuration
  std::uint64_t config_hash = 0;
};

// Parses and validates a JSON run configuration. Unknown keys are rejected;
// parse failures carry line/column diagnostics; an empty file fails
// validation for the missing trap section. Trap stability is checked here
// (UnstableTrap surfaces at parse time).
RunConfig parse_config(const std::filesystem::path& path);

// Scales crystal size and ensemble lengths for desk or full-size runs.
// Recognized names: "ci", "paper". Throws ValidationError otherwise.
void apply_preset(RunConfig& cfg, const std::string& preset);

// Recomputes the canonical resolved echo and its content hash after any
// preset/override mutation, revalidating the trap.
void finalize_config(RunConfig& cfg);

}  // namespace pentrap

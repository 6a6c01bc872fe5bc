#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pentrap/dynamics.hpp"
#include "pentrap/equilibrium.hpp"
#include "pentrap/metrics.hpp"
#include "pentrap/modes.hpp"
#include "pentrap/spectra.hpp"
#include "pentrap/thermal.hpp"

namespace pentrap::io {

// All writers emit SI units and deterministic text (17 significant digits,
// no timestamps), so identical runs produce hash-equal files.

void write_text(const std::filesystem::path& path, std::string_view text);

// Generic CSV: one header line, then rows of doubles.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

// FNV-1a 64-bit content hash, used to fingerprint resolved configurations.
std::uint64_t fnv1a64(std::string_view data);

// Equilibrium: {base}.csv with (index, x_m, y_m) and {base}.json header.
void save_equilibrium(const std::filesystem::path& base,
                      const EquilibriumConfiguration& eq, const System& sys,
                      double tolerance);

// Mode sets: {base}.json (frequencies in Hz, branch labels, per-mode metrics)
// plus {base}_drumhead_vectors.csv and {base}_inplane_vectors.csv.
void save_mode_sets(const std::filesystem::path& base, const DrumheadModes& drumhead,
                    const EntropySupport& entropy, const InPlaneModes& inplane,
                    const InPlaneMetricsTable& metrics, const System& sys);

// Snapshot ensemble: CSV container with one row per (snapshot, ion) and a
// JSON sidecar holding the sampler settings.
void save_snapshots(const std::filesystem::path& base, const SnapshotEnsemble& ens,
                    const SamplerConfig& sampler, const System& sys);

// Spectrum: {base}.csv of (frequency_hz, value) and {base}.json metadata.
void save_spectrum(const std::filesystem::path& base, const Spectrum& spectrum,
                   const std::vector<std::pair<std::string, std::string>>& metadata);

// Trajectory: raw little-endian doubles ({base}.bin) with a JSON sidecar
// describing the layout, strides and seeds.
void save_trajectory(const std::filesystem::path& base, const Trajectory& traj,
                     std::uint64_t seed, std::uint64_t config_hash);

}  // namespace pentrap::io

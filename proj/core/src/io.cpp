#include "pentrap/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "pentrap/constants.hpp"

namespace pentrap::io {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string text;
  for (size_t c = 0; c < header.size(); ++c) {
    if (c) text += ',';
    text += header[c];
  }
  text += '\n';
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      text += format_double(row[c]);
    }
    text += '\n';
  }
  write_text(path, text);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_equilibrium(const fs::path& base, const EquilibriumConfiguration& eq,
                      const System& sys, double tolerance) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(eq.n()));
  for (int j = 0; j < eq.n(); ++j) {
    const auto& p = eq.positions[static_cast<size_t>(j)];
    rows.push_back({static_cast<double>(j), p.x * sys.scales.length,
                    p.y * sys.scales.length});
  }
  write_csv(fs::path(base).concat(".csv"), {"index", "x_m", "y_m"}, rows);

  json header;
  header["n_ions"] = eq.n();
  header["energy_j"] = eq.energy * sys.scales.energy;
  header["gradient_norm_internal"] = eq.gradient_norm;
  header["tolerance_internal"] = tolerance;
  header["seed_descriptor"] = eq.seed_descriptor;
  header["length_scale_m"] = sys.scales.length;
  write_text(fs::path(base).concat(".json"), header.dump(2) + "\n");
}

void save_mode_sets(const fs::path& base, const DrumheadModes& drumhead,
                    const EntropySupport& entropy, const InPlaneModes& inplane,
                    const InPlaneMetricsTable& metrics, const System& sys) {
  const double to_hz = sys.scales.frequency / constants::two_pi;

  json doc;
  doc["n_ions"] = inplane.n;
  json dh = json::array();
  for (int m = 0; m < drumhead.frequencies.size(); ++m) {
    dh.push_back({{"mode", m + 1},
                  {"frequency_hz", drumhead.frequencies(m) * to_hz},
                  {"entropy_bits", entropy.entropy_bits(m)},
                  {"support", entropy.support(m)}});
  }
  doc["drumhead"] = dh;
  json ip = json::array();
  for (int m = 0; m < inplane.frequencies.size(); ++m) {
    ip.push_back({{"mode", m + 1},
                  {"frequency_hz", inplane.frequencies(m) * to_hz},
                  {"branch", inplane.branch(m) == Branch::ExB ? "exb" : "cyclotron"},
                  {"energy_ratio", metrics.r(m)},
                  {"helicity", metrics.chi(m)},
                  {"msd_m2", metrics.msd_m2(m)}});
  }
  doc["inplane"] = ip;
  doc["msd_reference_temperature_k"] = metrics.reference_temperature_kelvin;
  doc["eigen_residual_max"] = inplane.max_eigen_residual;
  doc["spectral_gap_ratio"] = inplane.spectral_gap_ratio;
  write_text(fs::path(base).concat(".json"), doc.dump(2) + "\n");

  // Drumhead eigenvectors: column n is mode n (descending frequency).
  {
    const int n = static_cast<int>(drumhead.frequencies.size());
    std::vector<std::string> header = {"ion"};
    for (int m = 0; m < n; ++m) header.push_back("mode" + std::to_string(m + 1));
    std::vector<std::vector<double>> rows;
    for (int j = 0; j < n; ++j) {
      std::vector<double> row = {static_cast<double>(j)};
      for (int m = 0; m < n; ++m) row.push_back(drumhead.eigenvectors(j, m));
      rows.push_back(std::move(row));
    }
    write_csv(fs::path(base).concat("_drumhead_vectors.csv"), header, rows);
  }

  // In-plane eigenvectors, interleaved real/imaginary position components.
  {
    const int n = inplane.n;
    std::vector<std::string> header = {"component"};
    for (int m = 0; m < 2 * n; ++m) {
      header.push_back("mode" + std::to_string(m + 1) + "_re");
      header.push_back("mode" + std::to_string(m + 1) + "_im");
    }
    std::vector<std::vector<double>> rows;
    for (int c = 0; c < 4 * n; ++c) {
      std::vector<double> row = {static_cast<double>(c)};
      for (int m = 0; m < 2 * n; ++m) {
        row.push_back(inplane.eigenvectors(c, m).real());
        row.push_back(inplane.eigenvectors(c, m).imag());
      }
      rows.push_back(std::move(row));
    }
    write_csv(fs::path(base).concat("_inplane_vectors.csv"), header, rows);
  }
}

void save_snapshots(const fs::path& base, const SnapshotEnsemble& ens,
                    const SamplerConfig& sampler, const System& sys) {
  std::vector<std::vector<double>> rows;
  for (size_t s = 0; s < ens.snapshots.size(); ++s) {
    for (size_t j = 0; j < ens.snapshots[s].size(); ++j) {
      const auto& p = ens.snapshots[s][j];
      rows.push_back({static_cast<double>(s), static_cast<double>(j),
                      p.x * sys.scales.length, p.y * sys.scales.length});
    }
  }
  write_csv(fs::path(base).concat(".csv"), {"snapshot", "ion", "x_m", "y_m"}, rows);

  json meta;
  meta["t_perp_k"] = sampler.t_perp;
  meta["mh_scans"] = sampler.mh_scans;
  meta["mh_burn_in_scans"] = sampler.mh_burn_in_scans;
  meta["snapshot_stride"] = sampler.snapshot_stride;
  meta["rng_seed"] = sampler.rng_seed;
  meta["n_snapshots"] = ens.snapshots.size();
  meta["acceptance_rate"] = ens.acceptance_rate;
  meta["mean_delta_phi_per_ion_j"] = ens.mean_delta_phi_per_ion * sys.scales.energy;
  meta["step_radius_m"] = ens.step_radius * sys.scales.length;
  write_text(fs::path(base).concat(".json"), meta.dump(2) + "\n");
}

void save_spectrum(const fs::path& base, const Spectrum& spectrum,
                   const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::vector<std::vector<double>> rows;
  rows.reserve(spectrum.frequency_hz.size());
  const char* value_name =
      spectrum.kind == SpectrumKind::Psd ? "psd_m2_per_hz" : "bright_fraction";
  for (size_t i = 0; i < spectrum.frequency_hz.size(); ++i)
    rows.push_back({spectrum.frequency_hz[i], spectrum.values[i]});
  write_csv(fs::path(base).concat(".csv"), {"frequency_hz", value_name}, rows);

  json meta;
  meta["kind"] = spectrum.kind == SpectrumKind::Psd ? "psd" : "odf";
  meta["axis"] = spectrum.axis == SpectrumAxis::Axial ? "axial" : "inplane";
  meta["n_realizations"] = spectrum.n_realizations;
  meta["n_bins"] = spectrum.frequency_hz.size();
  for (const auto& [k, v] : metadata) meta[k] = v;
  write_text(fs::path(base).concat(".json"), meta.dump(2) + "\n");
}

void save_trajectory(const fs::path& base, const Trajectory& traj,
                     std::uint64_t seed, std::uint64_t config_hash) {
  // Raw doubles, axis blocks in a fixed order; absent axes are skipped.
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  std::ofstream bin(fs::path(base).concat(".bin"), std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot open for writing: " + base.string() + ".bin");

  json layout = json::array();
  auto dump_axis = [&](const char* name, const std::vector<std::vector<double>>& s) {
    if (s.empty()) return;
    layout.push_back({{"axis", name},
                      {"ions", s.size()},
                      {"samples", s.front().size()}});
    for (const auto& row : s)
      bin.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
  };
  dump_axis("x", traj.x);
  dump_axis("y", traj.y);
  dump_axis("z", traj.z);
  dump_axis("vx", traj.vx);
  dump_axis("vy", traj.vy);
  dump_axis("vz", traj.vz);
  if (!bin) throw IoError("write failed: " + base.string() + ".bin");
  bin.close();

  json meta;
  meta["dt_s"] = traj.dt;
  meta["sample_dt_s"] = traj.sample_dt;
  meta["n_samples"] = traj.n_samples();
  meta["layout"] = layout;
  meta["order"] = "row-major per axis: ion-major, sample-minor, little-endian f64";
  meta["energy_checks"] = traj.total.size();
  meta["seed"] = seed;
  meta["config_hash"] = config_hash;
  write_text(fs::path(base).concat(".json"), meta.dump(2) + "\n");
}

}  // namespace pentrap::io

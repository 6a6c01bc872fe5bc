#include "pentrap/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pentrap/constants.hpp"
#include "pentrap/io.hpp"

namespace pentrap {

namespace {

using nlohmann::json;

[[noreturn]] void parse_error_at(const std::string& text, size_t byte,
                                 const std::string& what) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  throw ParseError("config parse error at line " + std::to_string(line) +
                   ", column " + std::to_string(col) + ": " + what);
}

void require_keys(const json& obj, const std::string& section,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw ValidationError("config: unknown key '" + key + "' in section '" +
                            section + "'");
  }
}

double get_number(const json& obj, const std::string& section, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ValidationError("config: '" + section + "." + key + "' must be a number");
  return obj[key].get<double>();
}

long long get_integer(const json& obj, const std::string& section, const char* key,
                      long long fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ValidationError("config: '" + section + "." + key + "' must be an integer");
  return obj[key].get<long long>();
}

TrapConfig parse_trap(const json& j) {
  if (!j.contains("trap"))
    throw ValidationError("config: missing required 'trap' section");
  const json& t = j["trap"];
  require_keys(t, "trap", {"n_ions", "species", "frequencies", "fields"});

  if (!t.contains("n_ions"))
    throw ValidationError("config: trap.n_ions is required");
  const int n_ions = static_cast<int>(get_integer(t, "trap", "n_ions", 0));

  double mass = 9.012182 * constants::amu;
  double charge = constants::q_e;
  if (t.contains("species")) {
    const json& s = t["species"];
    require_keys(s, "trap.species", {"mass_amu", "mass_kg", "charge_e"});
    if (s.contains("mass_kg"))
      mass = get_number(s, "trap.species", "mass_kg", mass);
    else
      mass = get_number(s, "trap.species", "mass_amu", 9.012182) * constants::amu;
    charge = get_number(s, "trap.species", "charge_e", 1.0) * constants::q_e;
  }

  if (t.contains("frequencies") == t.contains("fields"))
    throw ValidationError(
        "config: trap requires exactly one of 'frequencies' or 'fields'");

  if (t.contains("frequencies")) {
    const json& f = t["frequencies"];
    require_keys(f, "trap.frequencies", {"f_c_hz", "f_r_hz", "f_par_hz", "f_w_hz"});
    for (const char* key : {"f_c_hz", "f_r_hz", "f_par_hz", "f_w_hz"})
      if (!f.contains(key))
        throw ValidationError(std::string("config: trap.frequencies.") + key +
                              " is required");
    return trap_from_frequencies(
        mass, charge, n_ions,
        constants::two_pi * get_number(f, "trap.frequencies", "f_c_hz", 0.0),
        constants::two_pi * get_number(f, "trap.frequencies", "f_r_hz", 0.0),
        constants::two_pi * get_number(f, "trap.frequencies", "f_par_hz", 0.0),
        constants::two_pi * get_number(f, "trap.frequencies", "f_w_hz", 0.0));
  }

  const json& f = t["fields"];
  require_keys(f, "trap.fields", {"b_tesla", "v0", "vw", "f_r_hz"});
  TrapConfig cfg;
  cfg.ion_mass = mass;
  cfg.ion_charge = charge;
  cfg.n_ions = n_ions;
  cfg.b_field = get_number(f, "trap.fields", "b_tesla", 0.0);
  cfg.v0 = get_number(f, "trap.fields", "v0", 0.0);
  cfg.vw = get_number(f, "trap.fields", "vw", 0.0);
  cfg.omega_r = constants::two_pi * get_number(f, "trap.fields", "f_r_hz", 0.0);
  return cfg;
}

std::vector<double> parse_temperature_list(const json& arr, const std::string& name) {
  if (!arr.is_array() || arr.empty())
    throw ValidationError("config: '" + name + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number())
      throw ValidationError("config: '" + name + "' entries must be numbers");
    out.push_back(v.get<double>());
    if (out.back() < 0.0)
      throw ValidationError("config: '" + name + "' entries must be >= 0");
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  // A blank file is structurally fine but fails validation (no trap section).
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  json j;
  if (blank) {
    j = json::object();
  } else {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      parse_error_at(text, e.byte, e.what());
    }
  }
  if (!j.is_object()) throw ValidationError("config: top level must be an object");

  require_keys(j, "<top>",
               {"trap", "sampler", "integrator", "odf", "study", "seed", "threads",
                "out_dir"});

  RunConfig cfg;
  cfg.trap = parse_trap(j);

  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    require_keys(s, "sampler",
                 {"t_perp_k", "t_par_k", "mh_scans", "mh_burn_in_scans",
                  "snapshot_stride", "mh_step_radius_m", "rng_seed"});
    cfg.sampler.t_perp = get_number(s, "sampler", "t_perp_k", cfg.sampler.t_perp);
    cfg.sampler.t_par = get_number(s, "sampler", "t_par_k", 0.5e-3);
    cfg.sampler.mh_scans = static_cast<int>(
        get_integer(s, "sampler", "mh_scans", cfg.sampler.mh_scans));
    cfg.sampler.mh_burn_in_scans = static_cast<int>(
        get_integer(s, "sampler", "mh_burn_in_scans", cfg.sampler.mh_burn_in_scans));
    cfg.sampler.snapshot_stride = static_cast<int>(
        get_integer(s, "sampler", "snapshot_stride", cfg.sampler.snapshot_stride));
    cfg.sampler.mh_step_radius_m =
        get_number(s, "sampler", "mh_step_radius_m", cfg.sampler.mh_step_radius_m);
  } else {
    cfg.sampler.t_par = 0.5e-3;
  }

  if (j.contains("integrator")) {
    const json& s = j["integrator"];
    require_keys(s, "integrator",
                 {"dt_s", "t_total_s", "record_stride_axial", "record_stride_inplane",
                  "record_stride_odf", "energy_check_stride"});
    cfg.integrator.dt = get_number(s, "integrator", "dt_s", cfg.integrator.dt);
    cfg.integrator.t_total =
        get_number(s, "integrator", "t_total_s", cfg.integrator.t_total);
    cfg.integrator.record_stride_axial = static_cast<int>(get_integer(
        s, "integrator", "record_stride_axial", cfg.integrator.record_stride_axial));
    cfg.integrator.record_stride_inplane = static_cast<int>(
        get_integer(s, "integrator", "record_stride_inplane",
                    cfg.integrator.record_stride_inplane));
    cfg.integrator.record_stride_odf = static_cast<int>(get_integer(
        s, "integrator", "record_stride_odf", cfg.integrator.record_stride_odf));
    cfg.integrator.energy_check_stride = static_cast<int>(get_integer(
        s, "integrator", "energy_check_stride", cfg.integrator.energy_check_stride));
  }

  if (j.contains("odf")) {
    const json& s = j["odf"];
    require_keys(s, "odf",
                 {"f0_n", "gamma_per_s", "t_pi_s", "mu_start_hz", "mu_stop_hz",
                  "mu_step_hz"});
    cfg.odf.f0 = get_number(s, "odf", "f0_n", cfg.odf.f0);
    cfg.odf.gamma = get_number(s, "odf", "gamma_per_s", cfg.odf.gamma);
    cfg.odf.t_pi = get_number(s, "odf", "t_pi_s", cfg.odf.t_pi);
    cfg.odf.mu_start_hz = get_number(s, "odf", "mu_start_hz", cfg.odf.mu_start_hz);
    cfg.odf.mu_stop_hz = get_number(s, "odf", "mu_stop_hz", cfg.odf.mu_stop_hz);
    cfg.odf.mu_step_hz = get_number(s, "odf", "mu_step_hz", cfg.odf.mu_step_hz);
  }

  if (j.contains("study")) {
    const json& s = j["study"];
    require_keys(s, "study",
                 {"temperatures_k", "histogram_temperatures_k", "histogram_bin_hz",
                  "surface_t_start_k", "surface_t_step_k", "surface_t_stop_k",
                  "support_t_k", "vk_t_k", "n_snapshots", "n_realizations", "sho_k",
                  "sho_m", "sho_t", "sho_samples"});
    if (s.contains("temperatures_k"))
      cfg.study.temperatures_k =
          parse_temperature_list(s["temperatures_k"], "study.temperatures_k");
    if (s.contains("histogram_temperatures_k"))
      cfg.study.histogram_temperatures_k = parse_temperature_list(
          s["histogram_temperatures_k"], "study.histogram_temperatures_k");
    cfg.study.histogram_bin_hz =
        get_number(s, "study", "histogram_bin_hz", cfg.study.histogram_bin_hz);
    cfg.study.surface_t_start_k =
        get_number(s, "study", "surface_t_start_k", cfg.study.surface_t_start_k);
    cfg.study.surface_t_step_k =
        get_number(s, "study", "surface_t_step_k", cfg.study.surface_t_step_k);
    cfg.study.surface_t_stop_k =
        get_number(s, "study", "surface_t_stop_k", cfg.study.surface_t_stop_k);
    cfg.study.support_t_k = get_number(s, "study", "support_t_k", cfg.study.support_t_k);
    cfg.study.vk_t_k = get_number(s, "study", "vk_t_k", cfg.study.vk_t_k);
    cfg.study.n_snapshots = static_cast<int>(
        get_integer(s, "study", "n_snapshots", cfg.study.n_snapshots));
    cfg.study.n_realizations = static_cast<int>(
        get_integer(s, "study", "n_realizations", cfg.study.n_realizations));
    cfg.study.sho_k = get_number(s, "study", "sho_k", cfg.study.sho_k);
    cfg.study.sho_m = get_number(s, "study", "sho_m", cfg.study.sho_m);
    cfg.study.sho_t = get_number(s, "study", "sho_t", cfg.study.sho_t);
    cfg.study.sho_samples = get_integer(s, "study", "sho_samples", cfg.study.sho_samples);
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ValidationError("config: 'seed' must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_explicit = true;
  }
  cfg.threads = static_cast<int>(get_integer(j, "<top>", "threads", cfg.threads));
  if (j.contains("out_dir")) {
    if (!j["out_dir"].is_string())
      throw ValidationError("config: 'out_dir' must be a string");
    cfg.out_dir = j["out_dir"].get<std::string>();
  }

  finalize_config(cfg);
  return cfg;
}

void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset.empty()) return;
  if (preset == "ci") {
    cfg.trap.n_ions = std::min(cfg.trap.n_ions, 24);
    cfg.study.n_snapshots = std::min(cfg.study.n_snapshots, 400);
    cfg.study.n_realizations = std::min(cfg.study.n_realizations, 8);
    cfg.integrator.t_total = std::min(cfg.integrator.t_total, 280e-6);
    cfg.study.surface_t_step_k = std::max(cfg.study.surface_t_step_k, 1e-3);
    cfg.study.surface_t_start_k = std::max(cfg.study.surface_t_start_k, 1e-3);
    cfg.study.sho_samples = std::min(cfg.study.sho_samples, 200000LL);
  } else if (preset == "paper") {
    cfg.trap.n_ions = 120;
    cfg.study.n_snapshots = 2000;
    cfg.study.n_realizations = 96;
    cfg.integrator.t_total = 560e-6;
    cfg.study.surface_t_start_k = 2e-4;
    cfg.study.surface_t_step_k = 2e-4;
    cfg.study.surface_t_stop_k = 10e-3;
    cfg.study.sho_samples = 1000000;
  } else {
    throw ValidationError("unknown preset '" + preset + "' (expected ci or paper)");
  }
  cfg.preset = preset;
  finalize_config(cfg);
}

void finalize_config(RunConfig& cfg) {
  cfg.trap.validate();  // throws ValidationError / UnstableTrap
  cfg.sampler.validate();
  if (cfg.integrator.t_total <= 0.0)
    throw ValidationError("config: integrator.t_total_s must be > 0");
  if (cfg.study.n_realizations < 1 || cfg.study.n_snapshots < 1)
    throw ValidationError("config: ensemble sizes must be >= 1");
  if (cfg.threads < 0) throw ValidationError("config: threads must be >= 0");

  const auto freqs = derive_frequencies(cfg.trap);
  json echo;
  echo["trap"] = {{"n_ions", cfg.trap.n_ions},
                  {"ion_mass_kg", cfg.trap.ion_mass},
                  {"ion_charge_c", cfg.trap.ion_charge},
                  {"b_tesla", cfg.trap.b_field},
                  {"v0", cfg.trap.v0},
                  {"vw", cfg.trap.vw},
                  {"f_r_hz", cfg.trap.omega_r / constants::two_pi},
                  {"derived_f_c_hz", freqs.omega_c / constants::two_pi},
                  {"derived_f_par_hz", freqs.omega_par / constants::two_pi},
                  {"derived_f_perp_hz", freqs.omega_perp / constants::two_pi},
                  {"derived_f_w_hz", freqs.omega_w / constants::two_pi}};
  echo["sampler"] = {{"t_perp_k", cfg.sampler.t_perp},
                     {"t_par_k", cfg.sampler.t_par},
                     {"mh_scans", cfg.sampler.mh_scans},
                     {"mh_burn_in_scans", cfg.sampler.mh_burn_in_scans},
                     {"snapshot_stride", cfg.sampler.snapshot_stride},
                     {"mh_step_radius_m", cfg.sampler.mh_step_radius_m}};
  echo["integrator"] = {{"dt_s", cfg.integrator.dt},
                        {"t_total_s", cfg.integrator.t_total},
                        {"record_stride_axial", cfg.integrator.record_stride_axial},
                        {"record_stride_inplane", cfg.integrator.record_stride_inplane},
                        {"record_stride_odf", cfg.integrator.record_stride_odf},
                        {"energy_check_stride", cfg.integrator.energy_check_stride}};
  echo["odf"] = {{"f0_n", cfg.odf.f0},
                 {"gamma_per_s", cfg.odf.gamma},
                 {"t_pi_s", cfg.odf.t_pi},
                 {"mu_start_hz", cfg.odf.mu_start_hz},
                 {"mu_stop_hz", cfg.odf.mu_stop_hz},
                 {"mu_step_hz", cfg.odf.mu_step_hz}};
  echo["study"] = {{"temperatures_k", cfg.study.temperatures_k},
                   {"histogram_temperatures_k", cfg.study.histogram_temperatures_k},
                   {"histogram_bin_hz", cfg.study.histogram_bin_hz},
                   {"surface_t_start_k", cfg.study.surface_t_start_k},
                   {"surface_t_step_k", cfg.study.surface_t_step_k},
                   {"surface_t_stop_k", cfg.study.surface_t_stop_k},
                   {"support_t_k", cfg.study.support_t_k},
                   {"vk_t_k", cfg.study.vk_t_k},
                   {"n_snapshots", cfg.study.n_snapshots},
                   {"n_realizations", cfg.study.n_realizations},
                   {"sho_k", cfg.study.sho_k},
                   {"sho_m", cfg.study.sho_m},
                   {"sho_t", cfg.study.sho_t},
                   {"sho_samples", cfg.study.sho_samples}};
  echo["seed"] = cfg.seed;
  echo["threads"] = cfg.threads;
  echo["preset"] = cfg.preset.empty() ? "none" : cfg.preset;
  cfg.resolved_json = echo.dump(2) + "\n";
  cfg.config_hash = io::fnv1a64(cfg.resolved_json);
}

}  // namespace pentrap

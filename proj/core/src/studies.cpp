#include "pentrap/studies.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "pentrap/constants.hpp"
#include "pentrap/dynamics.hpp"
#include "pentrap/equilibrium.hpp"
#include "pentrap/io.hpp"
#include "pentrap/metrics.hpp"
#include "pentrap/modes.hpp"
#include "pentrap/parallel.hpp"
#include "pentrap/spectra.hpp"
#include "pentrap/thermal.hpp"

namespace pentrap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, StudyKind> kStudies = {
    {"snapshot_histogram", StudyKind::SnapshotHistogram},
    {"fluctuation_surface", StudyKind::FluctuationSurface},
    {"support_correlation", StudyKind::SupportCorrelation},
    {"psd_broadening", StudyKind::PsdBroadening},
    {"vk_comparison", StudyKind::VkComparison},
    {"odf_scan", StudyKind::OdfScan},
    {"sho_appendix", StudyKind::ShoAppendix},
};

std::string study_name(StudyKind kind) {
  for (const auto& [name, k] : kStudies)
    if (k == kind) return name;
  return "unknown";
}

// Deterministic RNG stream ids: one namespace per study, offsets for
// (temperature index, realization index).
constexpr std::uint64_t kStreamStride = 1000003;

struct StudyContext {
  const RunConfig& cfg;
  System sys;
  fs::path out;
  int threads;
  StudyOutcome outcome;

  StudyContext(StudyKind kind, const RunConfig& run_cfg)
      : cfg(run_cfg),
        sys(System::create(run_cfg.trap)),
        out(fs::path(run_cfg.out_dir) / study_name(kind)),
        threads(run_cfg.threads > 0
                    ? run_cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency())) {
    outcome.study = study_name(kind);
    fs::create_directories(out);
  }

  double to_hz(double scaled_angular) const {
    return scaled_angular * sys.scales.frequency / constants::two_pi;
  }

  void check(const std::string& name, double value, const std::string& expectation,
             bool pass) {
    outcome.checks.push_back({name, value, expectation, pass});
    outcome.all_pass = outcome.all_pass && pass;
  }

  void write_summary() {
    json doc;
    doc["study"] = outcome.study;
    doc["preset"] = cfg.preset.empty() ? "none" : cfg.preset;
    doc["seed"] = cfg.seed;
    doc["n_ions"] = cfg.trap.n_ions;
    doc["config_hash"] = cfg.config_hash;
    json checks = json::array();
    for (const auto& c : outcome.checks)
      checks.push_back({{"name", c.name},
                        {"value", c.value},
                        {"expectation", c.expectation},
                        {"pass", c.pass}});
    doc["checks"] = checks;
    doc["all_pass"] = outcome.all_pass;
    io::write_text(out / "summary.json", doc.dump(2) + "\n");
    io::write_text(fs::path(cfg.out_dir) / "run_metadata.json", cfg.resolved_json);
  }
};

// Sorted drumhead frequencies (Hz, descending) of one planar configuration.
std::vector<double> snapshot_drumhead_hz(const std::vector<Vec3>& positions,
                                         const StudyContext& ctx) {
  const auto modes = drumhead_modes_of(axial_stiffness(positions, ctx.sys));
  std::vector<double> out(static_cast<size_t>(modes.frequencies.size()));
  for (int i = 0; i < modes.frequencies.size(); ++i)
    out[static_cast<size_t>(i)] = ctx.to_hz(modes.frequencies(i));
  return out;
}

// Per-mode frequency standard deviations over a snapshot ensemble.
struct SnapshotStats {
  std::vector<double> mean_hz;
  std::vector<double> sigma_hz;
};

SnapshotStats mode_statistics(const SnapshotEnsemble& ens, const StudyContext& ctx) {
  const int n = ctx.sys.n();
  const auto count = static_cast<double>(ens.snapshots.size());
  SnapshotStats stats;
  stats.mean_hz.assign(static_cast<size_t>(n), 0.0);
  stats.sigma_hz.assign(static_cast<size_t>(n), 0.0);

  std::vector<std::vector<double>> all(ens.snapshots.size());
  parallel_for(static_cast<int>(ens.snapshots.size()), ctx.threads, [&](int s) {
    all[static_cast<size_t>(s)] =
        snapshot_drumhead_hz(ens.snapshots[static_cast<size_t>(s)], ctx);
  });
  for (const auto& freqs : all)
    for (int m = 0; m < n; ++m) stats.mean_hz[static_cast<size_t>(m)] += freqs[static_cast<size_t>(m)];
  for (auto& v : stats.mean_hz) v /= count;
  for (const auto& freqs : all)
    for (int m = 0; m < n; ++m) {
      const double d = freqs[static_cast<size_t>(m)] - stats.mean_hz[static_cast<size_t>(m)];
      stats.sigma_hz[static_cast<size_t>(m)] += d * d;
    }
  for (auto& v : stats.sigma_hz) v = std::sqrt(v / std::max(1.0, count - 1.0));
  return stats;
}

SamplerConfig sampler_at(const StudyContext& ctx, double t_perp, int n_snapshots) {
  SamplerConfig s = ctx.cfg.sampler;
  s.t_perp = t_perp;
  s.mh_scans = n_snapshots * s.snapshot_stride;
  s.rng_seed = ctx.cfg.seed;
  return s;
}

// Thermal initial condition for one MD realization. In-plane positions come
// from the snapshot ensemble (or the equilibrium when it has one snapshot),
// in-plane velocities from kicks, axial coordinates from the drumhead mode
// amplitudes of the zero-temperature configuration.
CrystalState make_initial_state(const StudyContext& ctx,
                                const DrumheadModes& drumhead,
                                const SnapshotEnsemble& snaps, double t_kick,
                                double t_par, int realization,
                                std::uint64_t stream_base) {
  const int n = ctx.sys.n();
  Rng rng(ctx.cfg.seed, stream_base + static_cast<std::uint64_t>(realization));
  CrystalState state = CrystalState::at_rest(n);
  state.positions =
      snaps.snapshots[static_cast<size_t>(realization) % snaps.snapshots.size()];
  const auto kicks = sample_velocity_kicks(n, t_kick, ctx.sys.scales, rng);
  const auto axial = sample_axial_thermal(drumhead, t_par, ctx.sys.scales, rng);
  for (int j = 0; j < n; ++j) {
    const size_t u = static_cast<size_t>(j);
    state.velocities[u] = kicks[u];
    state.positions[u].z = axial.z[u];
    state.velocities[u].z = axial.vz[u];
  }
  return state;
}

// Averages per-realization spectra (equal weights).
Spectrum average_spectra(std::vector<Spectrum> parts) {
  Spectrum avg = parts.front();
  for (size_t p = 1; p < parts.size(); ++p)
    for (size_t b = 0; b < avg.values.size(); ++b) avg.values[b] += parts[p].values[b];
  for (auto& v : avg.values) v /= static_cast<double>(parts.size());
  avg.n_realizations = static_cast<int>(parts.size());
  return avg;
}

void subtract_mean_inplane(Trajectory& traj) {
  for (auto* series : {&traj.x, &traj.y}) {
    for (auto& row : *series) {
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      for (double& v : row) v -= mean;
    }
  }
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

std::string temp_label(double t_k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%gmK", t_k * 1e3);
  return buf;
}

// ---------------------------------------------------------------------------
// Study implementations
// ---------------------------------------------------------------------------

void run_snapshot_histogram(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto drumhead = drumhead_modes(build_linearized_model(eq, ctx.sys));

  std::vector<std::vector<double>> ref_rows;
  for (int m = 0; m < drumhead.frequencies.size(); ++m)
    ref_rows.push_back({static_cast<double>(m + 1), ctx.to_hz(drumhead.frequencies(m))});
  io::write_csv(ctx.out / "references.csv", {"mode", "frequency_hz"}, ref_rows);

  for (size_t ti = 0; ti < ctx.cfg.study.histogram_temperatures_k.size(); ++ti) {
    const double t_perp = ctx.cfg.study.histogram_temperatures_k[ti];
    const auto ens = mh_sample_inplane(eq, ctx.sys,
                                       sampler_at(ctx, t_perp, ctx.cfg.study.n_snapshots),
                                       kStreamStride * (ti + 1));
    const auto stats = mode_statistics(ens, ctx);

    // Flat histogram of all sorted mode frequencies.
    std::vector<double> flat;
    std::vector<std::vector<double>> all(ens.snapshots.size());
    parallel_for(static_cast<int>(ens.snapshots.size()), ctx.threads, [&](int s) {
      all[static_cast<size_t>(s)] =
          snapshot_drumhead_hz(ens.snapshots[static_cast<size_t>(s)], ctx);
    });
    for (const auto& f : all) flat.insert(flat.end(), f.begin(), f.end());
    const auto [lo_it, hi_it] = std::minmax_element(flat.begin(), flat.end());
    const double bin = ctx.cfg.study.histogram_bin_hz;
    const double lo = std::floor(*lo_it / bin) * bin;
    const int n_bins = static_cast<int>(std::ceil((*hi_it - lo) / bin)) + 1;
    std::vector<double> counts(static_cast<size_t>(n_bins), 0.0);
    for (double f : flat)
      counts[static_cast<size_t>(std::min<int>(n_bins - 1,
                                               static_cast<int>((f - lo) / bin)))] += 1.0;

    const std::string label = temp_label(t_perp);
    std::vector<std::vector<double>> rows;
    for (int b = 0; b < n_bins; ++b)
      rows.push_back({lo + (b + 0.5) * bin, counts[static_cast<size_t>(b)]});
    io::write_csv(ctx.out / ("histogram_" + label + ".csv"),
                  {"bin_center_hz", "count"}, rows);

    std::vector<std::vector<double>> sig_rows;
    for (int m = 0; m < ctx.sys.n(); ++m)
      sig_rows.push_back({static_cast<double>(m + 1),
                          stats.mean_hz[static_cast<size_t>(m)],
                          stats.sigma_hz[static_cast<size_t>(m)]});
    io::write_csv(ctx.out / ("mode_sigma_" + label + ".csv"),
                  {"mode", "mean_hz", "sigma_hz"}, sig_rows);

    ctx.check("cm_sigma_below_1hz_" + label, stats.sigma_hz[0], "< 1 Hz",
              stats.sigma_hz[0] < 1.0);
    ctx.check("acceptance_rate_" + label, ens.acceptance_rate, "in [0.3, 0.7]",
              ens.acceptance_rate >= 0.3 && ens.acceptance_rate <= 0.7);
  }
}

void run_fluctuation_surface(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto drumhead = drumhead_modes(build_linearized_model(eq, ctx.sys));
  const int n = ctx.sys.n();

  std::vector<double> temps;
  for (double t = ctx.cfg.study.surface_t_start_k;
       t <= ctx.cfg.study.surface_t_stop_k + 1e-12; t += ctx.cfg.study.surface_t_step_k)
    temps.push_back(t);

  std::vector<SnapshotStats> stats(temps.size());
  // The chains are independent across temperatures; snapshot diagonalization
  // inside mode_statistics already fans out, so run temperatures serially.
  for (size_t ti = 0; ti < temps.size(); ++ti) {
    const auto ens = mh_sample_inplane(
        eq, ctx.sys, sampler_at(ctx, temps[ti], ctx.cfg.study.n_snapshots),
        kStreamStride * (ti + 101));
    stats[ti] = mode_statistics(ens, ctx);
  }

  // Surface rows: (T, mode, sigma); the c.m. mode (mode 1) is left out.
  std::vector<std::vector<double>> rows;
  for (size_t ti = 0; ti < temps.size(); ++ti)
    for (int m = 1; m < n; ++m)
      rows.push_back({temps[ti], static_cast<double>(m + 1),
                      stats[ti].sigma_hz[static_cast<size_t>(m)]});
  io::write_csv(ctx.out / "sigma_surface.csv", {"t_perp_k", "mode", "sigma_hz"}, rows);

  // Power-law exponent per mode from a log-log least-squares fit.
  std::vector<std::vector<double>> fit_rows;
  std::vector<double> exponents(static_cast<size_t>(n), 0.0);
  for (int m = 1; m < n; ++m) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (size_t ti = 0; ti < temps.size(); ++ti) {
      const double sig = stats[ti].sigma_hz[static_cast<size_t>(m)];
      if (sig <= 0.0) continue;
      const double lx = std::log(temps[ti]);
      const double ly = std::log(sig);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++count;
    }
    const double denom = count * sxx - sx * sx;
    const double p = count >= 2 && denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
    exponents[static_cast<size_t>(m)] = p;
    fit_rows.push_back({static_cast<double>(m + 1),
                        ctx.to_hz(drumhead.frequencies(m)), p});
  }
  io::write_csv(ctx.out / "exponents.csv", {"mode", "frequency_hz", "exponent"},
                fit_rows);

  // The well-resolved high-frequency modes follow sigma ~ sqrt(T).
  bool sqrt_law = true;
  double worst = 0.5;
  for (int m = 1; m <= std::min(5, n - 1); ++m) {
    const double p = exponents[static_cast<size_t>(m)];
    if (std::abs(p - 0.5) > std::abs(worst - 0.5)) worst = p;
    sqrt_law = sqrt_law && (p >= 0.4 && p <= 0.6);
  }
  ctx.check("sqrt_law_exponent_modes2to6", worst, "p in [0.4, 0.6]", sqrt_law);

  // Order-of-magnitude windows for the spread at the hottest temperature.
  const auto& hot = stats.back();
  double top_max = 0.0;
  for (int m = 1; m <= std::min(4, n - 1); ++m)
    top_max = std::max(top_max, hot.sigma_hz[static_cast<size_t>(m)]);
  ctx.check("highest_modes_sigma_hot", top_max, "O(100) Hz: [30, 3000]",
            top_max >= 30.0 && top_max <= 3000.0);
  double low_max = 0.0;
  for (int m = std::max(1, 3 * n / 4); m < n; ++m)
    low_max = std::max(low_max, hot.sigma_hz[static_cast<size_t>(m)]);
  ctx.check("lowest_modes_sigma_hot", low_max, "O(10) kHz: [2e3, 5e4]",
            low_max >= 2e3 && low_max <= 5e4);
}

void run_support_correlation(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto model = build_linearized_model(eq, ctx.sys);
  const auto drumhead = drumhead_modes(model);
  const auto es = mode_entropy_support(drumhead);
  const int n = ctx.sys.n();

  const auto ens = mh_sample_inplane(
      eq, ctx.sys, sampler_at(ctx, ctx.cfg.study.support_t_k, ctx.cfg.study.n_snapshots),
      kStreamStride * 301);
  const auto stats = mode_statistics(ens, ctx);

  // The c.m. mode is omitted: maximal support, pinned frequency.
  std::vector<double> sigma, inv_support;
  std::vector<std::vector<double>> rows;
  for (int m = 1; m < n; ++m) {
    sigma.push_back(stats.sigma_hz[static_cast<size_t>(m)]);
    inv_support.push_back(1.0 / es.support(m));
    rows.push_back({static_cast<double>(m + 1), ctx.to_hz(drumhead.frequencies(m)),
                    stats.sigma_hz[static_cast<size_t>(m)], 1.0 / es.support(m)});
  }
  io::write_csv(ctx.out / "correlation.csv",
                {"mode", "frequency_hz", "sigma_hz", "inverse_support"}, rows);

  const double rho = spearman(sigma, inv_support);
  ctx.check("spearman_sigma_vs_inverse_support", rho, "> 0.5", rho > 0.5);
  ctx.check("cm_support_is_maximal", es.support(0), "== N",
            std::abs(es.support(0) - n) < 1e-6 * n);
}

// Shared MD machinery for the spectrum studies.
struct MdEnsembleResult {
  std::vector<Spectrum> per_realization_axial;  // drumhead PSD per realization
  std::vector<Spectrum> per_realization_inplane;
  std::vector<Trajectory> kept;  // only when keep_trajectories
  double worst_energy_fluctuation = 0.0;
  double worst_thermal_fluctuation = 0.0;
};

struct MdJob {
  double t_kick = 0.0;       // velocity-kick temperature
  double t_mh = 0.0;         // MH spatial temperature (0 = equilibrium positions)
  double t_par = 0.0;
  RecordSet record = RecordSet::Axial;
  int record_stride = 64;
  bool want_axial_psd = true;
  bool want_inplane_psd = false;
  bool keep_trajectories = false;
  std::uint64_t stream_base = 0;
};

MdEnsembleResult run_md_ensemble(StudyContext& ctx, const EquilibriumConfiguration& eq,
                                 const DrumheadModes& drumhead, const MdJob& job) {
  const int n_real = ctx.cfg.study.n_realizations;

  SnapshotEnsemble snaps;
  if (job.t_mh > 0.0) {
    SamplerConfig sampler = sampler_at(ctx, job.t_mh, n_real);
    snaps = mh_sample_inplane(eq, ctx.sys, sampler, job.stream_base + 777);
  } else {
    snaps.snapshots.push_back(eq.positions);
  }

  IntegratorConfig integ;
  integ.dt = ctx.cfg.integrator.dt;
  integ.t_total = ctx.cfg.integrator.t_total;
  integ.record_stride = job.record_stride;
  integ.energy_check_stride = ctx.cfg.integrator.energy_check_stride;
  integ.record = job.record;

  const double v0_j = eq.energy * ctx.sys.scales.energy;

  MdEnsembleResult result;
  result.per_realization_axial.resize(static_cast<size_t>(n_real));
  result.per_realization_inplane.resize(static_cast<size_t>(n_real));
  if (job.keep_trajectories) result.kept.resize(static_cast<size_t>(n_real));
  std::vector<double> efluct(static_cast<size_t>(n_real), 0.0);
  std::vector<double> tfluct(static_cast<size_t>(n_real), 0.0);

  parallel_for(n_real, ctx.threads, [&](int r) {
    const auto initial = make_initial_state(ctx, drumhead, snaps, job.t_kick,
                                            job.t_par, r, job.stream_base);
    Trajectory traj = integrate(initial, ctx.sys, integ);
    efluct[static_cast<size_t>(r)] = traj.energy_fluctuation();
    tfluct[static_cast<size_t>(r)] = traj.thermal_energy_fluctuation(v0_j);
    if (job.want_inplane_psd) {
      subtract_mean_inplane(traj);
      result.per_realization_inplane[static_cast<size_t>(r)] =
          psd({traj}, SpectrumAxis::InPlane);
    }
    if (job.want_axial_psd)
      result.per_realization_axial[static_cast<size_t>(r)] =
          psd({traj}, SpectrumAxis::Axial);
    if (job.keep_trajectories) result.kept[static_cast<size_t>(r)] = std::move(traj);
  });

  for (int r = 0; r < n_real; ++r) {
    result.worst_energy_fluctuation =
        std::max(result.worst_energy_fluctuation, efluct[static_cast<size_t>(r)]);
    result.worst_thermal_fluctuation =
        std::max(result.worst_thermal_fluctuation, tfluct[static_cast<size_t>(r)]);
  }
  return result;
}

// Spectrum-shape bookkeeping shared by the PSD and ODF studies.
struct ShapeRefs {
  double f_par_hz;
  double tilt_hz;
  double potato_hz;
  std::vector<double> mode_hz;  // zero-T drumhead frequencies, descending
};

ShapeRefs shape_refs(const StudyContext& ctx, const DrumheadModes& drumhead) {
  ShapeRefs refs;
  refs.f_par_hz = ctx.sys.freqs.omega_par / constants::two_pi;
  const auto cf = cold_fluid_reference(ctx.sys.freqs);
  refs.tilt_hz = cf.tilt / constants::two_pi;
  refs.potato_hz = cf.potato_chip / constants::two_pi;
  for (int m = 0; m < drumhead.frequencies.size(); ++m)
    refs.mode_hz.push_back(ctx.to_hz(drumhead.frequencies(m)));
  return refs;
}

double nearest_peak_distance(const std::vector<SpectrumPeak>& peaks, double f) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : peaks) best = std::min(best, std::abs(p.frequency_hz - f));
  return best;
}

double nearest_reference_distance(const std::vector<double>& refs, double f) {
  double best = std::numeric_limits<double>::infinity();
  for (double r : refs) best = std::min(best, std::abs(r - f));
  return best;
}

void run_psd_broadening(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto drumhead = drumhead_modes(build_linearized_model(eq, ctx.sys));
  const auto refs = shape_refs(ctx, drumhead);

  std::vector<std::vector<double>> ref_rows;
  for (size_t m = 0; m < refs.mode_hz.size(); ++m)
    ref_rows.push_back({static_cast<double>(m + 1), refs.mode_hz[m]});
  io::write_csv(ctx.out / "references.csv", {"mode", "frequency_hz"}, ref_rows);

  const double f_lo = refs.mode_hz.back() * 0.97;
  const double f_hi = refs.f_par_hz * 1.03;

  std::vector<int> peak_counts;
  for (size_t ti = 0; ti < ctx.cfg.study.temperatures_k.size(); ++ti) {
    const double t_perp = ctx.cfg.study.temperatures_k[ti];
    MdJob job;
    job.t_kick = t_perp;
    job.t_mh = t_perp;
    job.t_par = ctx.cfg.sampler.t_par;
    job.record = RecordSet::Axial;
    job.record_stride = ctx.cfg.integrator.record_stride_axial;
    job.stream_base = kStreamStride * (ti + 11);
    const auto md = run_md_ensemble(ctx, eq, drumhead, job);
    const Spectrum spec = average_spectra(md.per_realization_axial);

    const std::string label = temp_label(t_perp);
    io::save_spectrum(ctx.out / ("psd_" + label), spec,
                      {{"t_perp", label},
                       {"t_par", temp_label(ctx.cfg.sampler.t_par)}});

    ctx.check("energy_fluctuation_" + label, md.worst_energy_fluctuation, "< 2e-6",
              md.worst_energy_fluctuation < 2e-6);

    const auto peaks = find_peaks(spec.frequency_hz, spec.values, f_lo, f_hi, 2.0);
    const double bin = spec.frequency_hz[1] - spec.frequency_hz[0];

    if (t_perp == 0.0) {
      // Every resolved peak sits on a normal-mode frequency.
      double worst = 0.0;
      for (const auto& p : peaks)
        worst = std::max(worst, nearest_reference_distance(refs.mode_hz, p.frequency_hz));
      ctx.check("t0_peaks_on_modes", worst, "<= 1 bin (" + io::format_double(bin) + " Hz)",
                worst <= bin);
    }

    // The three highest-frequency structures persist at every temperature.
    const double tol = bin;
    const double d_cm = nearest_peak_distance(peaks, refs.f_par_hz);
    const double d_tilt = nearest_peak_distance(peaks, refs.tilt_hz);
    const double d_potato = nearest_peak_distance(peaks, refs.potato_hz);
    ctx.check("cm_peak_" + label, d_cm, "within 1 bin", d_cm <= tol);
    ctx.check("tilt_peak_" + label, d_tilt, "within 1 bin", d_tilt <= tol);
    ctx.check("potato_peak_" + label, d_potato, "within 1 bin", d_potato <= tol);

    // Count the resolved structure below the persistent trio.
    int below = 0;
    for (const auto& p : peaks)
      if (p.frequency_hz < refs.potato_hz - 2.0 * bin) ++below;
    peak_counts.push_back(below);
  }

  bool monotone = true;
  for (size_t i = 1; i < peak_counts.size(); ++i)
    monotone = monotone && peak_counts[i] <= peak_counts[i - 1];
  if (peak_counts.size() >= 2)
    monotone = monotone && peak_counts.back() < peak_counts.front();
  ctx.check("resolved_peaks_decrease", static_cast<double>(peak_counts.back()),
            "counts non-increasing, strictly fewer at the hottest", monotone);

  std::vector<std::vector<double>> count_rows;
  for (size_t i = 0; i < peak_counts.size(); ++i)
    count_rows.push_back({ctx.cfg.study.temperatures_k[i],
                          static_cast<double>(peak_counts[i])});
  io::write_csv(ctx.out / "peak_counts.csv", {"t_perp_k", "resolved_below_trio"},
                count_rows);
}

void run_vk_comparison(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto model = build_linearized_model(eq, ctx.sys);
  const auto drumhead = drumhead_modes(model);
  const auto inplane = inplane_modes(model);
  const auto refs = shape_refs(ctx, drumhead);
  const double t = ctx.cfg.study.vk_t_k;

  // VK arm: kicks at 2T, equilibrium positions. MH-VK arm: kicks at T plus
  // Metropolis-sampled positions at T.
  MdJob vk;
  vk.t_kick = 2.0 * t;
  vk.t_mh = 0.0;
  vk.t_par = ctx.cfg.sampler.t_par;
  vk.record = RecordSet::Positions;
  vk.record_stride = ctx.cfg.integrator.record_stride_inplane;
  vk.want_inplane_psd = true;
  vk.stream_base = kStreamStride * 41;
  const auto vk_md = run_md_ensemble(ctx, eq, drumhead, vk);

  MdJob mhvk = vk;
  mhvk.t_kick = t;
  mhvk.t_mh = t;
  mhvk.want_axial_psd = false;
  mhvk.stream_base = kStreamStride * 42;
  const auto mhvk_md = run_md_ensemble(ctx, eq, drumhead, mhvk);

  const Spectrum vk_inplane = average_spectra(vk_md.per_realization_inplane);
  const Spectrum mhvk_inplane = average_spectra(mhvk_md.per_realization_inplane);
  const Spectrum vk_axial = average_spectra(vk_md.per_realization_axial);

  io::save_spectrum(ctx.out / "psd_inplane_vk", vk_inplane, {{"arm", "vk"}});
  io::save_spectrum(ctx.out / "psd_inplane_mhvk", mhvk_inplane, {{"arm", "mhvk"}});
  io::save_spectrum(ctx.out / "psd_drumhead_vk", vk_axial, {{"arm", "vk"}});

  // Band edges from the mode table.
  const double f_exb_lo = ctx.to_hz(inplane.frequencies(0)) * 0.5;
  const double f_exb_hi = ctx.to_hz(inplane.frequencies(inplane.n - 1));
  const double f_cyc_lo = ctx.to_hz(inplane.frequencies(inplane.n));
  const double f_cyc_hi = ctx.to_hz(inplane.frequencies(2 * inplane.n - 1));
  const double bin = vk_inplane.frequency_hz[1] - vk_inplane.frequency_hz[0];

  // Smoothed dB difference across the ExB band.
  auto band_db_diff = [&](double lo, double hi, bool want_min, double& out) {
    double acc = 0.0;
    int count = 0;
    double min_diff = std::numeric_limits<double>::infinity();
    const int w = 2;  // +-2-bin smoothing
    for (size_t b = 0; b < vk_inplane.frequency_hz.size(); ++b) {
      const double f = vk_inplane.frequency_hz[b];
      if (f < lo || f > hi) continue;
      double mh = 0.0, vkv = 0.0;
      int m = 0;
      for (int o = -w; o <= w; ++o) {
        const long long idx = static_cast<long long>(b) + o;
        if (idx < 0 || idx >= static_cast<long long>(vk_inplane.values.size())) continue;
        mh += mhvk_inplane.values[static_cast<size_t>(idx)];
        vkv += vk_inplane.values[static_cast<size_t>(idx)];
        ++m;
      }
      const double diff = to_db(mh / m) - to_db(vkv / m);
      acc += diff;
      min_diff = std::min(min_diff, diff);
      ++count;
    }
    out = want_min ? min_diff : acc / std::max(1, count);
  };

  double exb_min_diff = 0.0;
  band_db_diff(std::max(f_exb_lo, bin), f_exb_hi, /*want_min=*/true, exb_min_diff);
  double cyc_mean_diff = 0.0;
  band_db_diff(f_cyc_lo - bin, f_cyc_hi + bin, /*want_min=*/false, cyc_mean_diff);
  cyc_mean_diff = -cyc_mean_diff;  // VK above MH-VK in the cyclotron band

  const bool ci = ctx.cfg.preset == "ci";
  const double exb_threshold = ci ? 10.0 : 15.0;
  const double cyc_tol = ci ? 1.5 : 1.0;
  ctx.check("exb_band_mhvk_minus_vk_db", exb_min_diff,
            ">= " + io::format_double(exb_threshold) + " dB",
            exb_min_diff >= exb_threshold);
  ctx.check("cyclotron_band_vk_minus_mhvk_db", cyc_mean_diff,
            "3 +- " + io::format_double(cyc_tol) + " dB",
            std::abs(cyc_mean_diff - 3.0) <= cyc_tol);

  // The VK drumhead spectrum stays resolved: its leading peaks sit on the
  // zero-temperature mode frequencies.
  const auto peaks = find_peaks(vk_axial.frequency_hz, vk_axial.values,
                                refs.mode_hz.back() * 0.97, refs.f_par_hz * 1.03, 2.0);
  const double abin = vk_axial.frequency_hz[1] - vk_axial.frequency_hz[0];
  double worst = 0.0;
  std::vector<SpectrumPeak> top(peaks);
  std::sort(top.begin(), top.end(),
            [](const SpectrumPeak& a, const SpectrumPeak& b) { return a.value > b.value; });
  top.resize(std::min<size_t>(3, top.size()));
  for (const auto& p : top)
    worst = std::max(worst, nearest_reference_distance(refs.mode_hz, p.frequency_hz));
  ctx.check("vk_drumhead_resolved", worst, "top peaks within 1 bin of modes",
            top.size() == 3 && worst <= abin);
}

void run_odf_scan(StudyContext& ctx) {
  const auto eq = find_equilibrium(ctx.sys);
  const auto drumhead = drumhead_modes(build_linearized_model(eq, ctx.sys));
  const auto refs = shape_refs(ctx, drumhead);

  OdfConfig base;
  base.f0 = ctx.cfg.odf.f0;
  base.gamma = ctx.cfg.odf.gamma;
  base.t_pi = ctx.cfg.odf.t_pi;
  base.tau = 0.5 * (ctx.cfg.integrator.t_total - ctx.cfg.odf.t_pi);  // refined below

  // Scan grid across the drumhead band plus a far-off-resonance baseline.
  double lo = ctx.cfg.odf.mu_start_hz > 0.0 ? ctx.cfg.odf.mu_start_hz
                                            : refs.mode_hz.back() * 0.96;
  double hi = ctx.cfg.odf.mu_stop_hz > 0.0 ? ctx.cfg.odf.mu_stop_hz
                                           : refs.f_par_hz * 1.02;
  std::vector<double> grid;
  for (double f = lo; f <= hi + 1e-9; f += ctx.cfg.odf.mu_step_hz) grid.push_back(f);
  const double baseline_mu = refs.f_par_hz * 1.15;
  grid.push_back(baseline_mu);

  const double baseline = 0.5 * (1.0 - std::exp(-2.0 * base.gamma * base.tau));

  std::vector<int> peak_counts;
  for (size_t ti = 0; ti < ctx.cfg.study.temperatures_k.size(); ++ti) {
    const double t_perp = ctx.cfg.study.temperatures_k[ti];
    MdJob job;
    job.t_kick = t_perp;
    job.t_mh = t_perp;
    job.t_par = ctx.cfg.sampler.t_par;
    job.record = RecordSet::Axial;
    job.record_stride = ctx.cfg.integrator.record_stride_odf;
    job.want_axial_psd = false;
    job.keep_trajectories = true;
    job.stream_base = kStreamStride * (ti + 61);
    auto md = run_md_ensemble(ctx, eq, drumhead, job);

    // The sequence length must equal the recorded duration exactly.
    const auto& first = md.kept.front();
    base.tau = 0.5 * (first.sample_dt * (first.n_samples() - 1) - base.t_pi);

    // Per-realization spectra, then the ensemble average and its spread.
    std::vector<Spectrum> parts(md.kept.size());
    for (size_t r = 0; r < md.kept.size(); ++r)
      parts[r] = odf_spectrum({md.kept[r]}, base, grid, ctx.threads);
    md.kept.clear();
    const Spectrum spec = average_spectra(parts);

    const std::string label = temp_label(t_perp);
    io::save_spectrum(ctx.out / ("odf_" + label), spec,
                      {{"t_perp", label},
                       {"baseline", io::format_double(baseline)}});

    // Baseline check at the far-off-resonance point with the ensemble spread.
    const size_t bidx = spec.values.size() - 1;
    double se = 0.0;
    for (const auto& p : parts) {
      const double d = p.values[bidx] - spec.values[bidx];
      se += d * d;
    }
    se = std::sqrt(se / (parts.size() * std::max<size_t>(1, parts.size() - 1)));
    const double dev = std::abs(spec.values[bidx] - baseline);
    ctx.check("baseline_" + label, dev,
              "<= max(3 se, 0.01), se = " + io::format_double(se),
              dev <= std::max(3.0 * se, 0.01));

    // Peak structure on the baseline-subtracted scan (excluding the marker).
    // Presence checks use a loose prominence (the echo lineshape splits each
    // mode into closely spaced lobes); the resolved count uses a strong one.
    std::vector<double> signal(spec.values.begin(), spec.values.end() - 1);
    std::vector<double> freqs(spec.frequency_hz.begin(), spec.frequency_hz.end() - 1);
    for (auto& v : signal) v = std::max(v - baseline, 0.0);
    const auto peaks = find_peaks(freqs, signal, lo, hi, 2.0);
    const auto peaks_loose = find_peaks(freqs, signal, lo, hi, 1.3);
    const double tol = std::max(ctx.cfg.odf.mu_step_hz,
                                1.0 / ctx.cfg.integrator.t_total);
    const double d_cm = nearest_peak_distance(peaks_loose, refs.f_par_hz);
    const double d_tilt = nearest_peak_distance(peaks_loose, refs.tilt_hz);
    const double d_potato = nearest_peak_distance(peaks_loose, refs.potato_hz);
    ctx.check("cm_peak_" + label, d_cm, "within resolution", d_cm <= tol);
    ctx.check("tilt_peak_" + label, d_tilt, "within resolution", d_tilt <= tol);
    ctx.check("potato_peak_" + label, d_potato, "within resolution", d_potato <= tol);

    int below = 0;
    for (const auto& p : peaks)
      if (p.frequency_hz < refs.potato_hz - 2.0 * tol) ++below;
    peak_counts.push_back(below);
  }

  bool monotone = true;
  for (size_t i = 1; i < peak_counts.size(); ++i)
    monotone = monotone && peak_counts[i] <= peak_counts[i - 1];
  if (peak_counts.size() >= 2)
    monotone = monotone && peak_counts.back() < peak_counts.front();
  ctx.check("resolved_peaks_decrease", static_cast<double>(peak_counts.back()),
            "counts non-increasing, strictly fewer at the hottest", monotone);
}

void run_sho_appendix(StudyContext& ctx) {
  Rng rng(ctx.cfg.seed, kStreamStride * 71);
  const auto rep = sho_kick_moment_study(ctx.cfg.study.sho_k, ctx.cfg.study.sho_m,
                                         ctx.cfg.study.sho_t,
                                         static_cast<int>(ctx.cfg.study.sho_samples),
                                         rng);

  std::vector<std::vector<double>> rows = {
      {1, rep.method1.x2.mean, rep.method1.x2.std_error, rep.expected_x2},
      {1, rep.method1.v2.mean, rep.method1.v2.std_error, rep.expected_v2},
      {1, rep.method1.xv.mean, rep.method1.xv.std_error, 0.0},
      {1, rep.method1.x2v2.mean, rep.method1.x2v2.std_error, rep.expected_x2v2_m1},
      {2, rep.method2.x2.mean, rep.method2.x2.std_error, rep.expected_x2},
      {2, rep.method2.v2.mean, rep.method2.v2.std_error, rep.expected_v2},
      {2, rep.method2.xv.mean, rep.method2.xv.std_error, 0.0},
      {2, rep.method2.x2v2.mean, rep.method2.x2v2.std_error, rep.expected_x2v2_m2},
  };
  io::write_csv(ctx.out / "moments.csv",
                {"method", "mean", "std_error", "expected"}, rows);

  auto within = [](const MomentEstimate& e, double expected) {
    return std::abs(e.mean - expected) <= 3.0 * e.std_error;
  };
  ctx.check("m1_x2", rep.method1.x2.mean, "k_B T / k within 3 se",
            within(rep.method1.x2, rep.expected_x2));
  ctx.check("m2_x2", rep.method2.x2.mean, "k_B T / k within 3 se",
            within(rep.method2.x2, rep.expected_x2));
  ctx.check("m1_v2", rep.method1.v2.mean, "k_B T / m within 3 se",
            within(rep.method1.v2, rep.expected_v2));
  ctx.check("m2_v2", rep.method2.v2.mean, "k_B T / m within 3 se",
            within(rep.method2.v2, rep.expected_v2));
  ctx.check("m1_x2v2", rep.method1.x2v2.mean, "(k_B T)^2/(km) within 3 se",
            within(rep.method1.x2v2, rep.expected_x2v2_m1));
  ctx.check("m2_x2v2", rep.method2.x2v2.mean, "1.5 (k_B T)^2/(km) within 3 se",
            within(rep.method2.x2v2, rep.expected_x2v2_m2));

  const double ratio = rep.method2.x2v2.mean / rep.method1.x2v2.mean;
  const double ratio_se =
      ratio * std::sqrt(std::pow(rep.method1.x2v2.std_error / rep.method1.x2v2.mean, 2) +
                        std::pow(rep.method2.x2v2.std_error / rep.method2.x2v2.mean, 2));
  ctx.check("fourth_moment_ratio", ratio, "1.5 within 3 se",
            std::abs(ratio - 1.5) <= 3.0 * ratio_se);
}

}  // namespace

std::optional<StudyKind> study_from_name(const std::string& name) {
  const auto it = kStudies.find(name);
  if (it == kStudies.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& study_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, kind] : kStudies) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<SpectrumPeak> find_peaks(const std::vector<double>& frequency_hz,
                                     const std::vector<double>& values, double f_min,
                                     double f_max, double min_ratio) {
  std::vector<SpectrumPeak> peaks;
  const size_t n = values.size();
  for (size_t b = 1; b + 1 < n; ++b) {
    if (frequency_hz[b] < f_min || frequency_hz[b] > f_max) continue;
    if (!(values[b] > values[b - 1] && values[b] >= values[b + 1])) continue;
    // Prominence: lowest valley on the walk toward a higher bin (or the band
    // edge) on each side; both valleys must sit min_ratio below the peak.
    auto valley = [&](long long dir) {
      double low = values[b];
      for (long long i = static_cast<long long>(b) + dir;
           i >= 0 && i < static_cast<long long>(n); i += dir) {
        const size_t u = static_cast<size_t>(i);
        if (frequency_hz[u] < f_min || frequency_hz[u] > f_max) break;
        if (values[u] > values[b]) break;
        low = std::min(low, values[u]);
      }
      return low;
    };
    const double left = valley(-1);
    const double right = valley(+1);
    if (values[b] >= min_ratio * std::max(left, right) ||
        std::max(left, right) == 0.0) {
      // Sub-bin position by parabolic interpolation through the apex.
      const double denom = values[b - 1] - 2.0 * values[b] + values[b + 1];
      double shift = denom != 0.0 ? 0.5 * (values[b - 1] - values[b + 1]) / denom : 0.0;
      shift = std::clamp(shift, -0.5, 0.5);
      const double df = frequency_hz[b + 1] - frequency_hz[b];
      peaks.push_back({frequency_hz[b] + shift * df, values[b]});
    }
  }
  return peaks;
}

StudyOutcome run_study(StudyKind kind, const RunConfig& cfg) {
  StudyContext ctx(kind, cfg);
  switch (kind) {
    case StudyKind::SnapshotHistogram: run_snapshot_histogram(ctx); break;
    case StudyKind::FluctuationSurface: run_fluctuation_surface(ctx); break;
    case StudyKind::SupportCorrelation: run_support_correlation(ctx); break;
    case StudyKind::PsdBroadening: run_psd_broadening(ctx); break;
    case StudyKind::VkComparison: run_vk_comparison(ctx); break;
    case StudyKind::OdfScan: run_odf_scan(ctx); break;
    case StudyKind::ShoAppendix: run_sho_appendix(ctx); break;
  }
  ctx.write_summary();
  return ctx.outcome;
}

}  // namespace pentrap

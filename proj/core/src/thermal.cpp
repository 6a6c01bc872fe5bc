#include "pentrap/thermal.hpp"

#include <cmath>
#include <limits>

#include "pentrap/constants.hpp"
#include "pentrap/forces.hpp"

namespace pentrap {

void SamplerConfig::validate() const {
  if (t_perp < 0.0 || t_par < 0.0)
    throw ValidationError("SamplerConfig: temperatures must be >= 0");
  if (mh_scans < 1) throw ValidationError("SamplerConfig: mh_scans must be >= 1");
  if (mh_burn_in_scans < 0)
    throw ValidationError("SamplerConfig: mh_burn_in_scans must be >= 0");
  if (snapshot_stride < 1)
    throw ValidationError("SamplerConfig: snapshot_stride must be >= 1");
}

bool mh_accept(double delta, double theta, Rng& rng) {
  if (delta <= 0.0) return true;
  if (theta <= 0.0) return false;
  return rng.uniform01() < std::exp(-delta / theta);
}

std::vector<Vec3> sample_velocity_kicks(int n_ions, double temperature_kelvin,
                                        const Scales& scales, Rng& rng) {
  if (temperature_kelvin < 0.0)
    throw ValidationError("sample_velocity_kicks: temperature must be >= 0");
  const double sigma = std::sqrt(scales.thermal_energy(temperature_kelvin));
  std::vector<Vec3> v(static_cast<size_t>(n_ions));
  for (auto& vj : v) {
    vj.x = rng.gaussian(sigma);
    vj.y = rng.gaussian(sigma);
    vj.z = 0.0;
  }
  return v;
}

std::vector<std::complex<double>> project_mode_amplitudes(
    const std::vector<Vec3>& velocities, const InPlaneModes& modes) {
  const int n = modes.n;
  Eigen::VectorXcd v(2 * n);
  for (int j = 0; j < n; ++j) {
    v(2 * j) = velocities[j].x;
    v(2 * j + 1) = velocities[j].y;
  }
  std::vector<std::complex<double>> amps(static_cast<size_t>(2 * n));
  const std::complex<double> i_unit(0.0, 1.0);
  for (int m = 0; m < 2 * n; ++m) {
    const Eigen::VectorXcd ur = modes.position_part(m);
    amps[m] = i_unit * modes.frequencies(m) * ur.dot(v);
  }
  return amps;
}

std::vector<std::complex<double>> project_phase_space(
    const std::vector<Vec3>& displacements, const std::vector<Vec3>& velocities,
    const InPlaneModes& modes, const LinearizedModel& model) {
  const int n = modes.n;
  Eigen::VectorXcd dr(2 * n), v(2 * n);
  for (int j = 0; j < n; ++j) {
    dr(2 * j) = displacements[j].x;
    dr(2 * j + 1) = displacements[j].y;
    v(2 * j) = velocities[j].x;
    v(2 * j + 1) = velocities[j].y;
  }
  const Eigen::VectorXcd k_dr = model.k_perp.cast<std::complex<double>>() * dr;
  std::vector<std::complex<double>> amps(static_cast<size_t>(2 * n));
  for (int m = 0; m < 2 * n; ++m) {
    amps[m] = modes.position_part(m).dot(k_dr) + modes.velocity_part(m).dot(v);
  }
  return amps;
}

namespace {

// Energy change from moving ion i to p_new, O(N).
double move_delta(const std::vector<Vec3>& pos, int i, const Vec3& p_new,
                  const System& sys) {
  const double wx2 = sys.sf.perp * sys.sf.perp + sys.sf.wall * sys.sf.wall;
  const double wy2 = sys.sf.perp * sys.sf.perp - sys.sf.wall * sys.sf.wall;
  const Vec3& p_old = pos[i];
  double delta = 0.5 * (wx2 * (p_new.x * p_new.x - p_old.x * p_old.x) +
                        wy2 * (p_new.y * p_new.y - p_old.y * p_old.y));
  const int n = static_cast<int>(pos.size());
  for (int k = 0; k < n; ++k) {
    if (k == i) continue;
    const double r_new = (p_new - pos[k]).norm();
    if (r_new < sys.min_separation)
      return std::numeric_limits<double>::infinity();  // forces a rejection
    const double r_old = (p_old - pos[k]).norm();
    delta += 1.0 / r_new - 1.0 / r_old;
  }
  return delta;
}

}  // namespace

SnapshotEnsemble mh_sample_inplane(const EquilibriumConfiguration& eq,
                                   const System& sys, const SamplerConfig& sampler,
                                   std::uint64_t stream) {
  sampler.validate();
  if (eq.n() != sys.n())
    throw ValidationError("mh_sample_inplane: equilibrium size mismatch");

  SnapshotEnsemble out;
  if (sampler.t_perp == 0.0) {
    // Degenerate request: the chain would only ever accept downhill moves,
    // so the equilibrium itself is the single representative snapshot.
    out.snapshots.push_back(eq.positions);
    out.acceptance_rate = 0.5;  // sentinel; no chain was run
    out.mean_delta_phi_per_ion = 0.0;
    out.step_radius = 0.0;
    return out;
  }

  const double theta = sys.scales.thermal_energy(sampler.t_perp);
  const int n = sys.n();
  Rng rng(sampler.rng_seed, stream);

  const bool adaptive = sampler.mh_step_radius_m <= 0.0;
  const double soft = sys.sf.perp * sys.sf.perp - sys.sf.wall * sys.sf.wall;
  double radius = adaptive ? std::sqrt(theta / soft)
                           : sampler.mh_step_radius_m / sys.scales.length;

  std::vector<Vec3> pos = eq.positions;
  double phi = potential_energy_scaled(pos, sys);
  const double phi0 = phi;

  long long window_accepts = 0;
  const int adapt_window = 20;  // scans per radius adjustment during burn-in

  auto run_scan = [&](long long& accepts) {
    for (int i = 0; i < n; ++i) {
      const double ang = rng.uniform(0.0, 2.0 * constants::pi);
      const double rad = radius * std::sqrt(rng.uniform01());
      Vec3 p_new = pos[i];
      p_new.x += rad * std::cos(ang);
      p_new.y += rad * std::sin(ang);
      const double delta = move_delta(pos, i, p_new, sys);
      if (std::isfinite(delta) && mh_accept(delta, theta, rng)) {
        pos[i] = p_new;
        phi += delta;
        ++accepts;
      }
    }
  };

  for (int scan = 1; scan <= sampler.mh_burn_in_scans; ++scan) {
    run_scan(window_accepts);
    if (adaptive && scan % adapt_window == 0) {
      const double rate =
          static_cast<double>(window_accepts) / (adapt_window * n);
      if (rate > 0.55) radius *= 1.15;
      if (rate < 0.45) radius /= 1.15;
      window_accepts = 0;
    }
  }

  // Measurement phase: frozen radius.
  long long accepts = 0;
  double delta_phi_sum = 0.0;
  const int n_snapshots = sampler.mh_scans / sampler.snapshot_stride;
  out.snapshots.reserve(static_cast<size_t>(n_snapshots));
  for (int scan = 1; scan <= sampler.mh_scans; ++scan) {
    run_scan(accepts);
    if (scan % 1000 == 0) phi = potential_energy_scaled(pos, sys);  // kill drift
    if (scan % sampler.snapshot_stride == 0) {
      out.snapshots.push_back(pos);
      delta_phi_sum += phi - phi0;
    }
  }

  out.acceptance_rate =
      static_cast<double>(accepts) / (static_cast<double>(sampler.mh_scans) * n);
  out.mean_delta_phi_per_ion =
      out.snapshots.empty() ? 0.0
                            : delta_phi_sum / (static_cast<double>(out.snapshots.size()) * n);
  out.step_radius = radius;
  return out;
}

AxialSample sample_axial_thermal(const DrumheadModes& modes,
                                 double temperature_kelvin, const Scales& scales,
                                 Rng& rng) {
  if (temperature_kelvin < 0.0)
    throw ValidationError("sample_axial_thermal: temperature must be >= 0");
  const double theta = scales.thermal_energy(temperature_kelvin);
  const int n = static_cast<int>(modes.frequencies.size());

  AxialSample s;
  s.z.assign(static_cast<size_t>(n), 0.0);
  s.vz.assign(static_cast<size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    const double w = modes.frequencies(m);
    // Mode energy 2 w^2 |A|^2 ==> Var(Re A) = Var(Im A) = theta / (4 w^2).
    const double sigma = std::sqrt(theta) / (2.0 * w);
    const double re = rng.gaussian(sigma);
    const double im = rng.gaussian(sigma);
    // xi(0) = 2 Re A, xi_dot(0) = 2 w Im A
    for (int j = 0; j < n; ++j) {
      s.z[j] += modes.eigenvectors(j, m) * 2.0 * re;
      s.vz[j] += modes.eigenvectors(j, m) * 2.0 * w * im;
    }
  }
  return s;
}

namespace {

KickMoments accumulate_moments(const std::vector<double>& x,
                               const std::vector<double>& v) {
  const auto n = static_cast<double>(x.size());
  double sx2 = 0, sv2 = 0, sxv = 0, sx2v2 = 0;
  double qx2 = 0, qv2 = 0, qxv = 0, qx2v2 = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double x2 = x[i] * x[i];
    const double v2 = v[i] * v[i];
    const double xv = x[i] * v[i];
    const double x2v2 = x2 * v2;
    sx2 += x2; sv2 += v2; sxv += xv; sx2v2 += x2v2;
    qx2 += x2 * x2; qv2 += v2 * v2; qxv += xv * xv; qx2v2 += x2v2 * x2v2;
  }
  auto finish = [n](double s, double q) {
    MomentEstimate e;
    e.mean = s / n;
    const double var = q / n - e.mean * e.mean;
    e.std_error = std::sqrt(std::max(0.0, var) / n);
    return e;
  };
  KickMoments m;
  m.x2 = finish(sx2, qx2);
  m.v2 = finish(sv2, qv2);
  m.xv = finish(sxv, qxv);
  m.x2v2 = finish(sx2v2, qx2v2);
  return m;
}

}  // namespace

ShoKickReport sho_kick_moment_study(double k, double m, double temperature_kelvin,
                                    int n_samples, Rng& rng) {
  if (!(k > 0.0) || !(m > 0.0) || !(temperature_kelvin > 0.0) || n_samples < 2)
    throw ValidationError("sho_kick_moment_study: need positive k, m, T and n >= 2");
  const double kbt = constants::k_B * temperature_kelvin;
  const double omega = std::sqrt(k / m);

  std::vector<double> x(static_cast<size_t>(n_samples)),
      v(static_cast<size_t>(n_samples));

  ShoKickReport rep;
  rep.expected_x2 = kbt / k;
  rep.expected_v2 = kbt / m;
  rep.expected_x2v2_m1 = kbt * kbt / (k * m);
  rep.expected_x2v2_m2 = 1.5 * kbt * kbt / (k * m);

  // Method 1: independent Gaussian position and velocity.
  const double sx = std::sqrt(kbt / k);
  const double sv = std::sqrt(kbt / m);
  for (int i = 0; i < n_samples; ++i) {
    x[static_cast<size_t>(i)] = rng.gaussian(sx);
    v[static_cast<size_t>(i)] = rng.gaussian(sv);
  }
  rep.method1 = accumulate_moments(x, v);

  // Method 2: velocity kick at 2T followed by a uniform mixing phase.
  const double s_kick = std::sqrt(2.0 * kbt / m);
  for (int i = 0; i < n_samples; ++i) {
    const double vmax = rng.gaussian(s_kick);
    const double phase = rng.uniform(0.0, 2.0 * constants::pi);
    x[static_cast<size_t>(i)] = vmax / omega * std::sin(phase);
    v[static_cast<size_t>(i)] = vmax * std::cos(phase);
  }
  rep.method2 = accumulate_moments(x, v);
  return rep;
}

}  // namespace pentrap

#include "pentrap/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pentrap/constants.hpp"

namespace pentrap {

void IntegratorConfig::validate() const {
  if (dt != 0.0 && t_total < std::abs(dt))
    throw ValidationError("IntegratorConfig: t_total must be >= |dt|");
  if (!(t_total > 0.0)) throw ValidationError("IntegratorConfig: t_total must be > 0");
  if (record_stride < 1)
    throw ValidationError("IntegratorConfig: record_stride must be >= 1");
  if (energy_check_stride < 1)
    throw ValidationError("IntegratorConfig: energy_check_stride must be >= 1");
}

double default_time_step(const System& sys) {
  const double omega_plus = single_ion_omega_plus(sys.sf) * sys.scales.frequency;
  return constants::two_pi / (100.0 * omega_plus);
}

double Trajectory::energy_fluctuation() const {
  if (total.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(total.begin(), total.end());
  double mean = 0.0;
  for (double e : total) mean += e;
  mean /= static_cast<double>(total.size());
  return (*hi - *lo) / std::abs(mean);
}

double Trajectory::thermal_energy_fluctuation(double reference_energy_joule) const {
  if (total.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(total.begin(), total.end());
  double mean = 0.0;
  for (double e : total) mean += e;
  mean /= static_cast<double>(total.size());
  const double thermal = mean - reference_energy_joule;
  return (*hi - *lo) / std::abs(thermal);
}

namespace {

// dv/dt for given positions and velocities (internal units).
void stage_accel(const std::vector<Vec3>& pos, const std::vector<Vec3>& vel,
                 const System& sys, std::vector<Vec3>& acc) {
  position_force_scaled(pos, sys, acc);
  const double wc = sys.sf.c_prime;
  for (size_t j = 0; j < vel.size(); ++j) {
    acc[j].x += wc * vel[j].y;
    acc[j].y -= wc * vel[j].x;
  }
}

}  // namespace

Trajectory integrate(const CrystalState& initial, const System& sys,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  initial.validate(sys);

  // A negative dt integrates backward in time (used by reversibility checks).
  const double dt_si = cfg.dt != 0.0 ? cfg.dt : default_time_step(sys);
  const double guard = 2.5 * default_time_step(sys);  // == 2pi/(40 omega_+)
  if (std::abs(dt_si) > guard && !cfg.allow_large_dt)
    throw StepTooLarge("integrate: dt does not resolve the cyclotron motion (dt > 2pi/(40 w+))");

  const double dt = dt_si / sys.scales.time;
  // Round the step count up to a record-stride multiple so the final sample
  // falls exactly on the final step (spectra rely on a complete grid).
  long long n_steps = std::llround(cfg.t_total / std::abs(dt_si));
  if (n_steps % cfg.record_stride != 0)
    n_steps += cfg.record_stride - n_steps % cfg.record_stride;
  if (n_steps < 1) throw ValidationError("integrate: t_total shorter than one step");

  const int n = sys.n();
  const size_t un = static_cast<size_t>(n);
  const bool rec_inplane = cfg.record == RecordSet::Full ||
                           cfg.record == RecordSet::Positions ||
                           cfg.record == RecordSet::InPlane;
  const bool rec_axial = cfg.record == RecordSet::Full ||
                         cfg.record == RecordSet::Positions ||
                         cfg.record == RecordSet::Axial;
  const bool rec_vel = cfg.record == RecordSet::Full;

  Trajectory traj;
  traj.dt = dt_si;
  traj.sample_dt = dt_si * cfg.record_stride;
  const long long n_samples = n_steps / cfg.record_stride + 1;
  traj.times.reserve(static_cast<size_t>(n_samples));
  auto reserve_series = [&](std::vector<std::vector<double>>& s) {
    s.assign(un, {});
    for (auto& row : s) row.reserve(static_cast<size_t>(n_samples));
  };
  if (rec_inplane) { reserve_series(traj.x); reserve_series(traj.y); }
  if (rec_axial) reserve_series(traj.z);
  if (rec_vel) { reserve_series(traj.vx); reserve_series(traj.vy); reserve_series(traj.vz); }

  std::vector<Vec3> pos = initial.positions;
  std::vector<Vec3> vel = initial.velocities;
  std::vector<Vec3> a1(un), a2(un), a3(un), a4(un);
  std::vector<Vec3> rt(un), v2(un), v3(un), v4(un);

  const double lscale = sys.scales.length;
  const double vscale = sys.scales.velocity;

  auto record = [&](long long step) {
    traj.times.push_back(static_cast<double>(step) * dt_si);
    for (int j = 0; j < n; ++j) {
      const size_t uj = static_cast<size_t>(j);
      if (rec_inplane) {
        traj.x[uj].push_back(pos[uj].x * lscale);
        traj.y[uj].push_back(pos[uj].y * lscale);
      }
      if (rec_axial) traj.z[uj].push_back(pos[uj].z * lscale);
      if (rec_vel) {
        traj.vx[uj].push_back(vel[uj].x * vscale);
        traj.vy[uj].push_back(vel[uj].y * vscale);
        traj.vz[uj].push_back(vel[uj].z * vscale);
      }
      if (!pos[uj].finite() || !vel[uj].finite())
        throw NumericalBlowup("integrate: non-finite coordinate at t=" +
                              std::to_string(static_cast<double>(step) * dt_si) + " s");
    }
  };

  auto check_energy = [&](long long step) {
    const double kin = [&] {
      double t = 0.0;
      for (const auto& v : vel) t += v.norm2();
      return 0.5 * t;
    }();
    const double pot = potential_energy_scaled(pos, sys);
    traj.energy_times.push_back(static_cast<double>(step) * dt_si);
    traj.kinetic.push_back(kin * sys.scales.energy);
    traj.potential.push_back(pot * sys.scales.energy);
    traj.total.push_back((kin + pot) * sys.scales.energy);
  };

  record(0);
  check_energy(0);

  const double h = dt, h2 = 0.5 * dt, h6 = dt / 6.0;
  for (long long step = 1; step <= n_steps; ++step) {
    stage_accel(pos, vel, sys, a1);
    for (int j = 0; j < n; ++j) {
      const size_t u = static_cast<size_t>(j);
      rt[u] = pos[u] + h2 * vel[u];
      v2[u] = vel[u] + h2 * a1[u];
    }
    stage_accel(rt, v2, sys, a2);
    for (int j = 0; j < n; ++j) {
      const size_t u = static_cast<size_t>(j);
      rt[u] = pos[u] + h2 * v2[u];
      v3[u] = vel[u] + h2 * a2[u];
    }
    stage_accel(rt, v3, sys, a3);
    for (int j = 0; j < n; ++j) {
      const size_t u = static_cast<size_t>(j);
      rt[u] = pos[u] + h * v3[u];
      v4[u] = vel[u] + h * a3[u];
    }
    stage_accel(rt, v4, sys, a4);
    for (int j = 0; j < n; ++j) {
      const size_t u = static_cast<size_t>(j);
      pos[u] += h6 * (vel[u] + 2.0 * (v2[u] + v3[u]) + v4[u]);
      vel[u] += h6 * (a1[u] + 2.0 * (a2[u] + a3[u]) + a4[u]);
    }
    if (step % cfg.record_stride == 0) record(step);
    if (step % cfg.energy_check_stride == 0 || step == n_steps) check_energy(step);
  }

  traj.final_state.positions = std::move(pos);
  traj.final_state.velocities = std::move(vel);
  traj.final_state.time = initial.time + static_cast<double>(n_steps) * dt;
  return traj;
}

InPlaneDeviation harmonic_evolve(const InPlaneModes& modes,
                                 const std::vector<std::complex<double>>& amplitudes,
                                 double t) {
  const int n = modes.n;
  if (static_cast<int>(amplitudes.size()) != 2 * n)
    throw ValidationError("harmonic_evolve: expected 2N amplitudes");
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(4 * n);
  for (int m = 0; m < 2 * n; ++m) {
    const std::complex<double> phase =
        std::exp(std::complex<double>(0.0, -modes.frequencies(m) * t));
    q += amplitudes[static_cast<size_t>(m)] * phase * modes.eigenvectors.col(m);
  }
  InPlaneDeviation dev;
  dev.displacements.resize(static_cast<size_t>(n));
  dev.velocities.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const size_t u = static_cast<size_t>(j);
    dev.displacements[u] = {2.0 * q(2 * j).real(), 2.0 * q(2 * j + 1).real(), 0.0};
    dev.velocities[u] = {2.0 * q(2 * n + 2 * j).real(), 2.0 * q(2 * n + 2 * j + 1).real(), 0.0};
  }
  return dev;
}

AxialDeviation harmonic_evolve_axial(const DrumheadModes& modes,
                                     const std::vector<std::complex<double>>& amplitudes,
                                     double t) {
  const int n = static_cast<int>(modes.frequencies.size());
  if (static_cast<int>(amplitudes.size()) != n)
    throw ValidationError("harmonic_evolve_axial: expected N amplitudes");
  AxialDeviation dev;
  dev.z.assign(static_cast<size_t>(n), 0.0);
  dev.vz.assign(static_cast<size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    const double w = modes.frequencies(m);
    const std::complex<double> a = amplitudes[static_cast<size_t>(m)];
    const std::complex<double> ph = std::exp(std::complex<double>(0.0, -w * t));
    const double xi = 2.0 * (a * ph).real();
    const double xidot = 2.0 * (std::complex<double>(0.0, -w) * a * ph).real();
    for (int j = 0; j < n; ++j) {
      dev.z[static_cast<size_t>(j)] += modes.eigenvectors(j, m) * xi;
      dev.vz[static_cast<size_t>(j)] += modes.eigenvectors(j, m) * xidot;
    }
  }
  return dev;
}

}  // namespace pentrap

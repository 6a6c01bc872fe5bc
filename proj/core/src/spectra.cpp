#include "pentrap/spectra.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "pentrap/constants.hpp"
#include "pentrap/parallel.hpp"

namespace pentrap {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// Forward DFT of a real series: out[m] = sum_k in[k] exp(-2 pi i m k / M),
// m = 0..M/2.
void real_dft(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
  const int m = static_cast<int>(in.size());
  out.resize(static_cast<size_t>(m / 2 + 1));
  std::vector<double> buf(in);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_r2c_1d(m, buf.data(),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
}

void check_grid(const std::vector<Trajectory>& ensemble) {
  if (ensemble.empty()) throw GridMismatch("psd: empty trajectory ensemble");
  const auto& first = ensemble.front();
  for (const auto& t : ensemble) {
    if (t.n_samples() != first.n_samples() ||
        std::abs(t.sample_dt - first.sample_dt) > 1e-15)
      throw GridMismatch("psd: trajectories disagree on the sampling grid");
  }
}

// Accumulate sum_j |s~_j(w)|^2 over the one-sided grid for one axis of one
// trajectory. norm = dt^2 / T_tot.
void accumulate_axis(const std::vector<std::vector<double>>& series, double norm,
                     std::vector<double>& acc) {
  std::vector<std::complex<double>> ft;
  for (const auto& row : series) {
    real_dft(row, ft);
    const size_t m = row.size();
    for (size_t b = 0; b < ft.size(); ++b) {
      // Interior bins gain the mirrored negative-frequency term; DC and (for
      // even M) Nyquist are their own mirror and stay single-counted.
      const bool edge = (b == 0) || (2 * b == m);
      acc[b] += (edge ? 1.0 : 2.0) * norm * std::norm(ft[b]);
    }
  }
}

}  // namespace

Spectrum psd(const std::vector<Trajectory>& ensemble, SpectrumAxis axis) {
  check_grid(ensemble);
  const auto& first = ensemble.front();
  const int m = first.n_samples();
  const double dt = first.sample_dt;
  const double t_tot = dt * m;

  Spectrum s;
  s.kind = SpectrumKind::Psd;
  s.axis = axis;
  s.n_realizations = static_cast<int>(ensemble.size());
  s.frequency_hz.resize(static_cast<size_t>(m / 2 + 1));
  for (size_t b = 0; b < s.frequency_hz.size(); ++b)
    s.frequency_hz[b] = static_cast<double>(b) / t_tot;
  s.values.assign(s.frequency_hz.size(), 0.0);

  const double norm = dt * dt / t_tot;
  for (const auto& traj : ensemble) {
    if (axis == SpectrumAxis::Axial) {
      if (traj.z.empty()) throw GridMismatch("psd: axial series not recorded");
      accumulate_axis(traj.z, norm, s.values);
    } else {
      if (traj.x.empty() || traj.y.empty())
        throw GridMismatch("psd: in-plane series not recorded");
      accumulate_axis(traj.x, norm, s.values);
      accumulate_axis(traj.y, norm, s.values);
    }
  }
  for (auto& v : s.values) v /= static_cast<double>(ensemble.size());
  return s;
}

void OdfConfig::validate() const {
  if (f0 < 0.0 || tau < 0.0 || t_pi < 0.0 || gamma < 0.0)
    throw ValidationError("OdfConfig: negative parameter");
  if (!(tau > 0.0)) throw ValidationError("OdfConfig: tau must be > 0");
}

namespace {

// Trapezoid of z(t) cos(mu t) over the node range [k0, k1].
double segment_trapezoid(const std::vector<double>& z, double dt, double mu,
                         size_t k0, size_t k1) {
  auto f = [&](size_t k) {
    return z[k] * std::cos(mu * static_cast<double>(k) * dt);
  };
  double acc = 0.0;
  for (size_t k = k0; k < k1; ++k) acc += 0.5 * (f(k) + f(k + 1));
  return acc * dt;
}

// Phase integral for one ion: Int g(t) z(t) cos(mu t) dt with the echo
// modulation g, evaluated piecewise so each segment is an exact trapezoid.
// tau and tau + t_pi are snapped to the nearest grid nodes.
double phase_integral(const std::vector<double>& z, double dt, double mu, double tau,
                      double t_pi) {
  const size_t last = z.size() - 1;
  const size_t k_tau = static_cast<size_t>(std::llround(tau / dt));
  const size_t k_echo = static_cast<size_t>(std::llround((tau + t_pi) / dt));
  if (k_tau > last || k_echo > last || k_echo < k_tau)
    throw DurationMismatch("odf: echo boundaries outside the recorded grid");
  return segment_trapezoid(z, dt, mu, 0, k_tau) -
         segment_trapezoid(z, dt, mu, k_echo, last);
}

}  // namespace

double odf_bright_fraction(const std::vector<Trajectory>& ensemble,
                           const OdfConfig& odf) {
  odf.validate();
  check_grid(ensemble);
  const auto& first = ensemble.front();
  const double dt = first.sample_dt;
  const double duration = dt * (first.n_samples() - 1);
  if (std::abs(duration - odf.sequence_length()) > 0.5 * dt)
    throw DurationMismatch("odf_bright_fraction: 2 tau + t_pi != trajectory length");

  const double damp = std::exp(-2.0 * odf.gamma * odf.tau);
  const double phase_scale = 2.0 * odf.f0 / constants::hbar;

  double sum = 0.0;
  long long count = 0;
  for (const auto& traj : ensemble) {
    if (traj.z.empty())
      throw GridMismatch("odf_bright_fraction: axial series not recorded");
    for (const auto& zj : traj.z) {
      const double a =
          phase_scale * phase_integral(zj, dt, odf.mu_r, odf.tau, odf.t_pi);
      sum += 0.5 * (1.0 - damp * std::cos(a));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

namespace {

// Trapezoid of z(t) c(t) over the node range [k0, k1] with a precomputed
// cosine table.
double segment_trapezoid_pre(const std::vector<double>& z,
                             const std::vector<double>& c, double dt, size_t k0,
                             size_t k1) {
  if (k0 >= k1) return 0.0;
  double acc = 0.5 * (z[k0] * c[k0] + z[k1] * c[k1]);
  for (size_t k = k0 + 1; k < k1; ++k) acc += z[k] * c[k];
  return acc * dt;
}

}  // namespace

Spectrum odf_spectrum(const std::vector<Trajectory>& ensemble, const OdfConfig& base,
                      const std::vector<double>& mu_r_grid_hz, int n_threads) {
  base.validate();
  check_grid(ensemble);
  const auto& first = ensemble.front();
  const double dt = first.sample_dt;
  const size_t m = static_cast<size_t>(first.n_samples());
  const double duration = dt * (static_cast<double>(m) - 1.0);
  if (std::abs(duration - base.sequence_length()) > 0.5 * dt)
    throw DurationMismatch("odf_spectrum: 2 tau + t_pi != trajectory length");
  const size_t k_tau = static_cast<size_t>(std::llround(base.tau / dt));
  const size_t k_echo =
      static_cast<size_t>(std::llround((base.tau + base.t_pi) / dt));
  if (k_tau > m - 1 || k_echo > m - 1 || k_echo < k_tau)
    throw DurationMismatch("odf_spectrum: echo boundaries outside the grid");

  const double damp = std::exp(-2.0 * base.gamma * base.tau);
  const double phase_scale = 2.0 * base.f0 / constants::hbar;

  Spectrum s;
  s.kind = SpectrumKind::Odf;
  s.axis = SpectrumAxis::Axial;
  s.n_realizations = static_cast<int>(ensemble.size());
  s.frequency_hz = mu_r_grid_hz;
  s.values.assign(mu_r_grid_hz.size(), 0.0);

  parallel_for(static_cast<int>(mu_r_grid_hz.size()), n_threads, [&](int i) {
    const double mu = constants::two_pi * mu_r_grid_hz[static_cast<size_t>(i)];
    std::vector<double> costab(m);
    for (size_t k = 0; k < m; ++k)
      costab[k] = std::cos(mu * static_cast<double>(k) * dt);
    double sum = 0.0;
    long long count = 0;
    for (const auto& traj : ensemble) {
      if (traj.z.empty())
        throw GridMismatch("odf_spectrum: axial series not recorded");
      for (const auto& zj : traj.z) {
        const double a =
            phase_scale * (segment_trapezoid_pre(zj, costab, dt, 0, k_tau) -
                           segment_trapezoid_pre(zj, costab, dt, k_echo, m - 1));
        sum += 0.5 * (1.0 - damp * std::cos(a));
        ++count;
      }
    }
    s.values[static_cast<size_t>(i)] = sum / static_cast<double>(count);
  });
  return s;
}

Spectrum odf_spectrum(const std::function<std::vector<Trajectory>()>& make_ensemble,
                      const OdfConfig& base, const std::vector<double>& mu_r_grid_hz,
                      int n_threads) {
  const std::vector<Trajectory> ensemble = make_ensemble();
  return odf_spectrum(ensemble, base, mu_r_grid_hz, n_threads);
}

double to_db(double value) { return 10.0 * std::log10(value); }

}  // namespace pentrap

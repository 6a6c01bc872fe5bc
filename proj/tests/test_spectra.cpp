#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pentrap/dynamics.hpp"
#include "pentrap/equilibrium.hpp"
#include "pentrap/rng.hpp"
#include "pentrap/spectra.hpp"
#include "test_support.hpp"

using namespace pentrap;
using namespace testsupport;

namespace {

// Hand-built single-ion trajectory with a prescribed z series.
Trajectory synth_trajectory(const std::vector<double>& z, double dt) {
  Trajectory t;
  t.z.push_back(z);
  t.sample_dt = dt;
  t.dt = dt;
  t.times.resize(z.size());
  for (size_t k = 0; k < z.size(); ++k) t.times[k] = static_cast<double>(k) * dt;
  return t;
}

}  // namespace

TEST_CASE("on-grid sinusoid produces a single PSD peak of the expected height") {
  const int m = 4096;
  const double dt = 1e-7;
  const double t_tot = m * dt;
  const int bin = 97;
  const double f0 = bin / t_tot;
  const double a = 2.5e-9;

  std::vector<double> z(m);
  for (int k = 0; k < m; ++k)
    z[static_cast<size_t>(k)] = a * std::cos(constants::two_pi * f0 * k * dt);

  const auto s = psd({synth_trajectory(z, dt)}, SpectrumAxis::Axial);
  REQUIRE(static_cast<int>(s.frequency_hz.size()) == m / 2 + 1);
  CHECK(s.frequency_hz[1] - s.frequency_hz[0] == doctest::Approx(1.0 / t_tot));

  // One-sided peak value a^2 T / 2 for an exactly periodic cosine.
  CHECK(s.values[bin] == doctest::Approx(a * a * t_tot / 2.0).epsilon(1e-10));
  for (size_t b = 0; b < s.values.size(); ++b) {
    if (static_cast<int>(b) == bin) continue;
    CHECK(s.values[b] <= 1e-12 * s.values[bin]);
  }
}

TEST_CASE("PSD satisfies Parseval's identity") {
  const int m = 3001;  // odd length exercises the no-Nyquist-bin path
  const double dt = 2e-8;
  Rng rng(51);
  std::vector<double> z(m);
  for (auto& v : z) v = rng.gaussian(1e-9);

  const auto s = psd({synth_trajectory(z, dt)}, SpectrumAxis::Axial);
  double bin_sum = 0.0;
  for (double v : s.values) bin_sum += v;
  bin_sum /= (m * dt);  // times the bin width 1/T

  double mean_sq = 0.0;
  for (double v : z) mean_sq += v * v;
  mean_sq /= m;

  CHECK(bin_sum == doctest::Approx(mean_sq).epsilon(1e-6));
}

TEST_CASE("PSD is invariant under a circular time shift") {
  const int m = 1024;
  const double dt = 1e-7;
  Rng rng(53);
  std::vector<double> z(m);
  for (auto& v : z) v = rng.gaussian(1e-9);

  const auto base = psd({synth_trajectory(z, dt)}, SpectrumAxis::Axial);
  std::vector<double> shifted(z);
  std::rotate(shifted.begin(), shifted.begin() + 137, shifted.end());
  const auto moved = psd({synth_trajectory(shifted, dt)}, SpectrumAxis::Axial);

  for (size_t b = 0; b < base.values.size(); ++b)
    CHECK(moved.values[b] == doctest::Approx(base.values[b]).epsilon(1e-10));
}

TEST_CASE("mismatched trajectory grids are rejected") {
  std::vector<double> a(128, 0.0), b(256, 0.0);
  const std::vector<Trajectory> ens = {synth_trajectory(a, 1e-7),
                                       synth_trajectory(b, 1e-7)};
  CHECK_THROWS_AS(psd(ens, SpectrumAxis::Axial), GridMismatch);
  CHECK_THROWS_AS(psd({synth_trajectory(a, 1e-7)}, SpectrumAxis::InPlane),
                  GridMismatch);  // in-plane series absent
}

TEST_CASE("a pure normal mode shows up as a single in-plane PSD line") {
  const System sys = reference_system(3);
  const auto eq = find_equilibrium(sys);
  const auto model = build_linearized_model(eq, sys);
  const auto modes = inplane_modes(model);

  // Excite only the highest ExB mode.
  const int target = 2;
  std::vector<std::complex<double>> amps(6);
  amps[target] = std::complex<double>(2e-4, 1e-4);
  const auto dev = harmonic_evolve(modes, amps, 0.0);

  CrystalState init = eq.to_state();
  for (int j = 0; j < 3; ++j) {
    const size_t u = static_cast<size_t>(j);
    init.positions[u] += dev.displacements[u];
    init.velocities[u] = dev.velocities[u];
  }

  const double f_mode = modes.frequencies(target) * sys.scales.frequency /
                        constants::two_pi;
  IntegratorConfig cfg;
  cfg.t_total = 400.0 / f_mode;  // a few hundred mode periods
  cfg.record_stride = 8;
  Trajectory traj = integrate(init, sys, cfg);

  // Remove the static equilibrium offsets so only the oscillation remains.
  for (int j = 0; j < 3; ++j) {
    const size_t u = static_cast<size_t>(j);
    const double x0 = eq.positions[u].x * sys.scales.length;
    const double y0 = eq.positions[u].y * sys.scales.length;
    for (auto& v : traj.x[u]) v -= x0;
    for (auto& v : traj.y[u]) v -= y0;
  }

  const auto s = psd({traj}, SpectrumAxis::InPlane);
  const auto peak = std::max_element(s.values.begin(), s.values.end());
  const auto peak_bin = static_cast<size_t>(peak - s.values.begin());
  const double df = s.frequency_hz[1] - s.frequency_hz[0];
  CHECK(std::abs(s.frequency_hz[peak_bin] - f_mode) <= df);
}

TEST_CASE("ODF bright fraction") {
  const double tau = 100e-6;
  const double dt = 2.0 * tau / 40000.0;
  const int m = 40001;

  SUBCASE("zero force gives the pure decoherence baseline") {
    std::vector<double> z(m, 3e-9);
    OdfConfig odf;
    odf.f0 = 0.0;
    odf.tau = tau;
    odf.gamma = 500.0;
    odf.mu_r = constants::two_pi * 1e6;
    const double p = odf_bright_fraction({synth_trajectory(z, dt)}, odf);
    CHECK(p == doctest::Approx(0.5 * (1.0 - std::exp(-2.0 * odf.gamma * tau))).epsilon(1e-14));
  }

  SUBCASE("full decoherence pins the fraction at one half") {
    std::vector<double> z(m, 3e-9);
    OdfConfig odf;
    odf.f0 = 1e-22;
    odf.tau = tau;
    odf.gamma = 1e9;
    odf.mu_r = constants::two_pi * 1e6;
    CHECK(odf_bright_fraction({synth_trajectory(z, dt)}, odf) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("frozen ion matches the closed-form phase integral") {
    const double z0 = 4e-9;
    std::vector<double> z(m, z0);
    OdfConfig odf;
    odf.f0 = 5e-23;
    odf.tau = tau;
    odf.gamma = 300.0;
    odf.mu_r = constants::two_pi * 23456.0;  // off zero, no resonance involved

    // A = (2 F0 z0 / hbar) [int_0^tau - int_tau^2tau] cos(mu t) dt
    //   = (2 F0 z0 / hbar) (2 sin(mu tau) - sin(2 mu tau)) / mu.
    const double mu = odf.mu_r;
    const double a = 2.0 * odf.f0 * z0 / constants::hbar *
                     (2.0 * std::sin(mu * tau) - std::sin(2.0 * mu * tau)) / mu;
    const double expected = 0.5 * (1.0 - std::exp(-2.0 * odf.gamma * tau) * std::cos(a));
    CHECK(odf_bright_fraction({synth_trajectory(z, dt)}, odf) ==
          doctest::Approx(expected).epsilon(1e-8));
  }

  SUBCASE("accumulated phase is linear in the force") {
    // For one deterministic trajectory with Gamma = 0, doubling F0 doubles
    // the phase A exactly, so P(2 F0) = 1 - (1 - 2 P(F0))^2.
    Rng rng(57);
    std::vector<double> z(m);
    for (auto& v : z) v = 4e-9 * rng.gaussian();
    OdfConfig odf;
    odf.f0 = 5e-20;
    odf.tau = tau;
    odf.gamma = 0.0;
    odf.mu_r = constants::two_pi * 50e3;
    const double p1 = odf_bright_fraction({synth_trajectory(z, dt)}, odf);
    odf.f0 *= 2.0;
    const double p2 = odf_bright_fraction({synth_trajectory(z, dt)}, odf);
    REQUIRE(p1 > 1e-3);  // the phase is O(1), no underflow regime
    CHECK(p2 == doctest::Approx(1.0 - (1.0 - 2.0 * p1) * (1.0 - 2.0 * p1)).epsilon(1e-10));
  }

  SUBCASE("bright fraction respects the decoherence bounds") {
    Rng rng(59);
    std::vector<double> z(m);
    for (auto& v : z) v = 5e-9 * rng.gaussian();
    OdfConfig odf;
    odf.f0 = 2e-22;
    odf.tau = tau;
    odf.gamma = 800.0;
    const double lo = 0.5 * (1.0 - std::exp(-2.0 * odf.gamma * tau));
    const double hi = 0.5 * (1.0 + std::exp(-2.0 * odf.gamma * tau));
    for (double f_hz : {1e4, 5e4, 2e5, 1e6}) {
      odf.mu_r = constants::two_pi * f_hz;
      const double p = odf_bright_fraction({synth_trajectory(z, dt)}, odf);
      CHECK(p >= lo - 1e-12);
      CHECK(p <= hi + 1e-12);
    }
  }

  SUBCASE("sequence length must match the trajectory") {
    std::vector<double> z(m, 1e-9);
    OdfConfig odf;
    odf.f0 = 1e-23;
    odf.tau = 0.7 * tau;  // 2 tau + t_pi != recorded duration
    odf.gamma = 100.0;
    odf.mu_r = constants::two_pi * 1e5;
    CHECK_THROWS_AS(odf_bright_fraction({synth_trajectory(z, dt)}, odf),
                    DurationMismatch);
  }
}

TEST_CASE("ODF spectrum scans reuse a single ensemble") {
  const double tau = 50e-6;
  const int m = 10001;
  const double dt = 2.0 * tau / (m - 1);
  Rng rng(61);
  std::vector<double> z(m);
  for (auto& v : z) v = 2e-9 * rng.gaussian();

  OdfConfig base;
  base.f0 = 1e-23;
  base.tau = tau;
  base.gamma = 200.0;

  std::vector<double> grid;
  for (int i = 0; i < 16; ++i) grid.push_back(1.0e6 + 5.0e3 * i);

  int factory_calls = 0;
  const auto spec = odf_spectrum(
      [&] {
        ++factory_calls;
        return std::vector<Trajectory>{synth_trajectory(z, dt)};
      },
      base, grid, 2);
  CHECK(factory_calls == 1);
  REQUIRE(spec.values.size() == grid.size());
  CHECK(spec.kind == SpectrumKind::Odf);
  for (double v : spec.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

#include <benchmark/benchmark.h>

#include "pentrap/constants.hpp"
#include "pentrap/equilibrium.hpp"
#include "pentrap/forces.hpp"
#include "pentrap/modes.hpp"

using namespace pentrap;

namespace {

System make_system(int n) {
  return System::create(trap_from_frequencies(
      9.012182 * constants::amu, constants::q_e, n, constants::two_pi * 7.596e6,
      constants::two_pi * 180.0e3, constants::two_pi * 1.59e6,
      constants::two_pi * 68.0e3));
}

}  // namespace

static void BM_Accelerations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const System sys = make_system(n);
  const auto eq = find_equilibrium(sys);
  CrystalState s = eq.to_state();
  std::vector<Vec3> acc;
  for (auto _ : state) {
    accelerations_scaled(s, sys, acc);
    benchmark::DoNotOptimize(acc.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Accelerations)->RangeMultiplier(2)->Range(8, 128)->Complexity();

static void BM_AxialStiffnessModes(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const System sys = make_system(n);
  const auto eq = find_equilibrium(sys);
  for (auto _ : state) {
    const auto modes = drumhead_modes_of(axial_stiffness(eq.positions, sys));
    benchmark::DoNotOptimize(modes.frequencies.data());
  }
}
BENCHMARK(BM_AxialStiffnessModes)->Arg(32)->Arg(120);

static void BM_InPlaneModes(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const System sys = make_system(n);
  const auto model = build_linearized_model(find_equilibrium(sys), sys);
  for (auto _ : state) {
    const auto modes = inplane_modes(model);
    benchmark::DoNotOptimize(modes.frequencies.data());
  }
}
BENCHMARK(BM_InPlaneModes)->Arg(32)->Arg(120);

BENCHMARK_MAIN();

#include "cleave/energy.hpp"
#include "cleave/minimizer.hpp"
#include "cleave/reduced.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace cleave;

namespace {

Positions jiggled(const Lattice& lat) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  Positions y = lat.atoms();
  for (Vec2& p : y) p += lat.eps() * Vec2(u(g), u(g));
  return y;
}

void BM_EnergyGradient(benchmark::State& state) {
  const Lattice lat = Lattice::build({2.0, 1.0 / static_cast<double>(state.range(0)), 0.26});
  const auto fam = PotentialFamily::lennard_jones(1.0);
  const Positions y = jiggled(lat);
  Positions g(y.size());
  EnergyEvaluator ev(lat, fam);
  for (auto _ : state) benchmark::DoNotOptimize(ev.value_and_gradient(y, g));
  state.counters["atoms"] = static_cast<double>(lat.atom_count());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lat.bonds().size()));
}
BENCHMARK(BM_EnergyGradient)->Arg(16)->Arg(32)->Arg(64);

void BM_TotalEnergyReport(benchmark::State& state) {
  const Lattice lat = Lattice::build({2.0, 1.0 / 32.0, 0.26});
  const auto fam = PotentialFamily::synthetic(4.0, 0.0, 1.0);
  const Positions y = jiggled(lat);
  for (auto _ : state) benchmark::DoNotOptimize(total_energy(lat, y, fam).raw_energy);
}
BENCHMARK(BM_TotalEnergyReport);

void BM_ReducedEnergy(benchmark::State& state) {
  const auto fam = PotentialFamily::lennard_jones(1.0);
  double r = 1.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reduced_energy_numeric(fam, 0.26, r));
    r = r > 2.0 ? 1.01 : r + 0.01;
  }
}
BENCHMARK(BM_ReducedEnergy);

void BM_MinimizeElastic(benchmark::State& state) {
  const Lattice lat = Lattice::build({2.0, 1.0 / 16.0, 0.26});
  const auto fam = PotentialFamily::synthetic(4.0, 0.0, 1.0);
  const Constraints cons = Constraints::for_load(lat, 0.3);
  MinimizeOptions opts;
  opts.record_trace = false;
  const Deformation y0 = elastic_guess(lat, cons.a_eps);
  for (auto _ : state) benchmark::DoNotOptimize(minimize(lat, fam, cons, y0, opts).objective);
}
BENCHMARK(BM_MinimizeElastic)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "adhesion/particles.hpp"

using namespace adhesion;

namespace {

PotentialSpec bench_potential() {
  PotentialSpec spec;
  spec.d = 1;
  spec.modes.push_back({BasisIndex{1}, 1.0, 0.6});
  spec.modes.push_back({BasisIndex{2}, -0.3, 0.2});
  spec.eta_scale = 0.1;
  return spec;
}

ParticleEnsemble bench_ensemble(int n) {
  SimRng rng(1, 0, n);
  return init_uniform(1, n, SpinLaw::from_p_plus(0.5), rng);
}

}  // namespace

static void ForcesDirect(benchmark::State& state) {
  const PotentialSpec spec = bench_potential();
  const ParticleEnsemble ens = bench_ensemble(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto f = pairwise_forces(ens, spec, ForcePath::kDirect);
    benchmark::DoNotOptimize(f);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ForcesDirect)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

static void ForcesSpectral(benchmark::State& state) {
  const PotentialSpec spec = bench_potential();
  const ParticleEnsemble ens = bench_ensemble(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto f = pairwise_forces(ens, spec, ForcePath::kSpectral);
    benchmark::DoNotOptimize(f);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ForcesSpectral)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void ParticleStep(benchmark::State& state) {
  const PotentialSpec spec = bench_potential();
  const DiffusionSpec diff{1.0, 0.8};
  const FlipRates rates{1.0, 1.0};
  const int n = static_cast<int>(state.range(0));
  SimRng rng(2, 0, n);
  ParticleEnsemble ens = init_uniform(1, n, SpinLaw::from_p_plus(0.5), rng);
  for (auto _ : state) {
    ens = step(ens, spec, diff, rates, 5e-4, rng, ForcePath::kSpectral);
    benchmark::DoNotOptimize(ens.pos.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(ParticleStep)->Arg(512)->Arg(2048);

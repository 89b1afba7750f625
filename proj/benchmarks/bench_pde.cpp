#include <benchmark/benchmark.h>

#include "adhesion/meanfield.hpp"

using namespace adhesion;

static void PdeStep1d(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const FlipRates rates{1.0, 1.0};
  const DiffusionSpec diff{1.0, 0.8};
  PotentialSpec spec;
  spec.d = 1;
  spec.modes.push_back({BasisIndex{1}, 1.0, 1.0});
  spec.eta_scale = 0.5;
  PdeStepper stepper(1, K, spec, diff, rates);
  SpectralField f = SpectralField::homogeneous(1, K, rates);
  f.u[1] = 0.05;
  for (auto _ : state) {
    f = stepper.step(f, 1e-3);
    benchmark::DoNotOptimize(f.u.data());
  }
}
BENCHMARK(PdeStep1d)->Arg(16)->Arg(32)->Arg(64);

static void PdeStep2d(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const FlipRates rates{1.0, 1.0};
  const DiffusionSpec diff{1.0, 0.8};
  PotentialSpec spec;
  spec.d = 2;
  spec.modes.push_back({BasisIndex{1, 0}, 1.0, 1.0});
  spec.eta_scale = 0.5;
  PdeStepper stepper(2, K, spec, diff, rates);
  SpectralField f = SpectralField::homogeneous(2, K, rates);
  f.u[static_cast<std::size_t>(K) + 1] = 0.05;
  for (auto _ : state) {
    f = stepper.step(f, 1e-3);
    benchmark::DoNotOptimize(f.u.data());
  }
}
BENCHMARK(PdeStep2d)->Arg(8)->Arg(16);

#include <benchmark/benchmark.h>

#include "adhesion/rng.hpp"

using namespace adhesion;

static void Uniforms(benchmark::State& state) {
  CounterRng rng(1, 0, 0, RngChannel::kBrownian);
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(Uniforms);

static void Normals(benchmark::State& state) {
  CounterRng rng(1, 0, 0, RngChannel::kBrownian);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(Normals);

static void Exponentials(benchmark::State& state) {
  CounterRng rng(1, 0, 0, RngChannel::kSpin);
  for (auto _ : state) benchmark::DoNotOptimize(rng.exponential(1.5));
}
BENCHMARK(Exponentials);

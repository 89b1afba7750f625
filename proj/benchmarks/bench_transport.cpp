#include <benchmark/benchmark.h>

#include "adhesion/transport.hpp"

using namespace adhesion;

namespace {

std::vector<double> cloud(int n, std::uint64_t seed) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  std::uint64_t s = seed;
  for (auto& x : xs) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    x = static_cast<double>(s >> 11) * 0x1.0p-53;
  }
  return xs;
}

}  // namespace

static void AssignmentW1(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = cloud(n, 1);
  const auto b = cloud(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(w1_assignment_points(1, a, b));
  }
  state.SetComplexityN(n);
}
BENCHMARK(AssignmentW1)->RangeMultiplier(2)->Range(64, 1024)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void CircleW1(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = cloud(n, 3);
  const auto b = cloud(n, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(w1_circle_uniform(a, b));
  }
  state.SetComplexityN(n);
}
BENCHMARK(CircleW1)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

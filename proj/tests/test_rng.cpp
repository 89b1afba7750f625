#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "adhesion/rng.hpp"

using namespace adhesion;

TEST_CASE("philox4x32-10 reference vectors") {
  // cross-checked against an independent implementation of the published
  // round function
  auto b = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(b.x[0] == 0x6627e8d5u);
  CHECK(b.x[1] == 0xe169c58du);
  CHECK(b.x[2] == 0xbc57ac4cu);
  CHECK(b.x[3] == 0x9b00dbd8u);

  b = philox4x32({0x243F6A88u, 0x85A308D3u, 0x13198A2Eu, 0x03707344u},
                 {0xA4093822u, 0x299F31D0u});
  CHECK(b.x[0] == 0xd16cfe09u);
  CHECK(b.x[1] == 0x94fdccebu);
  CHECK(b.x[2] == 0x5001e420u);
  CHECK(b.x[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and position independent") {
  CounterRng a(42, 3, 17, RngChannel::kBrownian);
  CounterRng b(42, 3, 17, RngChannel::kBrownian);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

  // interleaving draws from another stream does not perturb a stream
  CounterRng c(42, 3, 17, RngChannel::kBrownian);
  CounterRng other(42, 3, 18, RngChannel::kBrownian);
  for (int i = 0; i < 50; ++i) {
    (void)other.uniform();
    (void)other.normal();
  }
  CounterRng a2(42, 3, 17, RngChannel::kBrownian);
  for (int i = 0; i < 100; ++i) CHECK(a2.uniform() == c.uniform());
}

TEST_CASE("distinct keys decorrelate") {
  std::set<std::uint64_t> firsts;
  for (std::uint32_t particle = 0; particle < 64; ++particle)
    for (int ch = 0; ch < 5; ++ch) {
      CounterRng r(7, 0, particle, static_cast<RngChannel>(ch));
      firsts.insert(static_cast<std::uint64_t>(r.uniform() * 9.007e15));
    }
  CHECK(firsts.size() == 64 * 5);
}

TEST_CASE("uniforms live strictly inside (0,1) with the right moments") {
  CounterRng r(123, 0, 0, RngChannel::kInit);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(var - 1.0 / 12.0) < 5e-3);
}

TEST_CASE("normals have unit variance and vanishing skew") {
  CounterRng r(99, 1, 0, RngChannel::kBrownian);
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
  }
  CHECK(std::abs(s1 / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s3 / n) < 0.05);
}

TEST_CASE("exponential has the configured rate and zero rate is absorbing") {
  CounterRng r(5, 0, 0, RngChannel::kSpin);
  const double rate = 2.5;
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += r.exponential(rate);
  CHECK(std::abs(sum / n - 1.0 / rate) < 0.01);
  CHECK(std::isinf(r.exponential(0.0)));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adhesion/transport.hpp"
#include "test_util.hpp"

using namespace adhesion;

namespace {

EmpiricalMeasure random_measure(int d, int n, testutil::Lcg& gen, bool random_spins = true) {
  EmpiricalMeasure m;
  m.d = d;
  m.pos.resize(static_cast<std::size_t>(n) * d);
  m.spin.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) m.pos[static_cast<std::size_t>(i) * d + c] = gen.uniform();
    m.spin[static_cast<std::size_t>(i)] = random_spins && gen.uniform() < 0.5 ? -1 : +1;
  }
  return m;
}

std::vector<std::vector<double>> product_cost(const EmpiricalMeasure& a,
                                              const EmpiricalMeasure& b, bool with_spin) {
  const int n = a.size();
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = torus_distance(a.x(i), b.x(j));
      if (with_spin && a.spin[static_cast<std::size_t>(i)] != b.spin[static_cast<std::size_t>(j)])
        v += 2.0;
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
    }
  return c;
}

}  // namespace

TEST_CASE("circle distance: point masses, identity, crossing pairs") {
  CHECK(w1_circle_uniform({0.1}, {0.8}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w1_circle_uniform({0.3, 0.7, 0.1}, {0.3, 0.7, 0.1}) == doctest::Approx(0.0));
  // uniform on {0, 1/2} vs uniform on {1/4, 3/4}: each atom travels 1/4
  CHECK(w1_circle_uniform({0.0, 0.5}, {0.25, 0.75}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("circle distance with general weights matches small LPs") {
  // mass 0.7 at 0.1 and 0.3 at 0.6, against a point mass at 0.2
  CircleMeasure mu{{0.1, 0.6}, {0.7, 0.3}};
  CircleMeasure nu{{0.2}, {1.0}};
  // optimal plan: 0.7 x |0.1-0.2| + 0.3 x |0.6-0.2| = 0.07 + 0.12
  CHECK(w1_circle(mu, nu) == doctest::Approx(0.19).epsilon(1e-12));
  CHECK_THROWS_AS(w1_circle(CircleMeasure{{0.1}, {0.5}}, nu), std::invalid_argument);
}

TEST_CASE("assignment solver: identity, hand case, oracle crosschecks") {
  testutil::Lcg gen(101);
  const EmpiricalMeasure same = random_measure(2, 12, gen);
  CHECK(w1_assignment(same, same) == doctest::Approx(0.0).epsilon(1e-12));

  EmpiricalMeasure a, b;
  a.d = b.d = 2;
  a.pos = {0.0, 0.0, 0.5, 0.0};
  a.spin = {1, 1};
  b.pos = {0.1, 0.0, 0.6, 0.0};
  b.spin = {1, 1};
  CHECK(w1_assignment(a, b) == doctest::Approx(0.1).epsilon(1e-12));

  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + gen.pick(5);
    const int d = 1 + gen.pick(2);
    const EmpiricalMeasure mu = random_measure(d, n, gen);
    const EmpiricalMeasure nu = random_measure(d, n, gen);
    const double exact = testutil::brute_force_assignment(n, product_cost(mu, nu, false));
    CHECK(w1_assignment(mu, nu) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("circle and assignment agree on uniform atoms in d=1") {
  testutil::Lcg gen(202);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + gen.pick(63);
    const EmpiricalMeasure mu = random_measure(1, n, gen);
    const EmpiricalMeasure nu = random_measure(1, n, gen);
    const double circle = w1_circle_uniform(mu.pos, nu.pos);
    const double assign = w1_assignment(mu, nu);
    CHECK(std::abs(circle - assign) < 1e-10);
  }
}

TEST_CASE("product-space distance: forced spin cost and permutation oracle") {
  testutil::Lcg gen(303);
  EmpiricalMeasure a = random_measure(1, 5, gen, false);
  EmpiricalMeasure b = a;
  for (auto& s : b.spin) s = -s;
  CHECK(w1_product(a, b) == doctest::Approx(2.0).epsilon(1e-12));

  // spin-matched inputs reduce to the positional assignment
  const EmpiricalMeasure c = random_measure(2, 6, gen, false);
  const EmpiricalMeasure e = random_measure(2, 6, gen, false);
  CHECK(w1_product(c, e) == doctest::Approx(w1_assignment(c, e)).epsilon(1e-12));

  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + gen.pick(4);
    const EmpiricalMeasure mu = random_measure(1, n, gen);
    const EmpiricalMeasure nu = random_measure(1, n, gen);
    const double exact = testutil::brute_force_assignment(n, product_cost(mu, nu, true));
    CHECK(w1_product(mu, nu) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("marginal distances project the product cost") {
  testutil::Lcg gen(404);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + gen.pick(4);
    const EmpiricalMeasure mu = random_measure(1, n, gen);
    const EmpiricalMeasure nu = random_measure(1, n, gen);
    const auto [x, y] = marginal_w1(mu, nu);
    const double full = w1_product(mu, nu);
    CHECK(x <= full + 1e-10);
    CHECK(y <= full + 1e-10);
  }

  EmpiricalMeasure a, b;
  a.d = b.d = 1;
  a.pos.assign(10, 0.5);
  b.pos.assign(10, 0.5);
  a.spin = {1, 1, 1, 1, 1, 1, 1, -1, -1, -1};       // p_plus = 0.7
  b.spin = {1, 1, 1, 1, -1, -1, -1, -1, -1, -1};    // p_plus = 0.4
  CHECK(marginal_w1(a, b).second == doctest::Approx(0.6).epsilon(1e-12));
  for (auto& s : b.spin) s = 1;
  for (auto& s : a.spin) s = 1;
  CHECK(marginal_w1(a, b).second == 0.0);
}

TEST_CASE("triangle inequality and translation invariance") {
  testutil::Lcg gen(505);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + gen.pick(3);
    const EmpiricalMeasure a = random_measure(1, n, gen);
    const EmpiricalMeasure b = random_measure(1, n, gen);
    const EmpiricalMeasure c = random_measure(1, n, gen);
    CHECK(w1_product(a, c) <= w1_product(a, b) + w1_product(b, c) + 1e-10);

    const double shift = gen.uniform();
    EmpiricalMeasure a2 = a, b2 = b;
    for (auto& x : a2.pos) x = wrap_unit(x + shift);
    for (auto& x : b2.pos) x = wrap_unit(x + shift);
    CHECK(std::abs(w1_product(a2, b2) - w1_product(a, b)) < 1e-12);
  }
}

TEST_CASE("gridded 1-d densities against shifted references") {
  const int m = 128;
  std::vector<double> flat(m, 1.0), other(m, 1.0);
  CHECK(w1_grid_1d(flat, other) == doctest::Approx(0.0));
  // density 1 + cos vs its half-period shift: W1 equals that of atoms
  std::vector<double> a(m), b(m);
  for (int g = 0; g < m; ++g) {
    a[static_cast<std::size_t>(g)] = 1.0 + std::cos(2.0 * M_PI * g / m);
    b[static_cast<std::size_t>(g)] = 1.0 - std::cos(2.0 * M_PI * g / m);
  }
  // shift by 1/2 maps a onto b, and no transport does better than 1/4
  const double v = w1_grid_1d(a, b);
  CHECK(v > 0.2);
  CHECK(v <= 0.25 + 1e-9);
}

TEST_CASE("entropic fallback is certified by its duality gap") {
  // two 4x4 uniform grids, one shifted by 0.1 in the first coordinate
  const int g = 4;
  std::vector<double> pos_a, pos_b, w;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      pos_a.push_back(i / static_cast<double>(g));
      pos_a.push_back(j / static_cast<double>(g));
      pos_b.push_back(wrap_unit(i / static_cast<double>(g) + 0.1));
      pos_b.push_back(j / static_cast<double>(g));
      w.push_back(1.0 / (g * g));
    }
  const double exact_shift = w1_assignment_points(2, pos_a, pos_b);
  const SinkhornResult res = sinkhorn_w1_torus(2, pos_a, w, pos_b, w);
  CHECK(res.duality_gap < 0.02);
  CHECK(std::abs(res.cost - exact_shift) < 0.02);

  // the certificate brackets the exact assignment value: the rounded plan
  // is feasible (upper bound) and the c-transformed dual is feasible
  // (lower bound)
  testutil::Lcg gen(606);
  for (int trial = 0; trial < 10; ++trial) {
    EmpiricalMeasure mu = random_measure(2, 12, gen);
    EmpiricalMeasure nu = random_measure(2, 12, gen);
    std::vector<double> uw(12, 1.0 / 12.0);
    const SinkhornResult res2 = sinkhorn_w1_torus(2, mu.pos, uw, nu.pos, uw);
    const double exact = w1_assignment(mu, nu);
    CHECK(exact <= res2.cost + 1e-12);
    CHECK(exact >= res2.cost - res2.duality_gap - 1e-12);
    CHECK(res2.duality_gap < 0.01);
  }
}

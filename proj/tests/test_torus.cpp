#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adhesion/torus.hpp"
#include "test_util.hpp"

using namespace adhesion;

TEST_CASE("torus distance handles wrap-around") {
  CHECK(torus_distance(Vec{0.3}, Vec{0.9}) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(torus_distance(Vec{0.0, 0.0}, Vec{0.5, 0.5}) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
  CHECK(torus_distance(Vec{0.42}, Vec{0.42}) == 0.0);
  CHECK_THROWS_AS(torus_distance(Vec{0.1}, Vec{0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("displacement is the minimal representative with half-open ties") {
  CHECK(torus_displacement(Vec{0.1}, Vec{0.9})[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(torus_displacement(Vec{0.9}, Vec{0.1})[0] == doctest::Approx(-0.2).epsilon(1e-14));
  const Vec z = torus_displacement(Vec{0.25, 0.5}, Vec{0.25, 0.5});
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  // exact half distances resolve to -1/2
  CHECK(torus_displacement(Vec{0.75}, Vec{0.25})[0] == -0.5);
  CHECK(torus_displacement(Vec{0.25}, Vec{0.75})[0] == -0.5);
}

TEST_CASE("metric axioms on random triples") {
  testutil::Lcg gen(2024);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 500; ++trial) {
      Vec x(d), y(d), z(d);
      for (int c = 0; c < d; ++c) {
        x[c] = gen.uniform();
        y[c] = gen.uniform();
        z[c] = gen.uniform();
      }
      const double dxy = torus_distance(x, y);
      const double dyx = torus_distance(y, x);
      CHECK(dxy == doctest::Approx(dyx).epsilon(1e-14));
      CHECK(dxy <= torus_distance(x, z) + torus_distance(z, y) + 1e-12);
      CHECK(dxy <= torus_diameter(d) + 1e-12);
    }
  }
}

TEST_CASE("comparison function endpoints and domain") {
  CHECK(comparison_f(0.0, 1) == 0.0);
  CHECK(comparison_f(std::sqrt(1.0) / 2.0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(comparison_f(std::sqrt(2.0) / 2.0, 2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(comparison_f(0.25, 1) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(comparison_f(0.51, 1), std::domain_error);
  CHECK_THROWS_AS(comparison_f(-0.1, 1), std::domain_error);
}

TEST_CASE("comparison function is linearly equivalent to the distance") {
  testutil::Lcg gen(7);
  for (int d = 1; d <= 3; ++d) {
    const double diam = torus_diameter(d);
    const double sd = std::sqrt(static_cast<double>(d));
    for (int i = 0; i < 10000; ++i) {
      const double r = gen.uniform() * diam;
      const double f = comparison_f(r, d);
      CHECK(f >= 2.0 * r / sd - 1e-12);
      CHECK(f <= M_PI * r / sd + 1e-12);
    }
  }
}

TEST_CASE("sin subadditivity along torus distances") {
  testutil::Lcg gen(11);
  for (int d = 1; d <= 2; ++d) {
    Vec origin(d);
    for (int i = 0; i < 5000; ++i) {
      Vec x(d), y(d);
      for (int c = 0; c < d; ++c) {
        x[c] = gen.uniform();
        y[c] = gen.uniform();
      }
      const double lhs = comparison_f(torus_distance(x, y), d);
      const double rhs = comparison_f(torus_distance(x, origin), d) +
                         comparison_f(torus_distance(y, origin), d);
      CHECK(lhs <= rhs + 1e-12);
    }
    // dense 1-d grid
    if (d == 1) {
      for (int a = 0; a < 64; ++a)
        for (int b = 0; b < 64; ++b) {
          Vec x{a / 64.0}, y{b / 64.0};
          const double lhs = comparison_f(torus_distance(x, y), 1);
          const double rhs =
              comparison_f(torus_distance(x, origin), 1) + comparison_f(torus_distance(y, origin), 1);
          CHECK(lhs <= rhs + 1e-12);
        }
    }
  }
}

TEST_CASE("basis point values") {
  CHECK(basis_eval(BasisIndex{0}, Vec{0.37}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(basis_eval(BasisIndex{0, 0}, Vec{0.2, 0.9}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(basis_eval(BasisIndex{1}, Vec{0.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(basis_eval(BasisIndex{1}, Vec{0.25}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(BasisIndex{0}.normalization() == 1.0);
  CHECK(BasisIndex{3, 2}.normalization() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("basis orthonormality by quadrature up to |k|=8") {
  // trapezoid quadrature on M points is exact for bandwidth < M
  const int M = 64;
  for (int d = 1; d <= 2; ++d) {
    const auto modes = even_modes_up_to(d, 8);
    const int npts = d == 1 ? M : M * M;
    std::vector<std::vector<double>> vals(modes.size(), std::vector<double>(static_cast<std::size_t>(npts)));
    for (std::size_t m = 0; m < modes.size(); ++m) {
      for (int g = 0; g < npts; ++g) {
        Vec x(d);
        if (d == 1) {
          x[0] = static_cast<double>(g) / M;
        } else {
          x[0] = static_cast<double>(g / M) / M;
          x[1] = static_cast<double>(g % M) / M;
        }
        vals[m][static_cast<std::size_t>(g)] = basis_eval(modes[m], x);
      }
    }
    for (std::size_t a = 0; a < modes.size(); ++a)
      for (std::size_t b = a; b < modes.size(); ++b) {
        double ip = 0.0;
        for (int g = 0; g < npts; ++g)
          ip += vals[a][static_cast<std::size_t>(g)] * vals[b][static_cast<std::size_t>(g)];
        ip /= npts;
        const double expect = a == b ? 1.0 : 0.0;
        CHECK(std::abs(ip - expect) < 1e-10);
      }
  }
}

TEST_CASE("mode enumeration is lexicographic with the zero mode first") {
  const auto modes = even_modes_up_to(2, 2);
  CHECK(modes.size() == 9);
  CHECK(modes[0].is_zero());
  CHECK(modes[1][0] == 0);
  CHECK(modes[1][1] == 1);
  CHECK(modes[3][0] == 1);
  CHECK(modes[3][1] == 0);
}

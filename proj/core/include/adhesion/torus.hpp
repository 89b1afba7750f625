#pragma once

// Geometry of the flat torus [0,1)^d, the comparison function
// f(r) = sin(pi r / sqrt(d)), and the real cosine basis of the
// coordinate-wise even subspace.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace adhesion {

inline constexpr int kMaxDim = 4;

// Fixed-capacity d-vector; positions are unit-cell representatives in [0,1).
struct Vec {
  std::array<double, kMaxDim> c{};
  int d = 1;

  Vec() = default;
  explicit Vec(int dim) : d(dim) {}
  Vec(std::initializer_list<double> xs) : d(static_cast<int>(xs.size())) {
    int i = 0;
    for (double x : xs) c[i++] = x;
  }

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  std::span<const double> span() const { return {c.data(), static_cast<std::size_t>(d)}; }

  double norm() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += c[i] * c[i];
    return std::sqrt(s);
  }
};

inline Vec operator+(Vec a, const Vec& b) {
  for (int i = 0; i < a.d; ++i) a.c[i] += b.c[i];
  return a;
}
inline Vec operator-(Vec a, const Vec& b) {
  for (int i = 0; i < a.d; ++i) a.c[i] -= b.c[i];
  return a;
}
inline Vec operator*(double s, Vec a) {
  for (int i = 0; i < a.d; ++i) a.c[i] *= s;
  return a;
}
inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.d; ++i) s += a.c[i] * b.c[i];
  return s;
}

// Wrap one coordinate into [0,1).
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // guards x = -1e-17 rounding to 1.0
  return r;
}

// Minimal representative of a coordinate difference, half-open [-1/2, 1/2).
inline double wrap_half(double diff) {
  double r = std::remainder(diff, 1.0);
  if (r >= 0.5) r = -0.5;
  return r;
}

inline void check_same_dim(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("torus: dimension mismatch");
}

// Representative of x - w in [-1/2, 1/2)^d, computed coordinate-wise.
inline Vec torus_displacement(std::span<const double> x, std::span<const double> w) {
  check_same_dim(x.size(), w.size());
  Vec r(static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    r[static_cast<int>(i)] = wrap_half(x[i] - w[i]);
  return r;
}
inline Vec torus_displacement(const Vec& x, const Vec& w) {
  return torus_displacement(x.span(), w.span());
}

// min over integer shifts of |x - w + n|; at most sqrt(d)/2.
inline double torus_distance(std::span<const double> x, std::span<const double> w) {
  check_same_dim(x.size(), w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = wrap_half(x[i] - w[i]);
    s += r * r;
  }
  return std::sqrt(s);
}
inline double torus_distance(const Vec& x, const Vec& w) {
  return torus_distance(x.span(), w.span());
}

inline double torus_diameter(int d) { return 0.5 * std::sqrt(static_cast<double>(d)); }

// f(r) = sin(pi r / sqrt(d)) on [0, sqrt(d)/2]; strictly increasing there and
// linearly equivalent to r: (2/sqrt(d)) r <= f(r) <= (pi/sqrt(d)) r.
inline double comparison_f(double r, int d) {
  const double diam = torus_diameter(d);
  if (!(r >= -1e-15) || r > diam * (1.0 + 1e-12))
    throw std::domain_error("comparison_f: r outside [0, sqrt(d)/2]");
  return std::sin(M_PI * r / std::sqrt(static_cast<double>(d)));
}

// Index of a cosine mode k in N_0^d together with the orthonormalization
// N_k = prod (2 - delta_{k_i,0})^{1/2}.
struct BasisIndex {
  std::array<int, kMaxDim> k{};
  int d = 1;

  BasisIndex() = default;
  explicit BasisIndex(int dim) : d(dim) {}
  BasisIndex(std::initializer_list<int> ks) : d(static_cast<int>(ks.size())) {
    int i = 0;
    for (int x : ks) k[i++] = x;
  }

  int operator[](int i) const { return k[static_cast<std::size_t>(i)]; }
  int& operator[](int i) { return k[static_cast<std::size_t>(i)]; }

  bool is_zero() const {
    for (int i = 0; i < d; ++i)
      if (k[i] != 0) return false;
    return true;
  }
  int nonzero_count() const {
    int n = 0;
    for (int i = 0; i < d; ++i) n += (k[i] != 0);
    return n;
  }
  // N_k in [1, 2^{d/2}]
  double normalization() const {
    return std::pow(std::sqrt(2.0), nonzero_count());
  }
  // |2 pi k|^2
  double laplace_symbol() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += static_cast<double>(k[i]) * k[i];
    return 4.0 * M_PI * M_PI * s;
  }
  bool operator==(const BasisIndex& o) const {
    if (d != o.d) return false;
    for (int i = 0; i < d; ++i)
      if (k[i] != o.k[i]) return false;
    return true;
  }
};

// w_k(x) = N_k prod cos(2 pi k_i x_i); orthonormal in L^2(T^d).
inline double basis_eval(const BasisIndex& k, std::span<const double> x) {
  check_same_dim(static_cast<std::size_t>(k.d), x.size());
  double p = k.normalization();
  for (int i = 0; i < k.d; ++i)
    p *= std::cos(2.0 * M_PI * k.k[i] * x[i]);
  return p;
}
inline double basis_eval(const BasisIndex& k, const Vec& x) {
  return basis_eval(k, x.span());
}

// All modes k in N_0^d with |k|_inf <= kmax, zero mode first,
// lexicographic otherwise (deterministic scan order).
inline std::vector<BasisIndex> even_modes_up_to(int d, int kmax) {
  std::vector<BasisIndex> out;
  const int count = kmax + 1;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= count;
  out.reserve(static_cast<std::size_t>(total));
  for (int flat = 0; flat < total; ++flat) {
    BasisIndex b(d);
    int rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      b.k[static_cast<std::size_t>(i)] = rem % count;
      rem /= count;
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace adhesion

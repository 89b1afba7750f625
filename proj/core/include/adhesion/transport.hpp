#pragma once

// Wasserstein-1 distances between atomic and gridded measures on T^1, T^2,
// on {-1,+1}, and on the product space with cost |x-p| + 2 * 1{y != q}.

#include <utility>
#include <vector>

#include "adhesion/particles.hpp"
#include "adhesion/spin.hpp"

namespace adhesion {

// Weighted atoms on the circle.
struct CircleMeasure {
  std::vector<double> points;   // in [0,1)
  std::vector<double> weights;  // nonnegative, sum 1
};

// Exact W1 on T^1: min over a cyclic shift of the CDF difference; the
// minimizer is a weighted median, so the atomic case is closed-form.
double w1_circle(const CircleMeasure& mu, const CircleMeasure& nu);
double w1_circle_uniform(const std::vector<double>& mu_points,
                         const std::vector<double>& nu_points);

// Exact optimal assignment between two same-size uniform atom clouds under
// the torus metric (shortest augmenting paths, O(N^3) worst case; meant for
// N <= 4096).
double w1_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
double w1_assignment_points(int d, const std::vector<double>& mu_pos,
                            const std::vector<double>& nu_pos);

// Exact assignment under the product-space cost |x-p| + 2 * 1{y != q}.
double w1_product(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// (x-marginal W1, y-marginal W1); the x part uses the circle method in d=1
// and the assignment solver otherwise, the y part is the closed form on the
// two-point space.
std::pair<double, double> marginal_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Gridded densities (d=1): cell weights quantized to atoms at the grid
// nodes, tiny negative undershoots clamped, then the exact circle method.
double w1_grid_1d(const std::vector<double>& density_a, const std::vector<double>& density_b);

// Entropic fallback for gridded measures in d=2 with epsilon-scaling and a
// reported duality gap certificate.
struct SinkhornOptions {
  double epsilon_final_rel = 1e-3;  // times the torus diameter
  double epsilon_start_rel = 0.25;
  int max_iter_per_level = 2000;
  double marginal_tol = 1e-9;
};

struct SinkhornResult {
  double cost = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

SinkhornResult sinkhorn_w1_torus(int d, const std::vector<double>& mu_pos,
                                 const std::vector<double>& mu_w,
                                 const std::vector<double>& nu_pos,
                                 const std::vector<double>& nu_w,
                                 const SinkhornOptions& opts = {});

}  // namespace adhesion

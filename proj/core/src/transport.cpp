#include "adhesion/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace adhesion {

namespace {

void check_weights(const CircleMeasure& m) {
  if (m.points.size() != m.weights.size())
    throw std::invalid_argument("w1_circle: point/weight size mismatch");
  double s = 0.0;
  for (double w : m.weights) {
    if (w < -1e-12) throw std::invalid_argument("w1_circle: negative weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("w1_circle: masses must equal 1");
}

}  // namespace

// The CDF difference G = F_mu - F_nu is piecewise constant between support
// points; W1 = min_a int |G - a| dx and the optimal shift is the weighted
// median of the segment values (weights = segment lengths).
double w1_circle(const CircleMeasure& mu, const CircleMeasure& nu) {
  check_weights(mu);
  check_weights(nu);

  struct Event {
    double x;
    double dmu;
  };
  std::vector<Event> events;
  events.reserve(mu.points.size() + nu.points.size());
  for (std::size_t i = 0; i < mu.points.size(); ++i)
    events.push_back({wrap_unit(mu.points[i]), mu.weights[i]});
  for (std::size_t i = 0; i < nu.points.size(); ++i)
    events.push_back({wrap_unit(nu.points[i]), -nu.weights[i]});
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.x < b.x; });

  // segment values of G on [x_i, x_{i+1}) and lengths
  std::vector<double> values, lengths;
  values.reserve(events.size());
  lengths.reserve(events.size());
  double g = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    g += events[i].dmu;
    const double x_next = (i + 1 < events.size()) ? events[i + 1].x : events[0].x + 1.0;
    const double len = x_next - events[i].x;
    if (len > 0.0) {
      values.push_back(g);
      lengths.push_back(len);
    }
  }
  if (values.empty()) return 0.0;

  // weighted median of values
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  double acc = 0.0;
  double alpha = values[order.back()];
  for (std::size_t oi : order) {
    acc += lengths[oi];
    if (acc >= 0.5 - 1e-15) {
      alpha = values[oi];
      break;
    }
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    cost += lengths[i] * std::abs(values[i] - alpha);
  return cost;
}

double w1_circle_uniform(const std::vector<double>& mu_points,
                         const std::vector<double>& nu_points) {
  CircleMeasure mu{mu_points, std::vector<double>(mu_points.size(), 1.0 / mu_points.size())};
  CircleMeasure nu{nu_points, std::vector<double>(nu_points.size(), 1.0 / nu_points.size())};
  return w1_circle(mu, nu);
}

namespace {

// Shortest augmenting path assignment with dual potentials, O(n^3).
double assignment_cost(int n, const std::function<double(int, int)>& cost) {
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
  return total;
}

std::span<const double> point_at(int d, const std::vector<double>& pos, int i) {
  return {pos.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
}

}  // namespace

double w1_assignment_points(int d, const std::vector<double>& mu_pos,
                            const std::vector<double>& nu_pos) {
  if (mu_pos.size() != nu_pos.size())
    throw std::invalid_argument("w1_assignment: size mismatch");
  const int n = static_cast<int>(mu_pos.size()) / d;
  if (n == 0) throw std::invalid_argument("w1_assignment: empty input");

  // dense cost matrix; intended for N <= 4096
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      c[static_cast<std::size_t>(i) * n + j] =
          torus_distance(point_at(d, mu_pos, i), point_at(d, nu_pos, j));
  const double total = assignment_cost(
      n, [&](int i, int j) { return c[static_cast<std::size_t>(i) * n + j]; });
  return total / n;
}

double w1_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.d != nu.d) throw std::invalid_argument("w1_assignment: dimension mismatch");
  return w1_assignment_points(mu.d, mu.pos, nu.pos);
}

double w1_product(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.d != nu.d) throw std::invalid_argument("w1_product: dimension mismatch");
  if (mu.size() != nu.size()) throw std::invalid_argument("w1_product: size mismatch");
  const int n = mu.size();
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double cost = torus_distance(point_at(mu.d, mu.pos, i), point_at(nu.d, nu.pos, j));
      if (mu.spin[static_cast<std::size_t>(i)] != nu.spin[static_cast<std::size_t>(j)])
        cost += 2.0;
      c[static_cast<std::size_t>(i) * n + j] = cost;
    }
  const double total = assignment_cost(
      n, [&](int i, int j) { return c[static_cast<std::size_t>(i) * n + j]; });
  return total / n;
}

std::pair<double, double> marginal_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.d != nu.d) throw std::invalid_argument("marginal_w1: dimension mismatch");
  double x;
  if (mu.d == 1) {
    x = w1_circle_uniform(mu.pos, nu.pos);
  } else {
    x = w1_assignment_points(mu.d, mu.pos, nu.pos);
  }
  const double y = spin_w1(mu.type_marginal(), nu.type_marginal());
  return {x, y};
}

double w1_grid_1d(const std::vector<double>& density_a, const std::vector<double>& density_b) {
  if (density_a.size() != density_b.size())
    throw std::invalid_argument("w1_grid_1d: grid size mismatch");
  const std::size_t m = density_a.size();
  CircleMeasure mu, nu;
  mu.points.resize(m);
  nu.points.resize(m);
  mu.weights.resize(m);
  nu.weights.resize(m);
  double sa = 0.0, sb = 0.0;
  for (std::size_t g = 0; g < m; ++g) {
    mu.points[g] = nu.points[g] = static_cast<double>(g) / static_cast<double>(m);
    mu.weights[g] = std::max(0.0, density_a[g]);  // clamp solver undershoots
    nu.weights[g] = std::max(0.0, density_b[g]);
    sa += mu.weights[g];
    sb += nu.weights[g];
  }
  if (!(sa > 0.0) || !(sb > 0.0)) throw std::invalid_argument("w1_grid_1d: empty density");
  for (std::size_t g = 0; g < m; ++g) {
    mu.weights[g] /= sa;
    nu.weights[g] /= sb;
  }
  return w1_circle(mu, nu);
}

SinkhornResult sinkhorn_w1_torus(int d, const std::vector<double>& mu_pos,
                                 const std::vector<double>& mu_w,
                                 const std::vector<double>& nu_pos,
                                 const std::vector<double>& nu_w,
                                 const SinkhornOptions& opts) {
  const int n = static_cast<int>(mu_w.size());
  const int m = static_cast<int>(nu_w.size());
  if (n == 0 || m == 0) throw std::invalid_argument("sinkhorn: empty input");

  std::vector<double> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost[static_cast<std::size_t>(i) * m + j] =
          torus_distance(point_at(d, mu_pos, i), point_at(d, nu_pos, j));

  const double diam = torus_diameter(d);
  double eps = opts.epsilon_start_rel * diam;
  const double eps_final = opts.epsilon_final_rel * diam;

  std::vector<double> f(static_cast<std::size_t>(n), 0.0);
  std::vector<double> g(static_cast<std::size_t>(m), 0.0);
  std::vector<double> logmu(static_cast<std::size_t>(n)), lognu(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) logmu[static_cast<std::size_t>(i)] = std::log(std::max(mu_w[static_cast<std::size_t>(i)], 1e-300));
  for (int j = 0; j < m; ++j) lognu[static_cast<std::size_t>(j)] = std::log(std::max(nu_w[static_cast<std::size_t>(j)], 1e-300));

  int iters = 0;
  auto lse_row = [&](int i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
      mx = std::max(mx, (g[static_cast<std::size_t>(j)] -
                         cost[static_cast<std::size_t>(i) * m + j]) / eps +
                            lognu[static_cast<std::size_t>(j)]);
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      s += std::exp((g[static_cast<std::size_t>(j)] - cost[static_cast<std::size_t>(i) * m + j]) / eps +
                    lognu[static_cast<std::size_t>(j)] - mx);
    return eps * (mx + std::log(s));
  };
  auto lse_col = [&](int j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      mx = std::max(mx, (f[static_cast<std::size_t>(i)] -
                         cost[static_cast<std::size_t>(i) * m + j]) / eps +
                            logmu[static_cast<std::size_t>(i)]);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += std::exp((f[static_cast<std::size_t>(i)] - cost[static_cast<std::size_t>(i) * m + j]) / eps +
                    logmu[static_cast<std::size_t>(i)] - mx);
    return eps * (mx + std::log(s));
  };

  for (;;) {
    const bool final_level = eps <= eps_final * (1.0 + 1e-12);
    // intermediate levels only warm-start the next one; converge loosely
    const double level_tol = final_level ? opts.marginal_tol
                                         : std::max(1e-4, opts.marginal_tol);
    for (int it = 0; it < opts.max_iter_per_level; ++it) {
      for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = -lse_row(i);
      for (int j = 0; j < m; ++j) g[static_cast<std::size_t>(j)] = -lse_col(j);
      ++iters;
      if (it % 8 != 7 && it + 1 < opts.max_iter_per_level) continue;
      // row-marginal violation after the column update
      double viol = 0.0;
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m; ++j)
          s += std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                         cost[static_cast<std::size_t>(i) * m + j]) / eps +
                        logmu[static_cast<std::size_t>(i)] + lognu[static_cast<std::size_t>(j)]);
        viol = std::max(viol, std::abs(s - mu_w[static_cast<std::size_t>(i)]));
      }
      if (viol < level_tol) break;
    }
    if (final_level) break;
    eps = std::max(eps_final, eps * 0.25);
  }

  // Certificate: round the entropic plan to exact feasibility (row scaling,
  // column scaling, rank-one completion of the deficits) for a true upper
  // bound, and c-transform the potential for a feasible dual lower bound.
  std::vector<double> plan(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      plan[static_cast<std::size_t>(i) * m + j] =
          std::exp((f[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(j)] -
                    cost[static_cast<std::size_t>(i) * m + j]) / eps +
                   logmu[static_cast<std::size_t>(i)] + lognu[static_cast<std::size_t>(j)]);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += plan[static_cast<std::size_t>(i) * m + j];
    const double r = std::min(1.0, mu_w[static_cast<std::size_t>(i)] / std::max(row, 1e-300));
    for (int j = 0; j < m; ++j) plan[static_cast<std::size_t>(i) * m + j] *= r;
  }
  for (int j = 0; j < m; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += plan[static_cast<std::size_t>(i) * m + j];
    const double c = std::min(1.0, nu_w[static_cast<std::size_t>(j)] / std::max(col, 1e-300));
    for (int i = 0; i < n; ++i) plan[static_cast<std::size_t>(i) * m + j] *= c;
  }
  std::vector<double> def_r(static_cast<std::size_t>(n)), def_c(static_cast<std::size_t>(m));
  double deficit = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += plan[static_cast<std::size_t>(i) * m + j];
    def_r[static_cast<std::size_t>(i)] = std::max(0.0, mu_w[static_cast<std::size_t>(i)] - row);
    deficit += def_r[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < m; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += plan[static_cast<std::size_t>(i) * m + j];
    def_c[static_cast<std::size_t>(j)] = std::max(0.0, nu_w[static_cast<std::size_t>(j)] - col);
  }
  double primal = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double pij = plan[static_cast<std::size_t>(i) * m + j];
      if (deficit > 1e-300)
        pij += def_r[static_cast<std::size_t>(i)] * def_c[static_cast<std::size_t>(j)] / deficit;
      primal += pij * cost[static_cast<std::size_t>(i) * m + j];
    }

  double dual = 0.0;
  for (int i = 0; i < n; ++i) dual += f[static_cast<std::size_t>(i)] * mu_w[static_cast<std::size_t>(i)];
  for (int j = 0; j < m; ++j) {
    double gt = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      gt = std::min(gt, cost[static_cast<std::size_t>(i) * m + j] - f[static_cast<std::size_t>(i)]);
    dual += gt * nu_w[static_cast<std::size_t>(j)];
  }

  SinkhornResult res;
  res.cost = primal;
  res.duality_gap = std::max(0.0, primal - dual);
  res.iterations = iters;
  return res;
}

}  // namespace adhesion

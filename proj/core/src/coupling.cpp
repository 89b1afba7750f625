#include "adhesion/coupling.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "adhesion/csv.hpp"

namespace adhesion {

double PartitionOfUnity::h(double r) const {
  if (r <= 0.5 * delta) return 0.0;
  if (r >= delta) return 1.0;
  const double t = (r - 0.5 * delta) / (0.5 * delta);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));  // quintic smoothstep
}

double PartitionOfUnity::phi_r(double r) const { return std::sin(0.5 * M_PI * h(r)); }
double PartitionOfUnity::phi_s(double r) const { return std::cos(0.5 * M_PI * h(r)); }

Vec reflect(const Vec& v, const Vec& e) {
  if (std::abs(e.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("reflect: direction must be a unit vector");
  const double p = dot(e, v);
  Vec out = v;
  for (int i = 0; i < v.d; ++i) out[i] -= 2.0 * p * e[i];
  return out;
}

double default_coupling_a(int n) {
  const double nn = static_cast<double>(n);
  return 1.0 / (nn * nn * nn * nn * nn);
}

double default_coupling_delta(int n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

Vec CouplingState::pair_displacement(int i) const {
  return torus_displacement(bar.x(i), sys.x(i));
}

double CouplingState::min_pair_distance() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i)
    m = std::min(m, torus_distance(bar.x(i), sys.x(i)));
  return m;
}

double CouplingState::spin_disagreement_fraction() const {
  long long k = 0;
  for (int i = 0; i < size(); ++i)
    k += sys.spin[static_cast<std::size_t>(i)] != bar.spin[static_cast<std::size_t>(i)];
  return static_cast<double>(k) / static_cast<double>(size());
}

CouplingState make_coupling(const ParticleEnsemble& sys, const SpinLaw& law_sys,
                            const SpinLaw& law_bar, double delta, SimRng& rng) {
  CouplingState st;
  st.sys = sys;
  st.bar = sys;
  st.pou.delta = delta;
  st.pairs.resize(static_cast<std::size_t>(sys.size()));
  for (int i = 0; i < sys.size(); ++i) {
    const int y = sys.spin[static_cast<std::size_t>(i)];
    const int ybar =
        couple_spins(y, law_sys, law_bar, rng.stream(i, RngChannel::kCouplingUniform));
    st.bar.spin[static_cast<std::size_t>(i)] = ybar;
    st.pairs[static_cast<std::size_t>(i)] = SpinPairState{y, ybar, y == ybar};
  }
  return st;
}

CouplingState make_matched_coupling(const ParticleEnsemble& sys, double delta) {
  CouplingState st;
  st.sys = sys;
  st.bar = sys;
  st.pou.delta = delta;
  st.pairs.resize(static_cast<std::size_t>(sys.size()));
  for (int i = 0; i < sys.size(); ++i) {
    const int y = sys.spin[static_cast<std::size_t>(i)];
    st.pairs[static_cast<std::size_t>(i)] = SpinPairState{y, y, true};
  }
  return st;
}

CouplingState coupled_step(const CouplingState& state, const PotentialSpec& spec,
                           const DiffusionSpec& diff, const FlipRates& rates,
                           const FieldTrajectory& field, double dt, SimRng& rng,
                           ForcePath path) {
  if (!(dt > 0.0)) throw std::invalid_argument("coupled_step: dt must be positive");
  if (state.sys.d != state.bar.d || state.sys.size() != state.bar.size())
    throw std::invalid_argument("coupled_step: ensembles out of shape");
  const double t = state.time();
  const SpectralField& rho = field.at_time(t, 1e-9 * (1.0 + std::abs(t)));
  if (field.t_end() + 1e-12 < t + dt)
    throw std::invalid_argument("coupled_step: field trajectory does not cover the step");

  const int n = state.size();
  const int d = state.sys.d;
  const std::vector<double> sys_drift = pairwise_forces(state.sys, spec, path);

  CouplingState next = state;
  next.sys.t = t + dt;
  next.bar.t = t + dt;

  std::vector<SpinSegment> seg_y, seg_b;
  for (int i = 0; i < n; ++i) {
    // geometry frozen at step start
    const Vec D = state.pair_displacement(i);
    const double dist = D.norm();
    double phi_r = 0.0, phi_s = 1.0;
    Vec e(d);
    if (dist >= 1e-14) {
      phi_r = state.pou.phi_r(dist);
      phi_s = state.pou.phi_s(dist);
      e = (1.0 / dist) * D;
    }

    // optimal spin-pair advance (exact clocks, glue at first flip)
    seg_y.clear();
    seg_b.clear();
    SpinPairState pair = state.pairs[static_cast<std::size_t>(i)];
    advance_spin_pair(pair, rates, t, t + dt, rng.stream(i, RngChannel::kSpin),
                      rng.stream(i, RngChannel::kCouplingUniform), seg_y, seg_b);
    next.pairs[static_cast<std::size_t>(i)] = pair;
    next.sys.spin[static_cast<std::size_t>(i)] = pair.y;
    next.bar.spin[static_cast<std::size_t>(i)] = pair.ybar;

    Vec bar_x(d);
    for (int c = 0; c < d; ++c) bar_x[c] = state.bar.pos[static_cast<std::size_t>(i) * d + c];
    const Vec bar_drift = mean_field_drift(spec, bar_x, rho);

    // shared Gaussian channels on the common refinement of the flip times
    CounterRng& rb = rng.stream(i, RngChannel::kBrownian);
    CounterRng& rbt = rng.stream(i, RngChannel::kBrownianTilde);
    Vec dx(d), dxbar(d);
    std::size_t iy = 0, ib = 0;
    double seg_t = t;
    while (seg_t < t + dt - 1e-15) {
      const double end_y = seg_y[iy].t_end;
      const double end_b = seg_b[ib].t_end;
      const double seg_end = std::min(end_y, end_b);
      const double len = seg_end - seg_t;
      if (len > 0.0) {
        const double sy = diff.sigma(seg_y[iy].spin);
        const double sb = diff.sigma(seg_b[ib].spin);
        const double root = std::sqrt(len);
        Vec xi(d), xit(d);
        for (int c = 0; c < d; ++c) {
          xi[c] = rb.normal();
          xit[c] = rbt.normal();
        }
        const Vec xi_refl = phi_r > 0.0 ? reflect(xi, e) : xi;
        for (int c = 0; c < d; ++c) {
          dx[c] += root * sy * (phi_r * xi_refl[c] + phi_s * xit[c]);
          dxbar[c] += root * sb * (phi_r * xi[c] + phi_s * xit[c]);
        }
      }
      seg_t = seg_end;
      if (end_y <= seg_end + 1e-18 && iy + 1 < seg_y.size()) ++iy;
      if (end_b <= seg_end + 1e-18 && ib + 1 < seg_b.size()) ++ib;
    }

    for (int c = 0; c < d; ++c) {
      const std::size_t idx = static_cast<std::size_t>(i) * d + c;
      next.sys.pos[idx] = wrap_unit(state.sys.pos[idx] + sys_drift[idx] * dt + dx[c]);
      next.bar.pos[idx] = wrap_unit(state.bar.pos[idx] + bar_drift[c] * dt + dxbar[c]);
    }
  }
  return next;
}

double lyapunov(const CouplingState& state, const LyapunovParams& params) {
  const int d = state.sys.d;
  const double diam = torus_diameter(d);
  double s = 0.0;
  for (int i = 0; i < state.size(); ++i) {
    const double dist = torus_distance(state.bar.x(i), state.sys.x(i));
    const double r = std::min(std::sqrt(dist * dist + params.a), diam);
    s += comparison_f(r, d);
  }
  return s / state.size();
}

std::pair<double, double> w1_upper_bound(const CouplingState& state) {
  double x = 0.0;
  long long dis = 0;
  for (int i = 0; i < state.size(); ++i) {
    x += torus_distance(state.bar.x(i), state.sys.x(i));
    dis += state.sys.spin[static_cast<std::size_t>(i)] != state.bar.spin[static_cast<std::size_t>(i)];
  }
  const double n = static_cast<double>(state.size());
  return {x / n, 2.0 * static_cast<double>(dis) / n};
}

CouplingDiagnostics coupling_diagnostics(const CouplingState& state,
                                         const LyapunovParams& params) {
  CouplingDiagnostics d;
  d.t = state.time();
  d.lyapunov_value = lyapunov(state, params);
  const auto [x, y] = w1_upper_bound(state);
  d.x_bound = x;
  d.y_bound = y;
  d.min_pair_dist = state.min_pair_distance();
  d.spin_disagreement = state.spin_disagreement_fraction();
  return d;
}

void write_diagnostics_csv(const std::vector<CouplingDiagnostics>& rows, std::ostream& out) {
  out << "t,lyapunov,x_bound,y_bound,min_pair_dist,spin_disagreement_fraction\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.lyapunov_value) << ','
        << format_double(r.x_bound) << ',' << format_double(r.y_bound) << ','
        << format_double(r.min_pair_dist) << ',' << format_double(r.spin_disagreement)
        << "\n";
  }
}

}  // namespace adhesion

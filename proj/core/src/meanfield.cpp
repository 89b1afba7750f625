#include "adhesion/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adhesion/csv.hpp"

namespace adhesion {

std::vector<BasisIndex> field_modes(int d, int K) { return even_modes_up_to(d, K); }

int mode_index(int d, int K, const BasisIndex& k) {
  if (k.d != d) return -1;
  int flat = 0;
  for (int i = 0; i < d; ++i) {
    if (k[i] < 0 || k[i] > K) return -1;
    flat = flat * (K + 1) + k[i];
  }
  return flat;
}

SpectralField SpectralField::zero(int d, int K) {
  SpectralField f;
  f.d = d;
  f.K = K;
  const std::size_t n = static_cast<std::size_t>(std::pow(K + 1, d) + 0.5);
  f.u.assign(n, 0.0);
  f.v.assign(n, 0.0);
  return f;
}

SpectralField SpectralField::homogeneous(int d, int K, const FlipRates& rates) {
  SpectralField f = zero(d, K);
  const SpinLaw st = SpinLaw::stationary(rates);
  f.u[0] = st.p_plus;
  f.v[0] = st.p_minus;
  return f;
}

void SpectralField::validate() const {
  if (d < 1 || d > 2) throw std::invalid_argument("field: d must be 1 or 2");
  const std::size_t n = static_cast<std::size_t>(std::pow(K + 1, d) + 0.5);
  if (u.size() != n || v.size() != n)
    throw std::invalid_argument("field: coefficient count does not match K");
  for (double c : u)
    if (!std::isfinite(c)) throw std::invalid_argument("field: non-finite coefficient");
  for (double c : v)
    if (!std::isfinite(c)) throw std::invalid_argument("field: non-finite coefficient");
}

double eval_u(const SpectralField& f, const Vec& x) {
  const auto modes = field_modes(f.d, f.K);
  double s = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) s += f.u[i] * basis_eval(modes[i], x);
  return s;
}

double eval_v(const SpectralField& f, const Vec& x) {
  const auto modes = field_modes(f.d, f.K);
  double s = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) s += f.v[i] * basis_eval(modes[i], x);
  return s;
}

namespace {

struct Mat2 {
  double a = 0, b = 0, c = 0, d = 0;

  void apply(double x, double y, double& ox, double& oy) const {
    ox = a * x + b * y;
    oy = c * x + d * y;
  }
};

double sinhc(double x) {
  if (std::abs(x) < 1e-5) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

double phi1_scalar(double z) {
  if (std::abs(z) < 1e-8) return 1.0 + 0.5 * z;
  return std::expm1(z) / z;
}

double phi1_prime(double z) {
  if (std::abs(z) < 1e-4) return 0.5 + z / 3.0 + z * z / 8.0;
  return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
}

// f(A) for a real 2x2 matrix with real spectrum: A = m I + R, R^2 = D^2 I.
Mat2 mat_exp(const Mat2& A) {
  const double m = 0.5 * (A.a + A.d);
  const double disc = 0.25 * (A.a - A.d) * (A.a - A.d) + A.b * A.c;
  const double D = disc > 0.0 ? std::sqrt(disc) : 0.0;
  const double em = std::exp(m);
  const double alpha = em * std::cosh(D);
  const double beta = em * sinhc(D);
  return Mat2{alpha + beta * (A.a - m), beta * A.b, beta * A.c, alpha + beta * (A.d - m)};
}

Mat2 mat_phi1(const Mat2& A) {
  const double m = 0.5 * (A.a + A.d);
  const double disc = 0.25 * (A.a - A.d) * (A.a - A.d) + A.b * A.c;
  const double D = disc > 0.0 ? std::sqrt(disc) : 0.0;
  double alpha, beta;
  if (D > 1e-5 * (1.0 + std::abs(m))) {
    const double fp = phi1_scalar(m + D);
    const double fm = phi1_scalar(m - D);
    alpha = 0.5 * (fp + fm);
    beta = 0.5 * (fp - fm) / D;
  } else {
    alpha = phi1_scalar(m);
    beta = phi1_prime(m);
  }
  return Mat2{alpha + beta * (A.a - m), beta * A.b, beta * A.c, alpha + beta * (A.d - m)};
}

int auto_grid(int d, int K, int kf) {
  // alias-free projection of quadratic products: M > 2K + KF, with margin
  int m = std::max({4 * K, 3 * K + 2 * kf + 1, 16});
  if (m % 2) ++m;
  (void)d;
  return m;
}

}  // namespace

// Spectral engine: dense per-dimension trig transforms on an equispaced grid
// (exact quadrature for all band-limited products handled here).
struct detail::PdeEngine {
  int d, K, M;
  PotentialSpec spec;
  DiffusionSpec diff;
  FlipRates rates;
  PdeOptions opts;
  std::vector<BasisIndex> modes;
  std::vector<double> cosT, sinT;  // (K+1) x M per-dim tables
  // per-mode propagators, cached for the last dt
  double cached_dt = -1.0;
  std::vector<Mat2> prop_e, prop_p;
  StepInfo info;
  // scratch
  std::vector<double> ug, vg, bx, by, pu, pv, nu, nv, stage;

  PdeEngine(int d_, int K_, PotentialSpec spec_, DiffusionSpec diff_, FlipRates rates_,
            PdeOptions opts_)
      : d(d_), K(K_), spec(std::move(spec_)), diff(diff_), rates(rates_), opts(opts_) {
    if (d < 1 || d > 2) throw std::invalid_argument("pde: d must be 1 or 2");
    spec.validate();
    diff.validate();
    if (opts.exchange_enabled) rates.validate();
    M = opts.grid_n > 0 ? opts.grid_n : auto_grid(d, K, spec.max_mode());
    if (M <= 2 * K + spec.max_mode())
      throw std::invalid_argument("pde: grid_n too small for alias-free products");
    modes = field_modes(d, K);
    cosT.resize(static_cast<std::size_t>(K + 1) * M);
    sinT.resize(static_cast<std::size_t>(K + 1) * M);
    for (int k = 0; k <= K; ++k)
      for (int g = 0; g < M; ++g) {
        const double a = 2.0 * M_PI * k * g / M;
        cosT[static_cast<std::size_t>(k) * M + g] = std::cos(a);
        sinT[static_cast<std::size_t>(k) * M + g] = std::sin(a);
      }
    const std::size_t gn = grid_size();
    ug.resize(gn); vg.resize(gn); bx.resize(gn); by.resize(gn);
    pu.resize(gn); pv.resize(gn);
    nu.resize(modes.size()); nv.resize(modes.size());
    stage.resize(static_cast<std::size_t>(std::max(K + 1, M)) * static_cast<std::size_t>(std::max(K + 1, M)));
  }

  std::size_t grid_size() const {
    return d == 1 ? static_cast<std::size_t>(M) : static_cast<std::size_t>(M) * M;
  }
  static double dim_norm(int k) { return k > 0 ? M_SQRT2 : 1.0; }

  void synth(const std::vector<double>& c, std::vector<double>& grid) {
    if (d == 1) {
      for (int g = 0; g < M; ++g) {
        double s = 0.0;
        for (int k = 0; k <= K; ++k)
          s += c[static_cast<std::size_t>(k)] * dim_norm(k) *
               cosT[static_cast<std::size_t>(k) * M + g];
        grid[static_cast<std::size_t>(g)] = s;
      }
      return;
    }
    // stage[k1*M+g2] = sum_k2 c[k1,k2] n(k2) cos(k2,g2)
    for (int k1 = 0; k1 <= K; ++k1)
      for (int g2 = 0; g2 < M; ++g2) {
        double s = 0.0;
        for (int k2 = 0; k2 <= K; ++k2)
          s += c[static_cast<std::size_t>(k1) * (K + 1) + k2] * dim_norm(k2) *
               cosT[static_cast<std::size_t>(k2) * M + g2];
        stage[static_cast<std::size_t>(k1) * M + g2] = s;
      }
    for (int g1 = 0; g1 < M; ++g1)
      for (int g2 = 0; g2 < M; ++g2) {
        double s = 0.0;
        for (int k1 = 0; k1 <= K; ++k1)
          s += dim_norm(k1) * cosT[static_cast<std::size_t>(k1) * M + g1] *
               stage[static_cast<std::size_t>(k1) * M + g2];
        grid[static_cast<std::size_t>(g1) * M + g2] = s;
      }
  }

  // out[k] += scale * <p, d_j w_k> (exact quadrature, integration by parts
  // already applied: the j-factor is -2 pi k_j sin).
  void add_grad_projection(const std::vector<double>& p, int j, double scale,
                           std::vector<double>& out) {
    const double q = scale / std::pow(static_cast<double>(M), d);
    if (d == 1) {
      for (int k = 1; k <= K; ++k) {
        double s = 0.0;
        for (int g = 0; g < M; ++g)
          s += p[static_cast<std::size_t>(g)] * sinT[static_cast<std::size_t>(k) * M + g];
        out[static_cast<std::size_t>(k)] += q * dim_norm(k) * (-2.0 * M_PI * k) * s;
      }
      return;
    }
    if (j == 0) {
      // stage[g1*(K+1)+k2] = sum_g2 p cos(k2,g2)
      for (int g1 = 0; g1 < M; ++g1)
        for (int k2 = 0; k2 <= K; ++k2) {
          double s = 0.0;
          for (int g2 = 0; g2 < M; ++g2)
            s += p[static_cast<std::size_t>(g1) * M + g2] *
                 cosT[static_cast<std::size_t>(k2) * M + g2];
          stage[static_cast<std::size_t>(g1) * (K + 1) + k2] = s;
        }
      for (int k1 = 1; k1 <= K; ++k1)
        for (int k2 = 0; k2 <= K; ++k2) {
          double s = 0.0;
          for (int g1 = 0; g1 < M; ++g1)
            s += sinT[static_cast<std::size_t>(k1) * M + g1] *
                 stage[static_cast<std::size_t>(g1) * (K + 1) + k2];
          out[static_cast<std::size_t>(k1) * (K + 1) + k2] +=
              q * dim_norm(k1) * dim_norm(k2) * (-2.0 * M_PI * k1) * s;
        }
    } else {
      for (int g1 = 0; g1 < M; ++g1)
        for (int k2 = 1; k2 <= K; ++k2) {
          double s = 0.0;
          for (int g2 = 0; g2 < M; ++g2)
            s += p[static_cast<std::size_t>(g1) * M + g2] *
                 sinT[static_cast<std::size_t>(k2) * M + g2];
          stage[static_cast<std::size_t>(g1) * (K + 1) + k2] = s;
        }
      for (int k1 = 0; k1 <= K; ++k1)
        for (int k2 = 1; k2 <= K; ++k2) {
          double s = 0.0;
          for (int g1 = 0; g1 < M; ++g1)
            s += cosT[static_cast<std::size_t>(k1) * M + g1] *
                 stage[static_cast<std::size_t>(g1) * (K + 1) + k2];
          out[static_cast<std::size_t>(k1) * (K + 1) + k2] +=
              q * dim_norm(k1) * dim_norm(k2) * (-2.0 * M_PI * k2) * s;
        }
    }
  }

  // Drift field b = F ** rho synthesized from the (band-limited) potential
  // series; returns max |component| for the CFL heuristic.
  double drift_grids(const SpectralField& f) {
    std::fill(bx.begin(), bx.end(), 0.0);
    std::fill(by.begin(), by.end(), 0.0);
    for (const auto& mode : spec.modes) {
      const int idx = mode_index(d, K, mode.k);
      if (idx < 0) continue;
      const double qt = mode_multiplier(mode.u_coeff, mode.k) * f.u[static_cast<std::size_t>(idx)] +
                        mode_multiplier(mode.v_coeff, mode.k) * f.v[static_cast<std::size_t>(idx)];
      const double amp = spec.eta_scale * qt * mode.k.normalization();
      if (amp == 0.0) continue;
      if (d == 1) {
        const int k = mode.k[0];
        for (int g = 0; g < M; ++g)
          bx[static_cast<std::size_t>(g)] +=
              amp * (-2.0 * M_PI * k) * sinT[static_cast<std::size_t>(k) * M + g];
      } else {
        const int k1 = mode.k[0], k2 = mode.k[1];
        for (int g1 = 0; g1 < M; ++g1)
          for (int g2 = 0; g2 < M; ++g2) {
            const std::size_t gi = static_cast<std::size_t>(g1) * M + g2;
            const double c1 = cosT[static_cast<std::size_t>(k1) * M + g1];
            const double s1 = sinT[static_cast<std::size_t>(k1) * M + g1];
            const double c2 = cosT[static_cast<std::size_t>(k2) * M + g2];
            const double s2 = sinT[static_cast<std::size_t>(k2) * M + g2];
            bx[gi] += amp * (-2.0 * M_PI * k1) * s1 * c2;
            by[gi] += amp * c1 * (-2.0 * M_PI * k2) * s2;
          }
      }
    }
    double bmax = 0.0;
    for (double x : bx) bmax = std::max(bmax, std::abs(x));
    if (d == 2)
      for (double x : by) bmax = std::max(bmax, std::abs(x));
    return bmax;
  }

  // Transport coefficients (-div(u b), -div(v b)) projected on the basis.
  void transport_coeffs() {
    std::fill(nu.begin(), nu.end(), 0.0);
    std::fill(nv.begin(), nv.end(), 0.0);
    if (spec.modes.empty() || spec.eta_scale == 0.0) return;
    for (std::size_t g = 0; g < grid_size(); ++g) {
      pu[g] = ug[g] * bx[g];
      pv[g] = vg[g] * bx[g];
    }
    add_grad_projection(pu, 0, 1.0, nu);
    add_grad_projection(pv, 0, 1.0, nv);
    if (d == 2) {
      for (std::size_t g = 0; g < grid_size(); ++g) {
        pu[g] = ug[g] * by[g];
        pv[g] = vg[g] * by[g];
      }
      add_grad_projection(pu, 1, 1.0, nu);
      add_grad_projection(pv, 1, 1.0, nv);
    }
  }

  void build_propagators(double dt) {
    if (dt == cached_dt) return;
    prop_e.assign(modes.size(), Mat2{});
    prop_p.assign(modes.size(), Mat2{});
    const double du = 0.5 * diff.sigma_plus * diff.sigma_plus;
    const double dv = 0.5 * diff.sigma_minus * diff.sigma_minus;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const double lap = modes[i].laplace_symbol();
      Mat2 A;
      if (opts.exchange_enabled) {
        A = Mat2{-du * lap - rates.alpha_plus, rates.alpha_minus, rates.alpha_plus,
                 -dv * lap - rates.alpha_minus};
      } else {
        A = Mat2{-du * lap, 0.0, 0.0, -dv * lap};
      }
      A.a *= dt; A.b *= dt; A.c *= dt; A.d *= dt;
      prop_e[i] = mat_exp(A);
      Mat2 p = mat_phi1(A);
      p.a *= dt; p.b *= dt; p.c *= dt; p.d *= dt;
      prop_p[i] = p;
    }
    cached_dt = dt;
  }

  SpectralField do_step(const SpectralField& f, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("pde_step: dt must be positive");
    if (f.d != d || f.K != K) throw std::invalid_argument("pde_step: field shape mismatch");
    build_propagators(dt);

    synth(f.u, ug);
    synth(f.v, vg);
    double mind = ug[0];
    for (double x : ug) mind = std::min(mind, x);
    for (double x : vg) mind = std::min(mind, x);
    info.min_density = mind;
    if (mind < opts.negative_density_floor)
      throw IntegratorFailure("density undershoot " + format_double(mind) +
                              " below floor at t=" + format_double(f.t));

    const double bmax = drift_grids(f);
    info.cfl_warning = bmax * dt * K > 0.5;
    transport_coeffs();

    SpectralField out = f;
    out.t = f.t + dt;
    // mode 0: exact relaxation toward (u_c, v_c) * mass; transport vanishes
    if (opts.exchange_enabled) {
      const double s = rates.total();
      const SpinLaw st = SpinLaw::stationary(rates);
      const double mass = f.u[0] + f.v[0];
      const double decay = std::exp(-s * dt);
      const double ustar = st.p_plus * mass;
      const double vstar = st.p_minus * mass;
      out.u[0] = ustar + decay * (f.u[0] - ustar);
      out.v[0] = vstar + decay * (f.v[0] - vstar);
    }
    for (std::size_t i = 1; i < modes.size(); ++i) {
      double eu, ev, puv, pvv;
      prop_e[i].apply(f.u[i], f.v[i], eu, ev);
      prop_p[i].apply(nu[i], nv[i], puv, pvv);
      out.u[i] = eu + puv;
      out.v[i] = ev + pvv;
    }
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (!std::isfinite(out.u[i]) || !std::isfinite(out.v[i]))
        throw IntegratorFailure("non-finite coefficient at t=" + format_double(out.t));
    return out;
  }
};

PdeStepper::PdeStepper(int d, int K, PotentialSpec spec, DiffusionSpec diff, FlipRates rates,
                       PdeOptions opts)
    : impl_(std::make_unique<detail::PdeEngine>(d, K, std::move(spec), diff, rates, opts)) {}
PdeStepper::~PdeStepper() = default;
PdeStepper::PdeStepper(PdeStepper&&) noexcept = default;
PdeStepper& PdeStepper::operator=(PdeStepper&&) noexcept = default;

SpectralField PdeStepper::step(const SpectralField& f, double dt) { return impl_->do_step(f, dt); }
const StepInfo& PdeStepper::last_info() const { return impl_->info; }
int PdeStepper::grid_n() const { return impl_->M; }

SpectralField pde_step(const SpectralField& f, const PotentialSpec& spec,
                       const DiffusionSpec& diff, const FlipRates& rates, double dt,
                       PdeOptions opts) {
  PdeStepper stepper(f.d, f.K, spec, diff, rates, opts);
  return stepper.step(f, dt);
}

TransportCoeffs transport_projection(const SpectralField& f, const PotentialSpec& spec,
                                     const DiffusionSpec& diff, const FlipRates& rates,
                                     PdeOptions opts) {
  detail::PdeEngine engine(f.d, f.K, spec, diff, rates, opts);
  engine.synth(f.u, engine.ug);
  engine.synth(f.v, engine.vg);
  engine.drift_grids(f);
  engine.transport_coeffs();
  return TransportCoeffs{engine.nu, engine.nv};
}

double FieldTrajectory::t_end() const {
  return snaps.empty() ? t0 : snaps.back().t;
}

const SpectralField& FieldTrajectory::at_time(double t, double tol) const {
  if (snaps.empty()) throw std::invalid_argument("trajectory: empty");
  if (snaps.size() == 1 || dt_store <= 0.0) {
    if (std::abs(t - t0) > tol && t > t0 + tol)
      throw std::invalid_argument("trajectory: time not covered");
    return snaps.front();
  }
  const double rel = (t - t0) / dt_store;
  long idx = static_cast<long>(std::floor(rel + tol));
  if (idx < 0 || idx >= static_cast<long>(snaps.size()))
    throw std::invalid_argument("trajectory: time not covered");
  return snaps[static_cast<std::size_t>(idx)];
}

FieldTrajectory solve(const SpectralField& field0, const PotentialSpec& spec,
                      const DiffusionSpec& diff, const FlipRates& rates, double horizon,
                      double dt, int store_every, PdeOptions opts) {
  if (horizon < 0.0) throw std::invalid_argument("solve: negative horizon");
  if (store_every < 1) store_every = 1;
  FieldTrajectory traj;
  traj.t0 = field0.t;
  traj.snaps.push_back(field0);
  traj.min_density = 0.0;
  if (horizon == 0.0) return traj;

  const long n_steps = std::max(1L, std::lround(horizon / dt));
  const double dt_actual = horizon / static_cast<double>(n_steps);
  traj.dt_store = dt_actual * store_every;

  PdeStepper stepper(field0.d, field0.K, spec, diff, rates, opts);
  SpectralField f = field0;
  const double mass0 = f.mass();
  double mind = std::numeric_limits<double>::infinity();
  for (long s = 1; s <= n_steps; ++s) {
    f = stepper.step(f, dt_actual);
    mind = std::min(mind, stepper.last_info().min_density);
    traj.cfl_warning = traj.cfl_warning || stepper.last_info().cfl_warning;
    traj.max_mass_drift = std::max(traj.max_mass_drift, std::abs(f.mass() - mass0));
    if (s % store_every == 0 || s == n_steps) traj.snaps.push_back(f);
  }
  traj.min_density = mind;
  return traj;
}

namespace {

// Inverse-CDF draw from the 1-d cosine density b[0] + sum_k b[k] cos(2pi k x)
// (total mass b[0]); closed-form CDF, bisection-safeguarded Newton.
double sample_cosine_series_1d(const std::vector<double>& b, CounterRng& rng) {
  const double mass = b[0];
  if (!(mass > 0.0)) throw std::invalid_argument("sample: nonpositive conditional mass");
  const double target = rng.uniform() * mass;
  auto cdf = [&](double x) {
    double s = b[0] * x;
    for (std::size_t k = 1; k < b.size(); ++k)
      s += b[k] * std::sin(2.0 * M_PI * k * x) / (2.0 * M_PI * k);
    return s;
  };
  auto density = [&](double x) {
    double s = b[0];
    for (std::size_t k = 1; k < b.size(); ++k) s += b[k] * std::cos(2.0 * M_PI * k * x);
    return s;
  };
  double lo = 0.0, hi = 1.0, x = target / mass;
  for (int it = 0; it < 80; ++it) {
    const double g = cdf(x) - target;
    if (std::abs(g) < 1e-14 * mass) break;
    if (g > 0.0) hi = x; else lo = x;
    const double dp = std::max(density(x), 1e-10 * mass);
    double xn = x - g / dp;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return wrap_unit(x);
}

// Exact draw from the species density selected by the spin.
void sample_position_from_field(const SpectralField& f, int spin, CounterRng& rng, Vec& x) {
  const std::vector<double>& c = spin > 0 ? f.u : f.v;
  x.d = f.d;
  if (f.d == 1) {
    std::vector<double> b(static_cast<std::size_t>(f.K) + 1);
    for (int k = 0; k <= f.K; ++k) {
      BasisIndex bk{k};
      b[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)] * bk.normalization();
    }
    x[0] = sample_cosine_series_1d(b, rng);
    return;
  }
  // x1 from the first marginal, then x2 | x1 (both 1-d cosine series)
  const int K = f.K;
  auto coeff = [&](int k1, int k2) { return c[static_cast<std::size_t>(k1) * (K + 1) + k2]; };
  auto dn = [](int k) { return k > 0 ? M_SQRT2 : 1.0; };
  std::vector<double> b1(static_cast<std::size_t>(K) + 1);
  for (int k1 = 0; k1 <= K; ++k1) b1[static_cast<std::size_t>(k1)] = coeff(k1, 0) * dn(k1);
  x[0] = sample_cosine_series_1d(b1, rng);
  std::vector<double> b2(static_cast<std::size_t>(K) + 1);
  for (int k2 = 0; k2 <= K; ++k2) {
    double s = 0.0;
    for (int k1 = 0; k1 <= K; ++k1)
      s += coeff(k1, k2) * dn(k1) * std::cos(2.0 * M_PI * k1 * x[0]);
    b2[static_cast<std::size_t>(k2)] = s * dn(k2);
  }
  x[1] = sample_cosine_series_1d(b2, rng);
}

}  // namespace

std::pair<Vec, int> sample_field_point(const SpectralField& f, CounterRng& rng) {
  const SpinLaw law = f.type_marginal();
  const double mass = std::max(1e-300, law.p_plus + law.p_minus);
  const int spin = rng.uniform() <= law.p_plus / mass ? +1 : -1;
  Vec x(f.d);
  sample_position_from_field(f, spin, rng, x);
  return {x, spin};
}

CopyPath sample_copy(const FieldTrajectory& traj, const PotentialSpec& spec,
                     const DiffusionSpec& diff, const FlipRates& rates, double sampler_dt,
                     int copy_id, SimRng& rng) {
  if (traj.snaps.empty()) throw std::invalid_argument("sample_copy: empty trajectory");
  const SpectralField& f0 = traj.snaps.front();
  if (traj.snaps.size() > 1) {
    const double ratio = sampler_dt / traj.dt_store;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0 - 1e-9)
      throw std::invalid_argument("sample_copy: sampler dt must be a multiple of the stored grid");
  }

  CounterRng& init = rng.stream(copy_id, RngChannel::kInit);
  CounterRng& noise = rng.stream(copy_id, RngChannel::kBrownian);
  CounterRng& spin_rng = rng.stream(copy_id, RngChannel::kSpin);

  // initial state drawn from the field itself: inverse-CDF on a fine grid in
  // d=1, acceptance-free table sampling in d=2
  Vec x(f0.d);
  const SpinLaw law0 = f0.type_marginal();
  int spin = (init.uniform() <= law0.p_plus / std::max(1e-300, law0.p_plus + law0.p_minus)) ? 1 : -1;
  sample_position_from_field(f0, spin, init, x);

  CopyPath path;
  double t = traj.t0;
  path.times.push_back(t);
  path.positions.push_back(x);
  path.spins.push_back(spin);

  std::vector<SpinSegment> segments;
  const double t_end = traj.t_end();
  const long n_steps = std::max(0L, std::lround((t_end - traj.t0) / sampler_dt));
  for (long s = 0; s < n_steps; ++s) {
    const SpectralField& f = traj.at_time(t, 1e-9 * (1.0 + std::abs(t)));
    const Vec drift = mean_field_drift(spec, x, f);
    segments.clear();
    spin = advance_spin(spin, rates, t, t + sampler_dt, spin_rng, segments);
    for (int c = 0; c < x.d; ++c) {
      double xc = x[c] + drift[c] * sampler_dt;
      for (const SpinSegment& seg : segments) {
        const double len = seg.t_end - seg.t_begin;
        if (len <= 0.0) continue;
        xc += diff.sigma(seg.spin) * std::sqrt(len) * noise.normal();
      }
      x[c] = wrap_unit(xc);
    }
    t += sampler_dt;
    path.times.push_back(t);
    path.positions.push_back(x);
    path.spins.push_back(spin);
  }
  return path;
}

void save_field(const SpectralField& f, std::ostream& out) {
  out << "field d=" << f.d << " K=" << f.K << " t=" << format_double(f.t) << "\n";
  const auto modes = field_modes(f.d, f.K);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (int c = 0; c < f.d; ++c) out << (c ? "," : "") << modes[i][c];
    out << ' ' << format_double(f.u[i]) << ' ' << format_double(f.v[i]) << "\n";
  }
}

void save_field_file(const SpectralField& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  save_field(f, out);
}

SpectralField load_field(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "field") throw std::runtime_error("not a field snapshot");
  int d = 0, K = 0;
  double t = 0.0;
  for (int f = 0; f < 3; ++f) {
    std::string fieldstr;
    in >> fieldstr;
    const auto eq = fieldstr.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad field header");
    const std::string key = fieldstr.substr(0, eq);
    const std::string val = fieldstr.substr(eq + 1);
    if (key == "d") d = std::stoi(val);
    else if (key == "K") K = std::stoi(val);
    else if (key == "t") t = std::stod(val);
  }
  SpectralField out = SpectralField::zero(d, K);
  out.t = t;
  const auto modes = field_modes(d, K);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    std::string ktuple;
    in >> ktuple;
    in >> out.u[i] >> out.v[i];
  }
  if (!in) throw std::runtime_error("truncated field snapshot");
  out.validate();
  return out;
}

SpectralField load_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_field(in);
}

void export_field_grid_csv(const SpectralField& f, int grid_n, std::ostream& out) {
  if (f.d == 1) {
    out << "x,u,v\n";
    for (int g = 0; g < grid_n; ++g) {
      Vec x{static_cast<double>(g) / grid_n};
      out << format_double(x[0]) << ',' << format_double(eval_u(f, x)) << ','
          << format_double(eval_v(f, x)) << "\n";
    }
    return;
  }
  out << "x1,x2,u,v\n";
  for (int g1 = 0; g1 < grid_n; ++g1)
    for (int g2 = 0; g2 < grid_n; ++g2) {
      Vec x(2);
      x[0] = static_cast<double>(g1) / grid_n;
      x[1] = static_cast<double>(g2) / grid_n;
      out << format_double(x[0]) << ',' << format_double(x[1]) << ','
          << format_double(eval_u(f, x)) << ',' << format_double(eval_v(f, x)) << "\n";
    }
}

}  // namespace adhesion

#include "adhesion/bifurcation.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "adhesion/csv.hpp"

namespace adhesion {

namespace {

double laplace(const BasisIndex& k) { return k.laplace_symbol(); }

void require_nonzero(const BasisIndex& k) {
  if (k.is_zero()) throw std::invalid_argument("bifurcation: k = 0 carries no threshold");
}

}  // namespace

ModeData mode_data(const BasisIndex& k, const PotentialSpec& spec, const DiffusionSpec& diff,
                   const FlipRates& rates) {
  require_nonzero(k);
  ModeData md;
  md.k = k;
  const double lap = laplace(k);
  md.d_plus = 0.5 * diff.sigma_plus * diff.sigma_plus * lap + rates.alpha_plus;
  md.d_minus = 0.5 * diff.sigma_minus * diff.sigma_minus * lap + rates.alpha_minus;
  for (const auto& mode : spec.modes) {
    if (mode.k == k) {
      md.u_tilde = mode_basis_coeff(mode.u_coeff, k);
      md.v_tilde = mode_basis_coeff(mode.v_coeff, k);
      md.u_hat = mode_multiplier(mode.u_coeff, k);
      md.v_hat = mode_multiplier(mode.v_coeff, k);
      break;
    }
  }
  return md;
}

double eta_k(const BasisIndex& k, const PotentialSpec& spec, const DiffusionSpec& diff,
             const FlipRates& rates) {
  const ModeData md = mode_data(k, spec, diff, rates);
  rates.validate();
  const double a1 = rates.alpha_plus, a2 = rates.alpha_minus;
  const double numer = (a1 + a2) * (md.d_plus * md.d_minus - a1 * a2);
  const double bracket =
      a1 * md.v_hat * (md.d_plus + a2) + a2 * md.u_hat * (md.d_minus + a1);
  const double denom = laplace(k) * bracket;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return numer / denom;
}

Matrix2 symbol_M(const BasisIndex& k, double eta, const PotentialSpec& spec,
                 const DiffusionSpec& diff, const FlipRates& rates) {
  const ModeData md = mode_data(k, spec, diff, rates);
  rates.validate();
  const double s = rates.total();
  const double uc = rates.alpha_minus / s;
  const double vc = rates.alpha_plus / s;
  const double lap = laplace(k);
  Matrix2 m;
  m.m11 = 1.0 - eta * uc * lap * md.u_hat / md.d_plus;
  m.m12 = -(rates.alpha_minus + eta * uc * lap * md.v_hat) / md.d_plus;
  m.m21 = -(rates.alpha_plus + eta * vc * lap * md.u_hat) / md.d_minus;
  m.m22 = 1.0 - eta * vc * lap * md.v_hat / md.d_minus;
  return m;
}

ThresholdReport threshold_report(const PotentialSpec& spec, const DiffusionSpec& diff,
                                 const FlipRates& rates, int K) {
  if (K < 1) throw std::invalid_argument("threshold_report: K must be >= 1");
  ThresholdReport rep;
  for (const BasisIndex& k : even_modes_up_to(spec.d, K)) {
    if (k.is_zero()) continue;
    ThresholdRow row;
    row.mode = mode_data(k, spec, diff, rates);
    row.eta = eta_k(k, spec, diff, rates);
    row.positive = std::isfinite(row.eta) && row.eta > 0.0;
    rep.rows.push_back(row);
  }

  int best = -1;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    if (!rep.rows[i].positive) continue;
    if (best < 0 || rep.rows[i].eta < rep.rows[static_cast<std::size_t>(best)].eta)
      best = static_cast<int>(i);
  }
  if (best < 0) return rep;  // empty k*: no positive finite threshold in the scan

  rep.k_star_index = best;
  rep.eta_star = rep.rows[static_cast<std::size_t>(best)].eta;
  rep.positive = true;

  // (i) simplicity up to a relative tolerance; ties reported, never broken
  const double tol = 1e-9 * std::max(1.0, std::abs(rep.eta_star));
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    if (rep.rows[i].positive && std::abs(rep.rows[i].eta - rep.eta_star) <= tol)
      rep.tied_indices.push_back(static_cast<int>(i));
  rep.simple = rep.tied_indices.size() == 1;

  // (iii) self-adjointness identity at k*
  const ModeData& md = rep.rows[static_cast<std::size_t>(best)].mode;
  const double a1 = rates.alpha_plus, a2 = rates.alpha_minus;
  const double lhs = (a2 * md.d_minus - a1 * md.d_plus) *
                     (a1 * md.v_hat * (md.d_plus + a2) + a2 * md.u_hat * (md.d_minus + a1));
  const double rhs = (md.d_plus * md.d_minus - a1 * a2) *
                     (a1 * md.u_hat * md.d_plus - a2 * md.v_hat * md.d_minus);
  rep.self_adjoint =
      std::abs(lhs - rhs) <= 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)});

  // transversality quantity from the unit null vector of M(k*, eta*)
  const Matrix2 m = symbol_M(md.k, rep.eta_star, spec, diff, rates);
  double h1 = -m.m12, h2 = m.m11;
  if (std::abs(m.m12) < 1e-14) {
    h1 = m.m22;
    h2 = -m.m21;
  }
  const double hn = std::sqrt(h1 * h1 + h2 * h2);
  if (hn > 0.0) {
    h1 /= hn;
    h2 /= hn;
  }
  rep.null_vector[0] = h1;
  rep.null_vector[1] = h2;
  const double s = rates.total();
  const double uc = a2 / s, vc = a1 / s;
  rep.transversality_q =
      uc * md.d_minus * (md.u_hat * h1 * h1 + md.v_hat * h1 * h2) +
      vc * md.d_plus * (md.u_hat * h1 * h2 + md.v_hat * h2 * h2);
  rep.q_near_zero = std::abs(rep.transversality_q) < 1e-10;
  return rep;
}

void write_threshold_report(const ThresholdReport& rep, std::ostream& out) {
  out << "mode thresholds\n";
  out << "k d_plus d_minus u_tilde v_tilde u_hat v_hat eta positive\n";
  for (const auto& row : rep.rows) {
    for (int c = 0; c < row.mode.k.d; ++c) out << (c ? "," : "") << row.mode.k[c];
    out << ' ' << format_double(row.mode.d_plus) << ' ' << format_double(row.mode.d_minus)
        << ' ' << format_double(row.mode.u_tilde) << ' ' << format_double(row.mode.v_tilde)
        << ' ' << format_double(row.mode.u_hat) << ' ' << format_double(row.mode.v_hat)
        << ' ' << format_double(row.eta) << ' ' << (row.positive ? 1 : 0) << "\n";
  }
  if (rep.k_star_index) {
    const auto& star = rep.rows[static_cast<std::size_t>(*rep.k_star_index)];
    out << "k_star ";
    for (int c = 0; c < star.mode.k.d; ++c) out << (c ? "," : "") << star.mode.k[c];
    out << "\neta_star " << format_double(rep.eta_star) << "\n";
    out << "condition_simple " << (rep.simple ? 1 : 0) << "\n";
    out << "condition_positive " << (rep.positive ? 1 : 0) << "\n";
    out << "condition_self_adjoint " << (rep.self_adjoint ? 1 : 0) << "\n";
    out << "transversality_q " << format_double(rep.transversality_q) << "\n";
    out << "q_near_zero " << (rep.q_near_zero ? 1 : 0) << "\n";
  } else {
    out << "k_star none\n";
  }
}

PerturbationField PerturbationField::zero(int d, int K) {
  PerturbationField p;
  p.d = d;
  p.K = K;
  const std::size_t n = static_cast<std::size_t>(std::pow(K + 1, d) + 0.5);
  p.m.assign(n, 0.0);
  p.n.assign(n, 0.0);
  return p;
}

double PerturbationField::norm2() const {
  double s = 0.0;
  for (double x : m) s += x * x;
  for (double x : n) s += x * x;
  return std::sqrt(s);
}

double PerturbationField::amplitude_at(const BasisIndex& k) const {
  const int idx = mode_index(d, K, k);
  if (idx < 0) return 0.0;
  const double a = m[static_cast<std::size_t>(idx)];
  const double b = n[static_cast<std::size_t>(idx)];
  return std::sqrt(a * a + b * b);
}

PerturbationField field_to_perturbation(const SpectralField& f, const FlipRates& rates) {
  PerturbationField p = PerturbationField::zero(f.d, f.K);
  const SpinLaw st = SpinLaw::stationary(rates);
  p.m = f.u;
  p.n = f.v;
  p.m[0] -= st.p_plus * f.mass();
  p.n[0] -= st.p_minus * f.mass();
  // zero-mean subspace: mode-0 entries below round-off are dropped
  if (std::abs(p.m[0]) > 1e-9 || std::abs(p.n[0]) > 1e-9)
    throw std::invalid_argument("field_to_perturbation: species masses off equilibrium");
  p.m[0] = 0.0;
  p.n[0] = 0.0;
  return p;
}

SpectralField perturbation_to_field(const PerturbationField& r, const FlipRates& rates) {
  SpectralField f = SpectralField::homogeneous(r.d, r.K, rates);
  for (std::size_t i = 1; i < r.m.size(); ++i) {
    f.u[i] = r.m[i];
    f.v[i] = r.n[i];
  }
  return f;
}

// Phi is evaluated through the PDE stepper's spectral engine: the transport
// projection of a unit-time-scale stepper matches the stationary system's
// nonlinearity exactly (same grid, same quadrature), so zeros of Phi are
// fixed points of the evolution scheme.
PerturbationField phi_map(const PerturbationField& r, double eta, const PotentialSpec& spec,
                          const DiffusionSpec& diff, const FlipRates& rates, int grid_n) {
  rates.validate();
  const int d = r.d;
  const int K = r.K;

  // density field u = u_c + m, v = v_c + n with interaction strength eta
  SpectralField f = perturbation_to_field(r, rates);
  PotentialSpec swept = spec;
  swept.eta_scale = eta;

  // transport projection -div(u b), -div(v b) via one engine evaluation
  PdeOptions opts;
  opts.grid_n = grid_n;
  opts.negative_density_floor = -std::numeric_limits<double>::infinity();
  TransportCoeffs tc = transport_projection(f, swept, diff, rates, opts);

  PerturbationField out = PerturbationField::zero(d, K);
  const auto modes = field_modes(d, K);
  for (std::size_t i = 1; i < modes.size(); ++i) {
    const double lap = modes[i].laplace_symbol();
    const double d1 = 0.5 * diff.sigma_plus * diff.sigma_plus * lap + rates.alpha_plus;
    const double d2 = 0.5 * diff.sigma_minus * diff.sigma_minus * lap + rates.alpha_minus;
    // Phi_1 = m + Omega_1 * (eta div(M) - alpha_minus n)
    //       = m - (tc.u + alpha_minus n) / D_1 with tc.u = -div((u_c+m) b)
    out.m[i] = r.m[i] - (tc.u[i] + rates.alpha_minus * r.n[i]) / d1;
    out.n[i] = r.n[i] - (tc.v[i] + rates.alpha_plus * r.m[i]) / d2;
  }
  return out;
}

namespace {

Eigen::VectorXd pack(const PerturbationField& p) {
  const std::size_t n = p.m.size() - 1;
  Eigen::VectorXd x(2 * static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < p.m.size(); ++i) {
    x[static_cast<Eigen::Index>(i - 1)] = p.m[i];
    x[static_cast<Eigen::Index>(n + i - 1)] = p.n[i];
  }
  return x;
}

PerturbationField unpack(const Eigen::VectorXd& x, int d, int K) {
  PerturbationField p = PerturbationField::zero(d, K);
  const std::size_t n = p.m.size() - 1;
  for (std::size_t i = 1; i < p.m.size(); ++i) {
    p.m[i] = x[static_cast<Eigen::Index>(i - 1)];
    p.n[i] = x[static_cast<Eigen::Index>(n + i - 1)];
  }
  return p;
}

}  // namespace

PerturbationField newton_solve(const PerturbationField& r0, double eta,
                               const PotentialSpec& spec, const DiffusionSpec& diff,
                               const FlipRates& rates, const NewtonOptions& opts,
                               std::vector<double>* residual_history) {
  const int d = r0.d;
  const int K = r0.K;
  auto eval = [&](const Eigen::VectorXd& x) {
    return pack(phi_map(unpack(x, d, K), eta, spec, diff, rates, opts.grid_n));
  };

  Eigen::VectorXd x = pack(r0);
  Eigen::VectorXd fx = eval(x);
  std::vector<double> history{fx.norm()};

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double res = fx.norm();
    if (res < opts.tol) {
      if (residual_history) *residual_history = history;
      return unpack(x, d, K);
    }
    // forward-difference Jacobian over the truncated coefficient vector
    const Eigen::Index nvar = x.size();
    Eigen::MatrixXd jac(nvar, nvar);
    for (Eigen::Index j = 0; j < nvar; ++j) {
      const double h = opts.fd_step * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x;
      xp[j] += h;
      jac.col(j) = (eval(xp) - fx) / h;
    }
    Eigen::VectorXd dir = jac.fullPivLu().solve(-fx);
    if (!dir.allFinite()) break;

    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtrack; ++bt) {
      Eigen::VectorXd xn = x + step * dir;
      Eigen::VectorXd fn = eval(xn);
      if (fn.norm() < (1.0 - 1e-4 * step) * res) {
        x = xn;
        fx = fn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    history.push_back(fx.norm());
    if (!accepted) break;
  }
  if (fx.norm() < opts.tol) {
    if (residual_history) *residual_history = history;
    return unpack(x, d, K);
  }
  if (residual_history) *residual_history = history;
  throw NewtonFailure("newton did not reach tolerance", history);
}

std::vector<BranchPoint> newton_branch(double eta_start, double eta_end, int steps,
                                       const PotentialSpec& spec, const DiffusionSpec& diff,
                                       const FlipRates& rates, int K, double seed_eps,
                                       const NewtonOptions& opts) {
  if (steps < 1) throw std::invalid_argument("newton_branch: steps must be >= 1");
  const ThresholdReport rep = threshold_report(spec.unit_scale(), diff, rates, K);
  if (!rep.k_star_index)
    throw std::invalid_argument("newton_branch: no positive threshold in the scan box");
  const BasisIndex kstar = rep.rows[static_cast<std::size_t>(*rep.k_star_index)].mode.k;

  PerturbationField seed = PerturbationField::zero(spec.d, K);
  const int kidx = mode_index(spec.d, K, kstar);
  seed.m[static_cast<std::size_t>(kidx)] = seed_eps * rep.null_vector[0];
  seed.n[static_cast<std::size_t>(kidx)] = seed_eps * rep.null_vector[1];

  const PotentialSpec shape = spec.unit_scale();
  std::vector<BranchPoint> branch;
  PerturbationField carry = seed;
  bool have_carry = false;
  for (int i = 0; i < steps; ++i) {
    const double eta = steps == 1 ? eta_start
                                  : eta_start + (eta_end - eta_start) * i / (steps - 1);
    BranchPoint pt;
    pt.eta = eta;
    // Newton pulls tiny kernel seeds back to the trivial solution (it is a
    // zero of Phi at every eta), so a fresh start walks an amplitude ladder
    // and keeps the first nontrivial zero it reaches.
    std::vector<PerturbationField> guesses;
    if (have_carry && carry.norm2() > 1e-8) {
      guesses.push_back(carry);
    } else {
      for (double scale : {1.0, 5.0, 15.0, 40.0, 100.0}) {
        PerturbationField g = seed;
        for (auto& x : g.m) x *= scale;
        for (auto& x : g.n) x *= scale;
        guesses.push_back(std::move(g));
      }
    }
    pt.converged = false;
    for (const PerturbationField& guess : guesses) {
      try {
        PerturbationField sol = newton_solve(guess, eta, shape, diff, rates, opts);
        const double amp = sol.amplitude_at(kstar);
        if (!pt.converged || (pt.amplitude <= 1e-8 && amp > 1e-8)) {
          pt.state = std::move(sol);
          pt.converged = true;
          pt.amplitude = amp;
        }
        if (pt.amplitude > 1e-8) break;
      } catch (const NewtonFailure& fail) {
        pt.residual = fail.residual_history.empty() ? 0.0 : fail.residual_history.back();
      }
    }
    if (pt.converged) {
      pt.residual = phi_map(pt.state, eta, shape, diff, rates, opts.grid_n).norm2();
      carry = pt.state;
      have_carry = pt.amplitude > 1e-8;
    } else {
      have_carry = false;
    }
    branch.push_back(std::move(pt));
  }
  return branch;
}

bool newton_finds_nontrivial(double eta, const PotentialSpec& spec, const DiffusionSpec& diff,
                             const FlipRates& rates, int K, double seed_eps,
                             const NewtonOptions& opts) {
  const auto pts = newton_branch(eta, eta, 1, spec, diff, rates, K, seed_eps, opts);
  return pts[0].converged && pts[0].amplitude > 1e-6;
}

SpectralField stationary_fixed_point(const PotentialSpec& spec, const DiffusionSpec& diff,
                                     const FlipRates& rates, int K, double tol,
                                     const SpectralField* seed, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("stationary_fixed_point: tol must be > 0");
  PerturbationField r0 = seed ? field_to_perturbation(*seed, rates)
                              : PerturbationField::zero(spec.d, K);
  // Newton residual on Phi; the stationary right-hand side satisfies
  // RHS_k = -D_k Phi_k mode-wise, so the tolerance is transported through
  // the largest multiplier.
  const auto modes = field_modes(spec.d, K);
  double dmax = 1.0;
  for (const auto& k : modes) {
    const double lap = k.laplace_symbol();
    dmax = std::max({dmax, 0.5 * diff.sigma_plus * diff.sigma_plus * lap + rates.alpha_plus,
                     0.5 * diff.sigma_minus * diff.sigma_minus * lap + rates.alpha_minus});
  }
  NewtonOptions opts;
  opts.tol = tol / dmax;
  opts.max_iter = max_iter;
  std::vector<double> history;
  PerturbationField sol =
      newton_solve(r0, spec.eta_scale, spec.unit_scale(), diff, rates, opts, &history);
  SpectralField out = perturbation_to_field(sol, rates);
  return out;
}

}  // namespace adhesion

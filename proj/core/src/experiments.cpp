#include "adhesion/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "adhesion/bifurcation.hpp"
#include "adhesion/coupling.hpp"
#include "adhesion/meanfield.hpp"
#include "adhesion/transport.hpp"

namespace adhesion {

RateBounds RateBounds::from(double eta, const DiffusionSpec& diff, const FlipRates& rates,
                            int d) {
  RateBounds b;
  b.eta = eta;
  const double smin2 = diff.sigma_min() * diff.sigma_min();
  b.c0 = (2.0 * M_PI / d) * (smin2 * M_PI - eta * std::sqrt(static_cast<double>(d)));
  b.c_star = 2.0 * smin2 * M_PI * M_PI / d - 1.5 * M_PI * eta;
  b.mixing = rates.total();
  return b;
}

void parallel_runs(int n_runs, int workers, const std::function<void(int)>& body) {
  if (workers <= 1 || n_runs <= 1) {
    for (int r = 0; r < n_runs; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= n_runs) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(workers, n_runs);
  pool.reserve(static_cast<std::size_t>(k));
  for (int w = 0; w < k; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(n);
  if (n < 2) return out;
  double v = 0.0;
  for (double x : xs) v += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

struct FitResult {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  int n = 0;
};

FitResult least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  FitResult f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) return f;
  double xm = 0.0, ym = 0.0;
  for (int i = 0; i < f.n; ++i) {
    xm += x[static_cast<std::size_t>(i)];
    ym += y[static_cast<std::size_t>(i)];
  }
  xm /= f.n;
  ym /= f.n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < f.n; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - xm;
    sxx += dx * dx;
    sxy += dx * (y[static_cast<std::size_t>(i)] - ym);
  }
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  if (f.n > 2) {
    double rss = 0.0;
    for (int i = 0; i < f.n; ++i) {
      const double r = y[static_cast<std::size_t>(i)] - f.intercept -
                       f.slope * x[static_cast<std::size_t>(i)];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / (f.n - 2) / sxx);
  }
  return f;
}

struct StepGrid {
  long n_steps = 0;
  double dt = 0.0;
};

StepGrid resolve_steps(double horizon, double dt) {
  StepGrid g;
  g.n_steps = std::max(1L, std::lround(horizon / dt));
  g.dt = horizon / static_cast<double>(g.n_steps);
  return g;
}

double certified_eta(const ExperimentConfig& cfg) {
  if (cfg.potential.modes.empty() || cfg.potential.eta_scale == 0.0) return 0.0;
  return estimate_eta(cfg.potential, 16).eta();
}

std::string gate_preamble(const RateBounds& b) {
  std::ostringstream os;
  os << "eta_certified " << format_double(b.eta) << "\n";
  os << "c0 " << format_double(b.c0) << "\n";
  os << "c_star " << format_double(b.c_star) << "\n";
  os << "mixing_rate " << format_double(b.mixing) << "\n";
  return os.str();
}

// density of u, v and q = u+v on a uniform grid (d = 1)
std::vector<double> grid_density_1d(const SpectralField& f, int grid, bool want_u,
                                    bool want_v) {
  std::vector<double> out(static_cast<std::size_t>(grid), 0.0);
  for (int g = 0; g < grid; ++g) {
    Vec x{static_cast<double>(g) / grid};
    double s = 0.0;
    if (want_u) s += eval_u(f, x);
    if (want_v) s += eval_v(f, x);
    out[static_cast<std::size_t>(g)] = s;
  }
  return out;
}

double field_x_w1(const SpectralField& a, const SpectralField& b) {
  if (a.d == 1) {
    const int grid = std::max(64, 4 * a.K);
    return w1_grid_1d(grid_density_1d(a, grid, true, true),
                      grid_density_1d(b, grid, true, true));
  }
  // d = 2: quantize to a coarse atom grid and certify with the duality gap
  const int grid = 16;
  std::vector<double> pos;
  std::vector<double> wa, wb;
  double sa = 0.0, sb = 0.0;
  for (int g1 = 0; g1 < grid; ++g1)
    for (int g2 = 0; g2 < grid; ++g2) {
      Vec x(2);
      x[0] = static_cast<double>(g1) / grid;
      x[1] = static_cast<double>(g2) / grid;
      pos.push_back(x[0]);
      pos.push_back(x[1]);
      const double qa = std::max(0.0, eval_u(a, x) + eval_v(a, x));
      const double qb = std::max(0.0, eval_u(b, x) + eval_v(b, x));
      wa.push_back(qa);
      wb.push_back(qb);
      sa += qa;
      sb += qb;
    }
  for (auto& w : wa) w /= sa;
  for (auto& w : wb) w /= sb;
  return sinkhorn_w1_torus(2, pos, wa, pos, wb).cost;
}

// mode-0 masses plus listed (k, u, v) perturbation entries; a negative
// p_plus selects the stationary split
SpectralField initial_field(const ExperimentConfig& cfg, double p_plus,
                            const std::vector<double>& perturb) {
  SpectralField f = SpectralField::zero(cfg.d, cfg.spectral_K);
  if (p_plus < 0.0) {
    const SpinLaw st = SpinLaw::stationary(cfg.rates);
    f.u[0] = st.p_plus;
    f.v[0] = st.p_minus;
  } else {
    f.u[0] = p_plus;
    f.v[0] = 1.0 - p_plus;
  }
  const std::size_t arity = static_cast<std::size_t>(cfg.d) + 2;
  for (std::size_t i = 0; i + arity <= perturb.size(); i += arity) {
    BasisIndex k(cfg.d);
    for (int c = 0; c < cfg.d; ++c)
      k[c] = static_cast<int>(perturb[i + static_cast<std::size_t>(c)]);
    const int idx = mode_index(cfg.d, cfg.spectral_K, k);
    if (idx < 0) throw ConfigError("initial field: perturbation mode outside the cutoff");
    f.u[static_cast<std::size_t>(idx)] += perturb[i + arity - 2];
    f.v[static_cast<std::size_t>(idx)] += perturb[i + arity - 1];
  }
  return f;
}

}  // namespace

RunArtifacts run_poc_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  const double eta = certified_eta(cfg);
  const RateBounds bounds = RateBounds::from(eta, cfg.diff, cfg.rates, cfg.d);
  std::string regime = "theorem regime";
  if (bounds.c0 <= 0.0) {
    if (!cfg.allow_exploratory)
      throw GateError("poc-scan gate failed: c0 = " + format_double(bounds.c0) +
                      " <= 0 at certified eta " + format_double(eta));
    regime = "exploratory";
  }

  const StepGrid grid = resolve_steps(cfg.horizon, cfg.resolved_dt());
  std::vector<double> snapshot_times = cfg.snapshots;
  if (snapshot_times.empty()) snapshot_times = {cfg.horizon};
  std::vector<long> snap_steps;
  for (double t : snapshot_times)
    snap_steps.push_back(std::clamp(std::lround(t / grid.dt), 0L, grid.n_steps));

  const double plateau_horizon =
      cfg.plateau_times.empty() ? 0.0
                                : *std::max_element(cfg.plateau_times.begin(), cfg.plateau_times.end());
  const double max_horizon = std::max(cfg.horizon, plateau_horizon);
  const long total_steps = std::max(1L, std::lround(max_horizon / grid.dt));

  // shared mean-field trajectory: uniform positions, configured type masses;
  // the stored grid must be the exact step the coupled runs take
  SpectralField f0 = SpectralField::zero(cfg.d, cfg.spectral_K);
  f0.u[0] = cfg.spin_law0_bar.p_plus;
  f0.v[0] = cfg.spin_law0_bar.p_minus;
  PdeOptions popts;
  popts.grid_n = cfg.grid_n;
  const FieldTrajectory traj = solve(f0, cfg.potential, cfg.diff, cfg.rates,
                                     total_steps * grid.dt, grid.dt, 1, popts);

  struct RunResult {
    std::vector<double> w1x, bound, w1y, disagree;
  };

  // W1 to the mean-field law is estimated against a fresh independent
  // equal-size sample of rho_t (the coupled copies are correlated with the
  // particles by construction and only feed the upper-bound column).
  if (cfg.init == InitKind::kFile)
    throw ConfigError("poc-scan: the ladder generates its own initial conditions");
  auto run_coupled = [&](int n, std::uint32_t run_id, const std::vector<long>& steps_wanted,
                         long last_step) {
    SimRng rng(cfg.seed, run_id, n);
    ParticleEnsemble ens = cfg.init == InitKind::kLattice
                               ? init_lattice(cfg.d, n, cfg.spin_law0, rng)
                               : init_uniform(cfg.d, n, cfg.spin_law0, rng);
    CouplingState st =
        cfg.matched_laws
            ? make_matched_coupling(ens, cfg.resolved_delta())
            : make_coupling(ens, cfg.spin_law0, cfg.spin_law0_bar, cfg.resolved_delta(), rng);
    RunResult res;
    std::vector<double> fresh(static_cast<std::size_t>(n) * cfg.d);
    std::size_t want = 0;
    for (long s = 0; s <= last_step; ++s) {
      while (want < steps_wanted.size() && steps_wanted[want] == s) {
        const SpectralField& rho = traj.at_time(st.time(), 1e-9 * (1.0 + st.time()));
        for (int i = 0; i < n; ++i) {
          const auto [x, spin] = sample_field_point(rho, rng.stream(i, RngChannel::kInit));
          for (int c = 0; c < cfg.d; ++c) fresh[static_cast<std::size_t>(i) * cfg.d + c] = x[c];
          (void)spin;
        }
        res.w1x.push_back(w1_assignment_points(cfg.d, st.sys.pos, fresh));
        const auto [xb, yb] = w1_upper_bound(st);
        res.bound.push_back(xb);
        res.w1y.push_back(spin_w1(empirical(st.sys).type_marginal(), rho.type_marginal()));
        res.disagree.push_back(st.spin_disagreement_fraction());
        ++want;
      }
      if (s == last_step) break;
      st = coupled_step(st, cfg.potential, cfg.diff, cfg.rates, traj, grid.dt, rng);
    }
    return res;
  };

  RunArtifacts art;
  Table ladder{"poc_ladder",
               {"N", "t", "w1x_mean", "w1x_se", "bound_mean", "bound_se", "w1y_mean",
                "disagreement_mean"},
               {}};
  std::vector<double> logn, logw;

  std::uint32_t run_counter = 0;
  for (double n_real : cfg.n_ladder) {
    const int n = static_cast<int>(n_real);
    std::vector<RunResult> results(static_cast<std::size_t>(cfg.repeats));
    const std::uint32_t base = run_counter;
    run_counter += static_cast<std::uint32_t>(cfg.repeats);
    parallel_runs(cfg.repeats, cfg.resolved_workers(), [&](int r) {
      results[static_cast<std::size_t>(r)] =
          run_coupled(n, base + static_cast<std::uint32_t>(r), snap_steps, snap_steps.back());
    });
    for (std::size_t si = 0; si < snap_steps.size(); ++si) {
      std::vector<double> w1s, bounds_s, w1ys, dis;
      for (const auto& rr : results) {
        w1s.push_back(rr.w1x[si]);
        bounds_s.push_back(rr.bound[si]);
        w1ys.push_back(rr.w1y[si]);
        dis.push_back(rr.disagree[si]);
      }
      const MeanSe w = mean_se(w1s);
      const MeanSe b = mean_se(bounds_s);
      ladder.row()
          .integer(n)
          .num(snap_steps[si] * grid.dt)
          .num(w.mean)
          .num(w.se)
          .num(b.mean)
          .num(b.se)
          .num(mean_se(w1ys).mean)
          .num(mean_se(dis).mean);
      if (si + 1 == snap_steps.size() && w.mean > 0.0) {
        logn.push_back(std::log(static_cast<double>(n)));
        logw.push_back(std::log(w.mean));
      }
    }
  }
  art.tables.push_back(std::move(ladder));

  const FitResult fit = least_squares(logn, logw);
  Table slope{"poc_slope", {"t", "slope", "slope_se", "n_points"}, {}};
  slope.row().num(cfg.horizon).num(fit.slope).num(fit.slope_se).integer(fit.n);
  art.tables.push_back(std::move(slope));

  // fixed-N plateau scan
  Table plateau{"poc_plateau",
                {"t", "w1x_mean", "w1x_se", "non_increasing_2sigma"},
                {}};
  if (!cfg.plateau_times.empty()) {
    std::vector<long> psteps;
    for (double t : cfg.plateau_times)
      psteps.push_back(std::clamp(std::lround(t / grid.dt), 0L, total_steps));
    std::vector<RunResult> results(static_cast<std::size_t>(cfg.repeats));
    const std::uint32_t base = run_counter;
    run_counter += static_cast<std::uint32_t>(cfg.repeats);
    parallel_runs(cfg.repeats, cfg.resolved_workers(), [&](int r) {
      results[static_cast<std::size_t>(r)] =
          run_coupled(cfg.plateau_n, base + static_cast<std::uint32_t>(r), psteps, psteps.back());
    });
    std::vector<MeanSe> stats;
    for (std::size_t si = 0; si < psteps.size(); ++si) {
      std::vector<double> w1s;
      for (const auto& rr : results) w1s.push_back(rr.w1x[si]);
      stats.push_back(mean_se(w1s));
    }
    for (std::size_t si = 0; si < psteps.size(); ++si) {
      bool ok = true;
      if (si > 0) {
        const double tol =
            2.0 * std::sqrt(stats[si].se * stats[si].se + stats[si - 1].se * stats[si - 1].se);
        ok = stats[si].mean <= stats[si - 1].mean + tol;
      }
      plateau.row()
          .num(psteps[si] * grid.dt)
          .num(stats[si].mean)
          .num(stats[si].se)
          .integer(ok ? 1 : 0);
    }
  }
  art.tables.push_back(std::move(plateau));

  std::ostringstream rep;
  rep << "experiment poc-scan\n" << gate_preamble(bounds);
  rep << "regime " << regime << "\n";
  rep << "slope " << format_double(fit.slope) << " se " << format_double(fit.slope_se) << "\n";
  art.report = rep.str();
  return art;
}

RunArtifacts run_contraction(const ExperimentConfig& cfg) {
  cfg.validate();
  const double eta = certified_eta(cfg);
  const RateBounds bounds = RateBounds::from(eta, cfg.diff, cfg.rates, cfg.d);
  std::string regime = "theorem regime";
  if (bounds.c_star <= 0.0) {
    if (!cfg.allow_exploratory)
      throw GateError("contract gate failed: c_star = " + format_double(bounds.c_star) +
                      " <= 0 at certified eta " + format_double(eta));
    regime = "exploratory";
  }

  const SpectralField fa =
      initial_field(cfg, cfg.contract_p_plus_a, cfg.contract_perturb_a);
  const SpectralField fb =
      initial_field(cfg, cfg.contract_p_plus_b, cfg.contract_perturb_b);

  const StepGrid grid = resolve_steps(cfg.horizon, cfg.resolved_dt());
  // the entropic route in d=2 is far costlier per evaluation than the exact
  // circle method, so fewer snapshots are compared there
  const long target_rows = cfg.d == 1 ? 200 : 24;
  const int store_every =
      static_cast<int>((grid.n_steps + target_rows - 1) / target_rows);
  PdeOptions popts;
  popts.grid_n = cfg.grid_n;
  const FieldTrajectory ta =
      solve(fa, cfg.potential, cfg.diff, cfg.rates, cfg.horizon, grid.dt, store_every, popts);
  const FieldTrajectory tb =
      solve(fb, cfg.potential, cfg.diff, cfg.rates, cfg.horizon, grid.dt, store_every, popts);

  Table decay{"contract_decay", {"t", "w1x", "w1y"}, {}};
  std::vector<double> ts, w1xs, w1ys;
  for (std::size_t i = 0; i < std::min(ta.snaps.size(), tb.snaps.size()); ++i) {
    const double w1x = field_x_w1(ta.snaps[i], tb.snaps[i]);
    const double w1y = spin_w1(ta.snaps[i].type_marginal(), tb.snaps[i].type_marginal());
    decay.row().num(ta.snaps[i].t).num(w1x).num(w1y);
    ts.push_back(ta.snaps[i].t);
    w1xs.push_back(w1x);
    w1ys.push_back(w1y);
  }
  RunArtifacts art;
  art.tables.push_back(std::move(decay));

  // exponential fit over the decaying range above the numerical floor,
  // skipping the initial transient
  auto tail_rate = [&](const std::vector<double>& vals, double floor) {
    double t_hi = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i] > floor) t_hi = std::max(t_hi, ts[i]);
    const double t_lo = 0.15 * t_hi;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (vals[i] <= floor || ts[i] < t_lo) continue;
      xs.push_back(ts[i]);
      ys.push_back(std::log(vals[i]));
    }
    return least_squares(xs, ys);
  };
  const FitResult fx = tail_rate(w1xs, 1e-12);
  const FitResult fy = tail_rate(w1ys, 1e-13);

  bool monotone = true;
  for (std::size_t i = 1; i < w1xs.size(); ++i)
    if (w1xs[i] > w1xs[i - 1] + 1e-12) monotone = false;

  Table summary{"contract_summary",
                {"c_star", "mixing", "guaranteed_floor", "rate_x", "rate_x_se", "rate_y",
                 "monotone", "max_mass_drift"},
                {}};
  summary.row()
      .num(bounds.c_star)
      .num(bounds.mixing)
      .num(bounds.effective_contraction() / 7.0)
      .num(-fx.slope)
      .num(fx.slope_se)
      .num(-fy.slope)
      .integer(monotone ? 1 : 0)
      .num(std::max(ta.max_mass_drift, tb.max_mass_drift));
  art.tables.push_back(std::move(summary));

  std::ostringstream rep;
  rep << "experiment contract\n" << gate_preamble(bounds);
  rep << "regime " << regime << "\n";
  rep << "fitted_rate_x " << format_double(-fx.slope) << "\n";
  rep << "fitted_rate_y " << format_double(-fy.slope) << "\n";
  rep << "guaranteed_floor " << format_double(bounds.effective_contraction() / 7.0) << "\n";
  art.report = rep.str();
  return art;
}

namespace {

struct PdeProbe {
  double rate = 0.0;
  double terminal_amplitude = 0.0;
  bool saturated = false;
};

// Linear growth/decay rate of the k* amplitude from a perturbed homogeneous
// start; saturation (nonlinear range) counts as growth.
PdeProbe pde_mode_probe(const ExperimentConfig& cfg, const ThresholdReport& rep, double eta,
                        double eps, double horizon) {
  const BasisIndex kstar = *rep.k_star();
  SpectralField f = SpectralField::homogeneous(cfg.d, cfg.spectral_K, cfg.rates);
  const int kidx = mode_index(cfg.d, cfg.spectral_K, kstar);
  f.u[static_cast<std::size_t>(kidx)] = eps * rep.null_vector[0];
  f.v[static_cast<std::size_t>(kidx)] = eps * rep.null_vector[1];

  PotentialSpec swept = cfg.potential.unit_scale();
  swept.eta_scale = eta;
  const double eta_cert = estimate_eta(swept, 16).eta();
  const StepGrid grid = resolve_steps(horizon, default_dt_max(eta_cert, cfg.rates));
  const int store_every = std::max(1L, grid.n_steps / 80);
  PdeOptions popts;
  popts.grid_n = cfg.grid_n;
  const FieldTrajectory traj =
      solve(f, swept, cfg.diff, cfg.rates, horizon, grid.dt, store_every, popts);

  std::vector<double> ts, la;
  PdeProbe probe;
  for (const SpectralField& snap : traj.snaps) {
    const double mu = snap.u[static_cast<std::size_t>(kidx)];
    const double nv = snap.v[static_cast<std::size_t>(kidx)];
    const double amp = std::sqrt(mu * mu + nv * nv);
    if (&snap == &traj.snaps.back()) probe.terminal_amplitude = amp;
    if (snap.t < 0.5 * horizon) continue;
    if (amp > 0.05) probe.saturated = true;
    if (amp > 1e-13 && amp <= 0.05) {
      ts.push_back(snap.t);
      la.push_back(std::log(amp));
    }
  }
  if (probe.saturated && ts.size() < 4) {
    probe.rate = 1.0;
    return probe;
  }
  if (ts.size() < 2) {
    probe.rate = -1.0;  // collapsed below the floor everywhere
    return probe;
  }
  probe.rate = least_squares(ts, la).slope;
  if (probe.saturated && probe.rate < 0.0) probe.rate = 1.0;
  return probe;
}

}  // namespace

RunArtifacts run_bifurcation_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const ThresholdReport rep =
      threshold_report(cfg.potential.unit_scale(), cfg.diff, cfg.rates, cfg.spectral_K);
  if (!rep.k_star_index)
    throw GateError("bifurcate: no positive finite threshold within the scan box");
  const double eta_star = rep.eta_star;

  RunArtifacts art;
  Table modes{"bif_modes", {"k", "eta_k", "positive"}, {}};
  for (const auto& row : rep.rows) {
    std::string ks;
    for (int c = 0; c < row.mode.k.d; ++c) ks += (c ? "," : "") + std::to_string(row.mode.k[c]);
    modes.row().text(ks).num(row.eta).integer(row.positive ? 1 : 0);
  }
  art.tables.push_back(std::move(modes));

  // Newton branch over the sweep
  NewtonOptions nopts;
  nopts.grid_n = cfg.grid_n;
  const auto branch =
      newton_branch(cfg.sweep_lo * eta_star, cfg.sweep_hi * eta_star, cfg.sweep_steps,
                    cfg.potential, cfg.diff, cfg.rates, cfg.spectral_K,
                    cfg.branch_seed_eps, nopts);
  Table btab{"bif_branch", {"eta", "amplitude", "residual", "converged"}, {}};
  double first_nontrivial = std::numeric_limits<double>::quiet_NaN();
  double last_trivial = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pt : branch) {
    btab.row().num(pt.eta).num(pt.amplitude).num(pt.residual).integer(pt.converged ? 1 : 0);
    if (pt.converged && pt.amplitude > 1e-6) {
      if (std::isnan(first_nontrivial)) first_nontrivial = pt.eta;
    } else if (std::isnan(first_nontrivial)) {
      last_trivial = pt.eta;
    }
  }
  art.tables.push_back(std::move(btab));

  // refine the branch onset by bisection on Newton nontriviality
  double onset_newton = first_nontrivial;
  if (!std::isnan(first_nontrivial) && !std::isnan(last_trivial)) {
    double a = last_trivial, b = first_nontrivial;
    for (int it = 0; it < 10 && (b - a) > 0.002 * eta_star; ++it) {
      const double mid = 0.5 * (a + b);
      if (newton_finds_nontrivial(mid, cfg.potential, cfg.diff, cfg.rates, cfg.spectral_K,
                                  cfg.branch_seed_eps, nopts))
        b = mid;
      else
        a = mid;
    }
    onset_newton = 0.5 * (a + b);
  }

  // PDE onset by bisection on the linear growth rate of the k* mode
  Table ptab{"bif_pde", {"eta", "rate", "terminal_amplitude"}, {}};
  double lo = cfg.sweep_lo * eta_star, hi = cfg.sweep_hi * eta_star;
  const PdeProbe plo = pde_mode_probe(cfg, rep, lo, 1e-4, cfg.pde_onset_horizon);
  const PdeProbe phi = pde_mode_probe(cfg, rep, hi, 1e-4, cfg.pde_onset_horizon);
  ptab.row().num(lo).num(plo.rate).num(plo.terminal_amplitude);
  ptab.row().num(hi).num(phi.rate).num(phi.terminal_amplitude);
  double onset_pde = std::numeric_limits<double>::quiet_NaN();
  if (plo.rate < 0.0 && phi.rate > 0.0) {
    double a = lo, b = hi;
    for (int it = 0; it < 12 && (b - a) > 0.002 * eta_star; ++it) {
      const double mid = 0.5 * (a + b);
      const PdeProbe pm = pde_mode_probe(cfg, rep, mid, 1e-4, cfg.pde_onset_horizon);
      ptab.row().num(mid).num(pm.rate).num(pm.terminal_amplitude);
      if (pm.rate > 0.0) b = mid; else a = mid;
    }
    onset_pde = 0.5 * (a + b);
  }
  art.tables.push_back(std::move(ptab));

  // cross-validation at the top of the sweep: long PDE run vs Newton state
  double crossval = std::numeric_limits<double>::quiet_NaN();
  {
    const double eta_hi = cfg.sweep_hi * eta_star;
    PotentialSpec swept = cfg.potential.unit_scale();
    swept.eta_scale = eta_hi;
    const double eta_cert = estimate_eta(swept, 16).eta();
    const StepGrid grid = resolve_steps(cfg.crossval_horizon, default_dt_max(eta_cert, cfg.rates));
    SpectralField f = SpectralField::homogeneous(cfg.d, cfg.spectral_K, cfg.rates);
    const int kidx = mode_index(cfg.d, cfg.spectral_K, *rep.k_star());
    f.u[static_cast<std::size_t>(kidx)] = 1e-2 * rep.null_vector[0];
    f.v[static_cast<std::size_t>(kidx)] = 1e-2 * rep.null_vector[1];
    PdeOptions popts;
    popts.grid_n = cfg.grid_n;
    const FieldTrajectory traj = solve(f, swept, cfg.diff, cfg.rates, cfg.crossval_horizon,
                                       grid.dt, static_cast<int>(grid.n_steps), popts);
    const SpectralField& terminal = traj.snaps.back();

    const BranchPoint* top = nullptr;
    for (const auto& pt : branch)
      if (pt.converged && (!top || pt.eta > top->eta)) top = &pt;
    if (top && top->amplitude > 1e-6) {
      SpectralField newton_f = perturbation_to_field(top->state, cfg.rates);
      SpectralField flipped = newton_f;
      for (std::size_t i = 1; i < flipped.u.size(); ++i) {
        flipped.u[i] = -flipped.u[i];
        flipped.v[i] = -flipped.v[i];
      }
      auto species_w1 = [&](const SpectralField& x, const SpectralField& y) {
        const SpinLaw st = SpinLaw::stationary(cfg.rates);
        const int grid_q = std::max(64, 4 * cfg.spectral_K);
        const double wu = w1_grid_1d(grid_density_1d(x, grid_q, true, false),
                                     grid_density_1d(y, grid_q, true, false));
        const double wv = w1_grid_1d(grid_density_1d(x, grid_q, false, true),
                                     grid_density_1d(y, grid_q, false, true));
        return st.p_plus * wu + st.p_minus * wv;
      };
      crossval = std::min(species_w1(terminal, newton_f), species_w1(terminal, flipped));
    }
  }

  Table summary{"bif_summary",
                {"eta_star", "k_star", "onset_pde", "onset_newton", "onset_pde_rel_err",
                 "onset_newton_rel_err", "crossval_w1", "transversality_q"},
                {}};
  std::string ks;
  for (int c = 0; c < rep.k_star()->d; ++c) ks += (c ? "," : "") + std::to_string((*rep.k_star())[c]);
  summary.row()
      .num(eta_star)
      .text(ks)
      .num(onset_pde)
      .num(onset_newton)
      .num(std::abs(onset_pde - eta_star) / eta_star)
      .num(std::abs(onset_newton - eta_star) / eta_star)
      .num(crossval)
      .num(rep.transversality_q);
  art.tables.push_back(std::move(summary));

  std::ostringstream os;
  os << "experiment bifurcate\n";
  os << "eta_star " << format_double(eta_star) << "\n";
  os << "onset_pde " << format_double(onset_pde) << "\n";
  os << "onset_newton " << format_double(onset_newton) << "\n";
  os << "crossval_w1 " << format_double(crossval) << "\n";
  art.report = os.str();
  return art;
}

RunArtifacts run_thresholds(const ExperimentConfig& cfg) {
  cfg.validate();
  const ThresholdReport rep =
      threshold_report(cfg.potential.unit_scale(), cfg.diff, cfg.rates, cfg.spectral_K);
  RunArtifacts art;
  Table t{"thresholds",
          {"k", "d_plus", "d_minus", "u_tilde", "v_tilde", "u_hat", "v_hat", "eta_k",
           "positive"},
          {}};
  for (const auto& row : rep.rows) {
    std::string ks;
    for (int c = 0; c < row.mode.k.d; ++c) ks += (c ? "," : "") + std::to_string(row.mode.k[c]);
    t.row()
        .text(ks)
        .num(row.mode.d_plus)
        .num(row.mode.d_minus)
        .num(row.mode.u_tilde)
        .num(row.mode.v_tilde)
        .num(row.mode.u_hat)
        .num(row.mode.v_hat)
        .num(row.eta)
        .integer(row.positive ? 1 : 0);
  }
  art.tables.push_back(std::move(t));
  std::ostringstream os;
  write_threshold_report(rep, os);
  art.report = os.str();
  return art;
}

RunArtifacts run_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const StepGrid grid = resolve_steps(cfg.horizon, cfg.resolved_dt());
  std::vector<double> snaps = cfg.snapshots;
  if (snaps.empty()) snaps = {cfg.horizon};

  SimRng rng(cfg.seed, 0, cfg.n_particles);
  ParticleEnsemble ens;
  switch (cfg.init) {
    case InitKind::kUniform: ens = init_uniform(cfg.d, cfg.n_particles, cfg.spin_law0, rng); break;
    case InitKind::kLattice: ens = init_lattice(cfg.d, cfg.n_particles, cfg.spin_law0, rng); break;
    case InitKind::kFile: ens = load_ensemble_file(cfg.init_file); break;
  }

  RunArtifacts art;
  Table tab{"simulate", {"t", "frac_plus", "mean_cos", "mean_sin"}, {}};
  auto record = [&](const ParticleEnsemble& e) {
    double mc = 0.0, ms = 0.0;
    for (int i = 0; i < e.size(); ++i) {
      mc += std::cos(2.0 * M_PI * e.pos[static_cast<std::size_t>(i) * e.d]);
      ms += std::sin(2.0 * M_PI * e.pos[static_cast<std::size_t>(i) * e.d]);
    }
    tab.row()
        .num(e.t)
        .num(empirical(e).fraction_plus())
        .num(mc / e.size())
        .num(ms / e.size());
  };

  std::vector<long> snap_steps;
  for (double t : snaps) snap_steps.push_back(std::clamp(std::lround(t / grid.dt), 0L, grid.n_steps));
  std::size_t want = 0;
  for (long s = 0; s <= grid.n_steps; ++s) {
    while (want < snap_steps.size() && snap_steps[want] == s) {
      record(ens);
      if (!out_dir.empty())
        save_ensemble_file(ens, cfg.seed,
                           out_dir + "/ensemble_t" + format_double(snaps[want]) + ".txt");
      ++want;
    }
    if (s == grid.n_steps) break;
    ens = step(ens, cfg.potential, cfg.diff, cfg.rates, grid.dt, rng);
  }
  art.tables.push_back(std::move(tab));
  art.report = "experiment simulate\n";
  return art;
}

RunArtifacts run_pde(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const StepGrid grid = resolve_steps(cfg.horizon, cfg.resolved_dt());
  const SpectralField f0 =
      initial_field(cfg, cfg.contract_p_plus_a, cfg.contract_perturb_a);
  PdeOptions popts;
  popts.grid_n = cfg.grid_n;
  const int store_every = static_cast<int>(std::max(1L, grid.n_steps / 100));
  const FieldTrajectory traj =
      solve(f0, cfg.potential, cfg.diff, cfg.rates, cfg.horizon, grid.dt, store_every, popts);

  RunArtifacts art;
  Table tab{"pde", {"t", "mass", "mass_u", "mass_v"}, {}};
  for (const auto& s : traj.snaps) tab.row().num(s.t).num(s.mass()).num(s.mass_u()).num(s.mass_v());
  art.tables.push_back(std::move(tab));
  if (!out_dir.empty()) {
    save_field_file(traj.snaps.back(), out_dir + "/field_final.txt");
    std::ofstream grid_csv(out_dir + "/field_final_grid.csv", std::ios::binary);
    export_field_grid_csv(traj.snaps.back(), std::max(64, 4 * cfg.spectral_K), grid_csv);
  }
  std::ostringstream os;
  os << "experiment pde\n";
  os << "max_mass_drift " << format_double(traj.max_mass_drift) << "\n";
  os << "min_density " << format_double(traj.min_density) << "\n";
  os << "cfl_warning " << (traj.cfl_warning ? 1 : 0) << "\n";
  art.report = os.str();
  return art;
}

RunArtifacts run_couple(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const StepGrid grid = resolve_steps(cfg.horizon, cfg.resolved_dt());
  SpectralField f0 = SpectralField::zero(cfg.d, cfg.spectral_K);
  f0.u[0] = cfg.spin_law0_bar.p_plus;
  f0.v[0] = cfg.spin_law0_bar.p_minus;
  PdeOptions popts;
  popts.grid_n = cfg.grid_n;
  const FieldTrajectory traj =
      solve(f0, cfg.potential, cfg.diff, cfg.rates, cfg.horizon, grid.dt, 1, popts);

  const int record_every = static_cast<int>(std::max(1L, grid.n_steps / 200));
  const LyapunovParams lp{cfg.resolved_a(), cfg.resolved_delta()};

  std::vector<std::vector<CouplingDiagnostics>> all(static_cast<std::size_t>(cfg.repeats));
  parallel_runs(cfg.repeats, cfg.resolved_workers(), [&](int r) {
    SimRng rng(cfg.seed, static_cast<std::uint32_t>(r), cfg.n_particles);
    ParticleEnsemble ens = cfg.init == InitKind::kLattice
                               ? init_lattice(cfg.d, cfg.n_particles, cfg.spin_law0, rng)
                               : init_uniform(cfg.d, cfg.n_particles, cfg.spin_law0, rng);
    CouplingState st = cfg.matched_laws
                           ? make_matched_coupling(ens, cfg.resolved_delta())
                           : make_coupling(ens, cfg.spin_law0, cfg.spin_law0_bar,
                                           cfg.resolved_delta(), rng);
    std::vector<CouplingDiagnostics> rows;
    for (long s = 0; s <= grid.n_steps; ++s) {
      if (s % record_every == 0 || s == grid.n_steps)
        rows.push_back(coupling_diagnostics(st, lp));
      if (s == grid.n_steps) break;
      st = coupled_step(st, cfg.potential, cfg.diff, cfg.rates, traj, grid.dt, rng);
    }
    all[static_cast<std::size_t>(r)] = std::move(rows);
  });

  RunArtifacts art;
  Table tab{"couple_mean",
            {"t", "lyapunov", "x_bound", "y_bound", "min_pair_dist",
             "spin_disagreement_fraction"},
            {}};
  for (std::size_t i = 0; i < all[0].size(); ++i) {
    CouplingDiagnostics acc;
    acc.t = all[0][i].t;
    double minp = std::numeric_limits<double>::infinity();
    for (const auto& rows : all) {
      acc.lyapunov_value += rows[i].lyapunov_value;
      acc.x_bound += rows[i].x_bound;
      acc.y_bound += rows[i].y_bound;
      acc.spin_disagreement += rows[i].spin_disagreement;
      minp = std::min(minp, rows[i].min_pair_dist);
    }
    const double r = static_cast<double>(cfg.repeats);
    tab.row()
        .num(acc.t)
        .num(acc.lyapunov_value / r)
        .num(acc.x_bound / r)
        .num(acc.y_bound / r)
        .num(minp)
        .num(acc.spin_disagreement / r);
  }
  art.tables.push_back(std::move(tab));

  if (!out_dir.empty()) {
    for (int r = 0; r < cfg.repeats; ++r) {
      std::ofstream out(out_dir + "/couple_run" + std::to_string(r) + ".csv", std::ios::binary);
      write_diagnostics_csv(all[static_cast<std::size_t>(r)], out);
    }
  }
  art.report = "experiment couple\n";
  return art;
}

void emit(const RunArtifacts& results, const std::string& dir, const std::string& format) {
  std::filesystem::create_directories(dir);
  const bool want_csv = format == "all" || format == "csv";
  const bool want_report = format == "all" || format == "report";
  if (want_csv)
    for (const Table& t : results.tables) write_csv_file(t, dir + "/" + t.name + ".csv");
  if (want_report && !results.report.empty()) {
    std::ofstream out(dir + "/report.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + dir + "/report.txt");
    out << results.report;
  }
}

}  // namespace adhesion

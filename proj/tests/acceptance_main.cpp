// Acceptance suite: one pass/fail line per criterion, exit code equal to the
// number of failures. Statistical criteria use fixed seeds; rate and
// threshold criteria are deterministic.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "adhesion/bifurcation.hpp"
#include "adhesion/coupling.hpp"
#include "adhesion/experiments.hpp"
#include "adhesion/meanfield.hpp"
#include "adhesion/transport.hpp"

using namespace adhesion;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& label, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << label << " ("
            << detail << ")\n";
  std::cout.flush();
  if (!pass) ++g_failures;
}

double binomial_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

class Lcg {
 public:
  explicit Lcg(std::uint64_t s) : state_(s ? s : 1) {}
  double uniform() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int pick(int n) { return static_cast<int>(uniform() * n) % n; }

 private:
  std::uint64_t state_;
};

// the weak-interaction benchmark model shared by criteria 3 and 4
ExperimentConfig weak_model() {
  ExperimentConfig cfg;
  cfg.d = 1;
  cfg.diff = DiffusionSpec{1.0, 1.0};
  cfg.rates = FlipRates{1.0, 1.0};
  cfg.potential.d = 1;
  cfg.potential.modes.push_back({BasisIndex{1}, 1.0, 1.0});
  cfg.potential.eta_scale = 0.1;  // certified eta ~ 1.97, inside both gates
  cfg.spectral_K = 32;
  cfg.seed = 20240817;
  return cfg;
}

// --- criterion 1: closed-form spin law vs Monte Carlo ---------------------
void criterion_1() {
  const FlipRates rates{1.3, 0.7};
  const SpinLaw start = SpinLaw::delta(+1);
  const int n = 100000;
  bool pass = true;
  std::ostringstream detail;
  for (double t : {0.25, 1.0, 4.0}) {
    int plus = 0;
    for (int i = 0; i < n; ++i) {
      CounterRng rng(811, 0, static_cast<std::uint32_t>(i), RngChannel::kSpin);
      plus += sample_flips(+1, rates, t, rng).size() % 2 == 0;
    }
    const double expected = evolve_law(start, rates, t).p_plus;
    const double err = std::abs(static_cast<double>(plus) / n - expected);
    const double lim = 3.0 * binomial_se(expected, n);
    detail << "t=" << t << " err=" << format_double(err) << " lim=" << format_double(lim)
           << "; ";
    pass = pass && err < lim;
  }
  report(1, "spin-law exactness over 1e5 streams", pass, detail.str());
}

// --- criterion 2: exact disagreement decay along the optimal coupling -----
void criterion_2() {
  const FlipRates rates{1.0, 2.0};
  const SpinLaw la = SpinLaw::from_p_plus(0.95);
  const SpinLaw lb = SpinLaw::from_p_plus(0.25);
  const int runs = 200;
  const int n = 1000;
  const double t_final = 0.6;
  const int windows = 12;

  long long disagree = 0;
  for (int r = 0; r < runs; ++r) {
    for (int i = 0; i < n; ++i) {
      CounterRng init(5000, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i),
                      RngChannel::kInit);
      CounterRng ry(5000, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i),
                    RngChannel::kSpin);
      CounterRng rp(5000, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i),
                    RngChannel::kCouplingUniform);
      const int y0 = init.uniform() <= la.p_plus ? +1 : -1;
      SpinPairState pair{y0, couple_spins(y0, la, lb, rp), false};
      std::vector<SpinSegment> sy, sb;
      for (int w = 0; w < windows; ++w) {
        sy.clear();
        sb.clear();
        advance_spin_pair(pair, rates, w * t_final / windows, (w + 1) * t_final / windows,
                          ry, rp, sy, sb);
      }
      disagree += pair.y != pair.ybar;
    }
  }
  const double frac = static_cast<double>(disagree) / (static_cast<double>(runs) * n);
  const double expected = std::abs(la.p_plus - lb.p_plus) * std::exp(-rates.total() * t_final);
  const double lim = 3.0 * binomial_se(expected, static_cast<double>(runs) * n);
  report(2, "spin disagreement decay e^{-(a1+a2)t}", std::abs(frac - expected) < lim,
         "measured=" + format_double(frac) + " expected=" + format_double(expected) +
             " lim=" + format_double(lim));
}

// --- criterion 3: empirical-measure convergence ladder + plateau ----------
void criterion_3() {
  ExperimentConfig cfg = weak_model();
  cfg.n_particles = 0;  // ladder drives the sizes
  cfg.dt = 0.0;         // stability default (5e-4 here)
  cfg.horizon = 5.0;
  cfg.repeats = 8;
  cfg.workers = 0;
  cfg.n_ladder = {64, 128, 256, 512, 1024, 2048};
  cfg.plateau_times = {5, 10, 20, 40};
  cfg.plateau_n = 512;
  cfg.n_particles = 64;

  const RunArtifacts art = run_poc_scan(cfg);
  double slope = 0.0;
  for (const Table& t : art.tables)
    if (t.name == "poc_slope") slope = std::stod(t.rows[0][1]);
  bool plateau_ok = true;
  double w1_first = 0.0, w1_last = 0.0;
  for (const Table& t : art.tables)
    if (t.name == "poc_plateau") {
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        plateau_ok = plateau_ok && std::stoi(t.rows[i][3]) == 1;
        if (i == 0) w1_first = std::stod(t.rows[i][1]);
        if (i + 1 == t.rows.size()) w1_last = std::stod(t.rows[i][1]);
      }
    }
  const bool slope_ok = slope > -0.65 && slope < -0.35;
  report(3, "W1 ladder slope in [-0.65,-0.35] and uniform-in-time plateau",
         slope_ok && plateau_ok,
         "slope=" + format_double(slope) + " plateau W1 " + format_double(w1_first) + " -> " +
             format_double(w1_last));
}

// --- criterion 4: mean-field contraction ----------------------------------
void criterion_4() {
  ExperimentConfig cfg = weak_model();
  cfg.horizon = 6.0;
  cfg.dt = 5e-4;
  cfg.contract_p_plus_a = 0.85;
  cfg.contract_p_plus_b = -1.0;
  cfg.contract_perturb_a = {1, 0.12, -0.04};
  cfg.contract_perturb_b = {};

  const RunArtifacts art = run_contraction(cfg);
  double rate_x = 0.0, rate_y = 0.0;
  int monotone = 0;
  for (const Table& t : art.tables)
    if (t.name == "contract_summary") {
      rate_x = std::stod(t.rows[0][3]);
      rate_y = std::stod(t.rows[0][5]);
      monotone = std::stoi(t.rows[0][6]);
    }
  const double y_err = std::abs(rate_y - cfg.rates.total()) / cfg.rates.total();
  report(4, "contraction: monotone decay, positive tail rate, exact spin channel",
         monotone == 1 && rate_x > 0.0 && y_err < 0.01,
         "rate_x=" + format_double(rate_x) + " rate_y=" + format_double(rate_y) +
             " y_rel_err=" + format_double(y_err));
}

// --- criterion 5: homogeneous state pinned by the spectral solver ---------
void criterion_5() {
  const FlipRates rates{1.0, 1.0};
  const DiffusionSpec diff{1.0, 1.0};
  PotentialSpec pot;
  pot.d = 1;
  pot.modes.push_back({BasisIndex{1}, 1.0, 1.0});  // eta_star = 1 at unit scale
  bool pass = true;
  std::ostringstream detail;
  for (double eta : {0.0, 0.5, 2.0}) {
    PotentialSpec swept = pot;
    swept.eta_scale = eta;
    PdeStepper stepper(1, 16, swept, diff, rates);
    SpectralField f = SpectralField::homogeneous(1, 16, rates);
    const double u0 = f.u[0], v0 = f.v[0];
    for (int s = 0; s < 10000; ++s) f = stepper.step(f, 1e-3);
    double worst = std::max(std::abs(f.u[0] - u0), std::abs(f.v[0] - v0));
    for (std::size_t i = 1; i < f.u.size(); ++i)
      worst = std::max({worst, std::abs(f.u[i]), std::abs(f.v[i])});
    detail << "eta=" << format_double(eta) << " drift=" << format_double(worst) << "; ";
    pass = pass && worst < 1e-12;
  }
  report(5, "homogeneous equilibrium fixed to 1e-12 over 1e4 steps", pass, detail.str());
}

// --- criterion 6: threshold algebra ----------------------------------------
void criterion_6() {
  Lcg gen(999);
  bool det_ok = true, special_ok = true, equal_ok = true;
  double worst_det = 0.0, worst_special = 0.0, worst_equal = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PotentialSpec spec;
    spec.d = 1;
    spec.modes.push_back({BasisIndex{1}, gen.uniform(-1.0, 2.0), gen.uniform(-1.0, 2.0)});
    spec.modes.push_back({BasisIndex{2}, gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0)});
    spec.modes.push_back({BasisIndex{5}, gen.uniform(-0.5, 0.5), gen.uniform(-0.5, 0.5)});
    const DiffusionSpec diff{gen.uniform(0.5, 1.8), gen.uniform(0.5, 1.8)};
    const FlipRates rates{gen.uniform(0.2, 3.0), gen.uniform(0.2, 3.0)};

    for (int kk = 1; kk <= 16; ++kk) {
      const BasisIndex k{kk};
      const double eta = eta_k(k, spec, diff, rates);
      if (!std::isfinite(eta)) continue;
      const double det = std::abs(symbol_M(k, eta, spec, diff, rates).det());
      worst_det = std::max(worst_det, det);
      det_ok = det_ok && det < 1e-10;
    }

    // symmetric special case
    {
      const DiffusionSpec sdiff{diff.sigma_plus, diff.sigma_plus};
      const FlipRates srates{rates.alpha_plus, rates.alpha_plus};
      const ModeData md = mode_data(BasisIndex{1}, spec, sdiff, srates);
      if (std::abs(md.u_hat + md.v_hat) > 1e-9) {
        const double general = eta_k(BasisIndex{1}, spec, sdiff, srates);
        const double simple = sdiff.sigma_plus * sdiff.sigma_plus / (md.u_hat + md.v_hat);
        const double err = std::abs(general - simple) / std::max(1.0, std::abs(simple));
        worst_special = std::max(worst_special, err);
        special_ok = special_ok && err < 1e-12;
      }
    }
    // one-sided special case
    {
      const FlipRates orates{rates.alpha_plus, 0.0};
      const ModeData md = mode_data(BasisIndex{2}, spec, diff, orates);
      if (std::abs(md.v_hat) > 1e-9) {
        const double general = eta_k(BasisIndex{2}, spec, diff, orates);
        const double simple = diff.sigma_minus * diff.sigma_minus / (2.0 * md.v_hat);
        const double err = std::abs(general - simple) / std::max(1.0, std::abs(simple));
        worst_special = std::max(worst_special, err);
        special_ok = special_ok && err < 1e-12;
      }
    }
    // equal-diffusivity identity
    {
      const DiffusionSpec ediff{diff.sigma_plus, diff.sigma_plus};
      const ModeData md = mode_data(BasisIndex{1}, spec, ediff, rates);
      const double denom = rates.alpha_plus * md.v_hat + rates.alpha_minus * md.u_hat;
      if (std::abs(denom) > 1e-9) {
        const double general = eta_k(BasisIndex{1}, spec, ediff, rates);
        const double identity =
            rates.total() * 0.5 * ediff.sigma_plus * ediff.sigma_plus / denom;
        const double err = std::abs(general - identity) / std::max(1.0, std::abs(identity));
        worst_equal = std::max(worst_equal, err);
        equal_ok = equal_ok && err < 1e-12;
      }
    }
  }
  report(6, "threshold algebra: det M(k, eta_k) = 0 and the closed-form reductions",
         det_ok && special_ok && equal_ok,
         "worst_det=" + format_double(worst_det) + " worst_special=" +
             format_double(worst_special) + " worst_equal_diff=" + format_double(worst_equal));
}

// --- criterion 7: bifurcation onset ----------------------------------------
void criterion_7() {
  ExperimentConfig cfg = weak_model();
  cfg.potential.eta_scale = 1.0;
  cfg.spectral_K = 16;
  cfg.sweep_lo = 0.5;
  cfg.sweep_hi = 1.5;
  cfg.sweep_steps = 11;
  cfg.pde_onset_horizon = 40.0;
  cfg.crossval_horizon = 80.0;

  const RunArtifacts art = run_bifurcation_sweep(cfg);
  double eta_star = 0.0, onset_pde = 0.0, onset_newton = 0.0, crossval = 1.0;
  for (const Table& t : art.tables)
    if (t.name == "bif_summary") {
      eta_star = std::stod(t.rows[0][0]);
      onset_pde = std::stod(t.rows[0][2]);
      onset_newton = std::stod(t.rows[0][3]);
      crossval = std::stod(t.rows[0][6]);
    }
  double sub_amplitude = 0.0, sub_pde_amplitude = 0.0;
  for (const Table& t : art.tables) {
    if (t.name == "bif_branch") sub_amplitude = std::stod(t.rows[0][1]);
    if (t.name == "bif_pde") sub_pde_amplitude = std::stod(t.rows[0][2]);
  }
  // the benchmark potential U = V = cos has eta_star = sigma^2/(uhat+vhat) = 1
  const bool star_ok = std::abs(eta_star - 1.0) < 1e-10;
  const bool onset_ok = std::abs(onset_pde - eta_star) < 0.05 * eta_star &&
                        std::abs(onset_newton - eta_star) < 0.05 * eta_star;
  const bool sub_ok = sub_amplitude < 1e-6 && sub_pde_amplitude < 1e-6;
  const bool cross_ok = crossval < 1e-3;
  report(7, "bifurcation onset within 5%, subcritical collapse, branch/PDE agreement",
         star_ok && onset_ok && sub_ok && cross_ok,
         "eta_star=" + format_double(eta_star) + " onset_pde=" + format_double(onset_pde) +
             " onset_newton=" + format_double(onset_newton) +
             " crossval=" + format_double(crossval));
}

// --- criterion 8: transport oracles ----------------------------------------
void criterion_8() {
  Lcg gen(2025);
  bool brute_ok = true, circle_ok = true;
  double worst_brute = 0.0, worst_circle = 0.0;

  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + gen.pick(5);
    const int d = 1 + gen.pick(2);
    EmpiricalMeasure mu, nu;
    mu.d = nu.d = d;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        mu.pos.push_back(gen.uniform());
        nu.pos.push_back(gen.uniform());
      }
      mu.spin.push_back(gen.uniform() < 0.5 ? 1 : -1);
      nu.spin.push_back(gen.uniform() < 0.5 ? 1 : -1);
    }
    // exhaustive permutation minimum for positions and for the product cost
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best_pos = 1e300, best_prod = 1e300;
    do {
      double cp = 0.0, cq = 0.0;
      for (int i = 0; i < n; ++i) {
        const int j = perm[static_cast<std::size_t>(i)];
        const double dist = torus_distance(mu.x(i), nu.x(j));
        cp += dist;
        cq += dist + (mu.spin[static_cast<std::size_t>(i)] !=
                              nu.spin[static_cast<std::size_t>(j)]
                          ? 2.0
                          : 0.0);
      }
      best_pos = std::min(best_pos, cp / n);
      best_prod = std::min(best_prod, cq / n);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const double ea = std::abs(w1_assignment(mu, nu) - best_pos);
    const double ep = std::abs(w1_product(mu, nu) - best_prod);
    double ec = 0.0;
    if (d == 1) ec = std::abs(w1_circle_uniform(mu.pos, nu.pos) - best_pos);
    worst_brute = std::max({worst_brute, ea, ep, ec});
    brute_ok = brute_ok && ea < 1e-10 && ep < 1e-10 && ec < 1e-10;
  }

  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + gen.pick(63);
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(gen.uniform());
      b.push_back(gen.uniform());
    }
    const double err = std::abs(w1_circle_uniform(a, b) - w1_assignment_points(1, a, b));
    worst_circle = std::max(worst_circle, err);
    circle_ok = circle_ok && err < 1e-10;
  }
  report(8, "transport solvers agree with enumeration and with each other",
         brute_ok && circle_ok,
         "worst_vs_bruteforce=" + format_double(worst_brute) +
             " worst_circle_vs_assignment=" + format_double(worst_circle));
}

// --- criterion 9: conservation and byte-level determinism ------------------
void criterion_9() {
  // mass along an interacting PDE run
  const FlipRates rates{1.0, 1.0};
  const DiffusionSpec diff{1.0, 0.8};
  PotentialSpec pot;
  pot.d = 1;
  pot.modes.push_back({BasisIndex{1}, 1.0, 1.0});
  pot.eta_scale = 0.4;
  SpectralField f = SpectralField::homogeneous(1, 16, rates);
  f.u[1] = 0.1;
  f.v[2] = -0.03;
  const FieldTrajectory traj = solve(f, pot, diff, rates, 3.0, 1e-3, 100);
  const bool mass_ok = traj.max_mass_drift < 1e-10;

  // byte-identical emission across worker counts 1 and 4
  ExperimentConfig cfg = weak_model();
  cfg.dt = 2e-3;
  cfg.horizon = 0.3;
  cfg.repeats = 4;
  cfg.n_ladder = {24, 48};
  cfg.plateau_times = {0.15, 0.3};
  cfg.plateau_n = 24;
  cfg.n_particles = 24;
  cfg.spectral_K = 8;

  auto emit_with_workers = [&](int workers, const std::string& dir) {
    cfg.workers = workers;
    std::filesystem::remove_all(dir);
    emit(run_poc_scan(cfg), dir);
  };
  emit_with_workers(1, "acc9_w1");
  emit_with_workers(4, "acc9_w4");
  bool bytes_ok = true;
  for (const std::string name :
       {"poc_ladder.csv", "poc_slope.csv", "poc_plateau.csv", "report.txt"}) {
    std::ifstream a("acc9_w1/" + name, std::ios::binary);
    std::ifstream b("acc9_w4/" + name, std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    bytes_ok = bytes_ok && a.good() == b.good() && sa.str() == sb.str() && !sa.str().empty();
  }
  std::filesystem::remove_all("acc9_w1");
  std::filesystem::remove_all("acc9_w4");
  report(9, "mass conservation under 1e-10 and worker-count determinism",
         mass_ok && bytes_ok,
         "mass_drift=" + format_double(traj.max_mass_drift) +
             " byte_identical=" + (bytes_ok ? std::string("yes") : std::string("no")));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  auto want = [&](int c) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), c) != wanted.end();
  };

  const auto t0 = std::chrono::steady_clock::now();
  if (want(1)) criterion_1();
  if (want(2)) criterion_2();
  if (want(3)) criterion_3();
  if (want(4)) criterion_4();
  if (want(5)) criterion_5();
  if (want(6)) criterion_6();
  if (want(7)) criterion_7();
  if (want(8)) criterion_8();
  if (want(9)) criterion_9();
  const auto t1 = std::chrono::steady_clock::now();
  std::cout << "acceptance finished with " << g_failures << " failure(s) in "
            << std::chrono::duration_cast<std::chrono::seconds>(t1 - t0).count() << " s\n";
  return g_failures;
}

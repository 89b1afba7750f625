#pragma once

// Experiment configuration: sectioned key=value text files.
//
//   [model]       d, sigma_plus, sigma_minus, alpha_plus, alpha_minus
//   [potential]   eta_scale, repeated `mode = k[,k2] : u_coeff : v_coeff`
//   [numerics]    N, dt, K, grid_n, horizon, snapshots, delta, a, tolerances
//   [run]         seed, repeats, workers
//   [experiment]  name plus experiment-specific keys
//
// `auto` (or omission) selects the documented defaults; the worker count may
// be overridden by the ADHESION_WORKERS environment variable only.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adhesion/particles.hpp"
#include "adhesion/potential.hpp"
#include "adhesion/spin.hpp"

namespace adhesion {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class RawConfig {
 public:
  static RawConfig parse(std::istream& in);
  static RawConfig parse_file(const std::string& path);
  static RawConfig parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;

  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_list_or(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;

 private:
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections_;
};

enum class InitKind { kUniform, kLattice, kFile };

double default_coupling_a(int n);
double default_coupling_delta(int n);

struct ExperimentConfig {
  // model
  int d = 1;
  DiffusionSpec diff;
  FlipRates rates;
  PotentialSpec potential;

  // numerics
  int n_particles = 256;
  double dt = 0.0;  // 0: default_dt_max rule
  int spectral_K = 32;
  int grid_n = 0;
  double horizon = 1.0;
  std::vector<double> snapshots;
  double coupling_delta = 0.0;  // 0: N^{-1/2}
  double coupling_a = 0.0;      // 0: N^{-5}

  // initial conditions
  InitKind init = InitKind::kUniform;
  std::string init_file;
  SpinLaw spin_law0{1.0, 0.0};
  SpinLaw spin_law0_bar{1.0, 0.0};  // copies; defaults to spin_law0
  bool matched_laws = true;

  // run
  std::uint64_t seed = 1;
  int repeats = 8;
  int workers = 0;  // 0: hardware concurrency (capped)
  bool allow_exploratory = false;

  // experiment
  std::string experiment = "";
  std::vector<double> n_ladder = {64, 128, 256, 512, 1024, 2048};
  std::vector<double> plateau_times = {5, 10, 20, 40};
  int plateau_n = 512;
  double sweep_lo = 0.5, sweep_hi = 1.5;  // in units of eta_star
  int sweep_steps = 21;
  double branch_seed_eps = 1e-2;
  double pde_onset_horizon = 40.0;
  double crossval_horizon = 80.0;

  // contraction initial data (mode-0 split and one perturbation mode per side)
  double contract_p_plus_a = 0.7;
  double contract_p_plus_b = -1.0;  // <0: stationary split
  std::vector<double> contract_perturb_a = {1, 0.2, 0.0};  // k, u-amp, v-amp
  std::vector<double> contract_perturb_b = {};

  double resolved_dt() const;
  double resolved_delta() const { return coupling_delta > 0 ? coupling_delta : default_coupling_delta(n_particles); }
  double resolved_a() const { return coupling_a > 0 ? coupling_a : default_coupling_a(n_particles); }
  int resolved_workers() const;

  void validate() const;
  static ExperimentConfig from_raw(const RawConfig& raw);
  static ExperimentConfig from_file(const std::string& path);
};

}  // namespace adhesion

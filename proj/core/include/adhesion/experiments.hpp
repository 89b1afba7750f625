#pragma once

// Theorem-level experiments: propagation-of-chaos scaling, mean-field
// contraction, and the bifurcation sweep, plus result emission. Every
// experiment that relies on a smallness condition computes the associated
// rate bound and refuses (or labels the run exploratory) when it fails.

#include <functional>
#include <string>
#include <vector>

#include "adhesion/config.hpp"
#include "adhesion/csv.hpp"

namespace adhesion {

struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Decay-rate constants of the weak-interaction theorems, evaluated at the
// certified eta of the configured potential:
//   c0     = (2 pi / d) (sigma_min^2 pi - eta sqrt(d))
//   c_star = 2 sigma_min^2 pi^2 / d - (3 pi / 2) eta
struct RateBounds {
  double eta = 0.0;
  double c0 = 0.0;
  double c_star = 0.0;
  double mixing = 0.0;  // alpha_plus + alpha_minus
  double effective_poc() const { return c0 < mixing ? c0 : mixing; }
  double effective_contraction() const { return c_star < mixing ? c_star : mixing; }

  static RateBounds from(double eta, const DiffusionSpec& diff, const FlipRates& rates, int d);
};

struct RunArtifacts {
  std::vector<Table> tables;
  std::string report;
};

// N-ladder of coupled runs with matched (or configured) initial spin laws:
// assignment W1 between the particle ensemble and the coupled mean-field
// sample at the snapshot times, the coupling upper bound, the log-log slope
// over the ladder at the final time, and a fixed-N plateau scan.
RunArtifacts run_poc_scan(const ExperimentConfig& cfg);

// Two PDE solutions: W1 decay trace (x marginal by gridded transport, y
// marginal in closed form), tail-rate fits, and the guaranteed floor
// min{c_star, alpha_plus + alpha_minus} / 7.
RunArtifacts run_contraction(const ExperimentConfig& cfg);

// Threshold scan, Newton branch over the eta sweep, PDE-measured onset of
// nontrivial stationary amplitude, and the branch/PDE cross-validation.
RunArtifacts run_bifurcation_sweep(const ExperimentConfig& cfg);

// Threshold table only.
RunArtifacts run_thresholds(const ExperimentConfig& cfg);

// Standalone particle / PDE / coupled drivers behind the CLI.
RunArtifacts run_simulate(const ExperimentConfig& cfg, const std::string& out_dir);
RunArtifacts run_pde(const ExperimentConfig& cfg, const std::string& out_dir);
RunArtifacts run_couple(const ExperimentConfig& cfg, const std::string& out_dir);

// Writes tables as <dir>/<name>.csv ("csv"), the report as
// <dir>/report.txt ("report"), or both ("all"). Deterministic bytes.
void emit(const RunArtifacts& results, const std::string& dir, const std::string& format = "all");

// Deterministic parallel map over run indices; results must be written to
// per-run slots. Worker count <= 1 runs inline.
void parallel_runs(int n_runs, int workers, const std::function<void(int)>& body);

}  // namespace adhesion

#pragma once

// Macroscopic limit on T^d (d in {1,2}): a pseudospectral solver for the
// two-species drift-diffusion-exchange system in the coordinate-wise even
// cosine subspace, and a sampler of independent mean-field copies driven by
// the solved density.
//
// Time stepping is exponential (ETD1): the per-mode 2x2 linear part
// (diffusion + exchange) is advanced by its closed-form matrix exponential,
// the nonlocal transport term is evaluated pseudospectrally on an alias-free
// grid and advanced explicitly. Fixed points of the scheme solve the
// truncated stationary system exactly, and the step is exact when the
// interaction vanishes.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adhesion/particles.hpp"
#include "adhesion/potential.hpp"
#include "adhesion/spin.hpp"
#include "adhesion/torus.hpp"

namespace adhesion {

// Coefficients of (u, v) in the orthonormal even basis {w_k}, |k|_inf <= K,
// lexicographic mode order; mass(u) = u[0].
struct SpectralField {
  int d = 1;
  int K = 0;
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> v;

  static SpectralField zero(int d, int K);
  // (u_c, v_c) = (alpha_minus, alpha_plus) / (alpha_plus + alpha_minus)
  static SpectralField homogeneous(int d, int K, const FlipRates& rates);

  int mode_count() const { return static_cast<int>(u.size()); }
  double mass() const { return u[0] + v[0]; }
  double mass_u() const { return u[0]; }
  double mass_v() const { return v[0]; }
  SpinLaw type_marginal() const { return SpinLaw{u[0], v[0]}; }
  void validate() const;
};

std::vector<BasisIndex> field_modes(int d, int K);
int mode_index(int d, int K, const BasisIndex& k);

// Point evaluation u(x), v(x) of the truncated series.
double eval_u(const SpectralField& f, const Vec& x);
double eval_v(const SpectralField& f, const Vec& x);

struct PdeOptions {
  int grid_n = 0;              // 0: auto (alias-free for quadratic terms)
  bool exchange_enabled = true;  // test hook; disables the exchange operator
  double negative_density_floor = -1e-6;
};

struct StepInfo {
  double min_density = 0.0;
  bool cfl_warning = false;
};

namespace detail {
struct PdeEngine;
}

class PdeStepper {
 public:
  PdeStepper(int d, int K, PotentialSpec spec, DiffusionSpec diff, FlipRates rates,
             PdeOptions opts = {});
  ~PdeStepper();
  PdeStepper(PdeStepper&&) noexcept;
  PdeStepper& operator=(PdeStepper&&) noexcept;

  SpectralField step(const SpectralField& f, double dt);
  const StepInfo& last_info() const;
  int grid_n() const;

 private:
  std::unique_ptr<detail::PdeEngine> impl_;
};

// Basis coefficients of the transport terms (-div(u b), -div(v b)) with
// b = F ** rho at the interaction strength spec.eta_scale; the same
// projection the stepper advances, exposed for the stationary analysis.
struct TransportCoeffs {
  std::vector<double> u;
  std::vector<double> v;
};
TransportCoeffs transport_projection(const SpectralField& f, const PotentialSpec& spec,
                                     const DiffusionSpec& diff, const FlipRates& rates,
                                     PdeOptions opts = {});

SpectralField pde_step(const SpectralField& f, const PotentialSpec& spec,
                       const DiffusionSpec& diff, const FlipRates& rates, double dt,
                       PdeOptions opts = {});

// Uniform-grid trajectory of a PDE solve; snapshots every store_every steps
// (the final time is always stored).
struct FieldTrajectory {
  double t0 = 0.0;
  double dt_store = 0.0;
  std::vector<SpectralField> snaps;
  double min_density = 0.0;
  double max_mass_drift = 0.0;
  bool cfl_warning = false;

  double t_end() const;
  // Snapshot at the grid point floor((t - t0)/dt_store); throws when the
  // requested window is not covered.
  const SpectralField& at_time(double t, double tol = 1e-9) const;
};

FieldTrajectory solve(const SpectralField& field0, const PotentialSpec& spec,
                      const DiffusionSpec& diff, const FlipRates& rates, double horizon,
                      double dt, int store_every = 1, PdeOptions opts = {});

// One mean-field copy sampled along a solved trajectory (Euler-Maruyama with
// the spectral drift, exact spin events). sampler_dt must be an integer
// multiple of the trajectory grid.
struct CopyPath {
  std::vector<double> times;
  std::vector<Vec> positions;
  std::vector<int> spins;
};

CopyPath sample_copy(const FieldTrajectory& traj, const PotentialSpec& spec,
                     const DiffusionSpec& diff, const FlipRates& rates, double sampler_dt,
                     int copy_id, SimRng& rng);

// One exact draw (position, spin) from the density the field represents:
// spin from the type marginal, position by inverse-CDF from the conditional
// cosine series (per-dimension conditionals in d=2).
std::pair<Vec, int> sample_field_point(const SpectralField& f, CounterRng& rng);

// Stationary state for the interaction strength spec.eta_scale: damped
// Newton on the spectral fixed-point map, initialized from the homogeneous
// state unless a seed is supplied. Residual is measured on the stationary
// system's right-hand side. Defined with the bifurcation machinery.
SpectralField stationary_fixed_point(const PotentialSpec& spec, const DiffusionSpec& diff,
                                     const FlipRates& rates, int K, double tol,
                                     const SpectralField* seed = nullptr,
                                     int max_iter = 60);

// Snapshot format: "field d=<d> K=<K> t=<t>" then one line per mode
// "<k-tuple> <u> <v>"; synthesis export is a CSV (x grid, u, v).
void save_field(const SpectralField& f, std::ostream& out);
void save_field_file(const SpectralField& f, const std::string& path);
SpectralField load_field(std::istream& in);
SpectralField load_field_file(const std::string& path);
void export_field_grid_csv(const SpectralField& f, int grid_n, std::ostream& out);

}  // namespace adhesion

#pragma once

// Stationary-state analysis: per-mode multiplier data, the linearized 2x2
// symbol M(k, eta), critical thresholds eta_k with the simplicity /
// positivity / self-adjointness conditions, the transversality quantity Q,
// the nonlinear fixed-point map Phi on zero-mean even perturbations, and
// Newton continuation of nontrivial branches.
//
// The threshold and symbol formulas consume the convolution multiplier
// coefficients u_hat(k) = raw / 2^{#nonzero k_i} (= <U, w_k> / N_k), which
// is the scaling under which the linear instability of the evolution
// equations occurs exactly at eta_k. The orthonormal-basis coefficients are
// carried alongside for reporting.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adhesion/meanfield.hpp"
#include "adhesion/particles.hpp"
#include "adhesion/potential.hpp"
#include "adhesion/spin.hpp"
#include "adhesion/torus.hpp"

namespace adhesion {

struct NewtonFailure : std::runtime_error {
  NewtonFailure(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

struct ModeData {
  BasisIndex k;
  double d_plus = 0.0;   // D_1(k)  = (sigma(1)^2/2) |2 pi k|^2 + alpha_plus
  double d_minus = 0.0;  // D_-1(k) = (sigma(-1)^2/2) |2 pi k|^2 + alpha_minus
  double u_tilde = 0.0;  // <U, w_k>
  double v_tilde = 0.0;  // <V, w_k>
  double u_hat = 0.0;    // convolution multiplier of U at k
  double v_hat = 0.0;    // convolution multiplier of V at k
};

ModeData mode_data(const BasisIndex& k, const PotentialSpec& spec,
                   const DiffusionSpec& diff, const FlipRates& rates);

// Critical interaction strength of mode k,
//   eta_k = (a1+a2)(D1 D-1 - a1 a2) / (|2 pi k|^2 [a1 vhat (D1+a2) + a2 uhat (D-1+a1)]).
// Returns the signed formula value; +-inf when the bracket vanishes. A
// non-positive result means the mode carries no threshold.
double eta_k(const BasisIndex& k, const PotentialSpec& spec, const DiffusionSpec& diff,
             const FlipRates& rates);

// Linearization symbol in mode k. det M(k, eta_k) = 0.
struct Matrix2 {
  double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;
  double det() const { return m11 * m22 - m12 * m21; }
};

Matrix2 symbol_M(const BasisIndex& k, double eta, const PotentialSpec& spec,
                 const DiffusionSpec& diff, const FlipRates& rates);

struct ThresholdRow {
  ModeData mode;
  double eta = 0.0;
  bool positive = false;  // finite and > 0
};

struct ThresholdReport {
  std::vector<ThresholdRow> rows;       // scan order, |k|_inf <= K, k != 0
  std::optional<int> k_star_index;      // into rows; empty when no threshold
  double eta_star = 0.0;
  bool simple = false;                  // condition (i)
  bool positive = false;                // condition (ii)
  bool self_adjoint = false;            // condition (iii)
  std::vector<int> tied_indices;        // modes attaining eta_star when not simple
  double transversality_q = 0.0;        // Q from the unit null vector
  bool q_near_zero = false;             // |Q| < 1e-10: bifurcation not asserted
  double null_vector[2] = {0.0, 0.0};

  const BasisIndex* k_star() const {
    return k_star_index ? &rows[static_cast<std::size_t>(*k_star_index)].mode.k : nullptr;
  }
};

ThresholdReport threshold_report(const PotentialSpec& spec, const DiffusionSpec& diff,
                                 const FlipRates& rates, int K);

void write_threshold_report(const ThresholdReport& report, std::ostream& out);

// Zero-mean even perturbation (m, n) = (u - u_c, v - v_c); entries aligned
// with field_modes(d, K), the zero-mode entries are identically 0.
struct PerturbationField {
  int d = 1;
  int K = 0;
  std::vector<double> m;  // <m, w_k>
  std::vector<double> n;

  static PerturbationField zero(int d, int K);
  int mode_count() const { return static_cast<int>(m.size()); }
  double norm2() const;
  // |(m,n)| coefficient pair magnitude at mode k
  double amplitude_at(const BasisIndex& k) const;
};

PerturbationField field_to_perturbation(const SpectralField& f, const FlipRates& rates);
SpectralField perturbation_to_field(const PerturbationField& r, const FlipRates& rates);

// Phi((m,n), eta): identity plus inverse-elliptic multipliers applied to the
// transport nonlinearity and the exchange cross terms; zeros of Phi are the
// stationary states at interaction strength eta. grid_n = 0 chooses the
// alias-free default (>= 4K).
PerturbationField phi_map(const PerturbationField& r, double eta, const PotentialSpec& spec,
                          const DiffusionSpec& diff, const FlipRates& rates, int grid_n = 0);

struct NewtonOptions {
  double tol = 1e-11;         // on ||Phi||_2
  int max_iter = 60;
  double fd_step = 1e-7;
  int max_backtrack = 30;
  int grid_n = 0;
};

// Damped Newton on Phi(., eta) from the given initial guess.
PerturbationField newton_solve(const PerturbationField& r0, double eta,
                               const PotentialSpec& spec, const DiffusionSpec& diff,
                               const FlipRates& rates, const NewtonOptions& opts,
                               std::vector<double>* residual_history = nullptr);

struct BranchPoint {
  double eta = 0.0;
  PerturbationField state;
  double amplitude = 0.0;  // k* coefficient magnitude
  double residual = 0.0;
  bool converged = false;
};

// Continuation over [eta_start, eta_end] in `steps` increments. Each point
// warm-starts from the previous solution; whenever the carried solution has
// collapsed, the kernel direction of M(k*, eta_*) scaled by seed_eps is used
// instead.
std::vector<BranchPoint> newton_branch(double eta_start, double eta_end, int steps,
                                       const PotentialSpec& spec, const DiffusionSpec& diff,
                                       const FlipRates& rates, int K,
                                       double seed_eps = 1e-2,
                                       const NewtonOptions& opts = {});

// Whether a nontrivial stationary zero is reachable at eta (used to bisect
// the branch onset).
bool newton_finds_nontrivial(double eta, const PotentialSpec& spec, const DiffusionSpec& diff,
                             const FlipRates& rates, int K, double seed_eps = 1e-2,
                             const NewtonOptions& opts = {});

}  // namespace adhesion

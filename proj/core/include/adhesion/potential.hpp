#pragma once

// Interaction potentials U, V as finite cosine series and the force kernel
// F(.,+1) = grad U, F(.,-1) = grad V, together with Lipschitz-constant
// estimates used to gate the weak-interaction experiments.

#include <vector>

#include "adhesion/torus.hpp"

namespace adhesion {

struct SpectralField;  // meanfield.hpp

// One cosine mode of the pair (U, V): raw coefficients of
// prod_i cos(2 pi k_i x_i). The convolution multiplier of that term is
// raw / 2^{#nonzero k_i}; the orthonormal-basis coefficient <U, w_k> is
// raw / N_k. Conversions live in mode_multiplier / mode_basis_coeff below.
struct PotentialMode {
  BasisIndex k;
  double u_coeff = 0.0;
  double v_coeff = 0.0;
};

struct PotentialSpec {
  int d = 1;
  std::vector<PotentialMode> modes;  // k != 0, |k|_inf small
  double eta_scale = 1.0;            // overall interaction strength

  void validate() const;
  int max_mode() const;  // |k|_inf over the series, 0 when empty
  PotentialSpec unit_scale() const {
    PotentialSpec s = *this;
    s.eta_scale = 1.0;
    return s;
  }
};

inline double mode_multiplier(double raw, const BasisIndex& k) {
  return raw / static_cast<double>(1 << k.nonzero_count());
}
inline double mode_basis_coeff(double raw, const BasisIndex& k) {
  return raw / k.normalization();
}

// F(r, y): gradient of the cosine series selected by the source spin,
// evaluated at a minimal displacement representative. F(0, y) = 0 exactly.
Vec force(const PotentialSpec& spec, const Vec& displacement, int y);

struct LipschitzEstimate {
  double grid_lower = 0.0;      // max |F(x,y)-F(w,y)| / f(|x-w|) over a grid
  double analytic_upper = 0.0;  // (sqrt(d)/2) * coefficient-sum Hessian bound
  double euclid_upper = 0.0;    // plain Lipschitz bound sup|D^2 U|, sup|D^2 V|
  bool certified = true;        // analytic_upper is a proved upper bound

  double eta() const { return analytic_upper; }
};

// Certified eta for hypothesis |F(x,y)-F(w,y)| <= eta f(|x-w|).
LipschitzEstimate estimate_eta(const PotentialSpec& spec, int grid_n);

// (F ** rho)(x): nonlocal drift of the mean-field equation, evaluated
// spectrally; exact for the band-limited series stored in rho.
Vec mean_field_drift(const PotentialSpec& spec, const Vec& x, const SpectralField& rho);

}  // namespace adhesion

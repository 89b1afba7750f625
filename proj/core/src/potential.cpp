#include "adhesion/potential.hpp"

#include <cmath>
#include <stdexcept>

#include "adhesion/meanfield.hpp"

namespace adhesion {

void PotentialSpec::validate() const {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("potential: bad dimension");
  if (eta_scale < 0.0) throw std::invalid_argument("potential: eta_scale must be >= 0");
  for (const auto& m : modes) {
    if (m.k.d != d) throw std::invalid_argument("potential: mode dimension mismatch");
    if (m.k.is_zero()) throw std::invalid_argument("potential: zero mode has no force");
    if (!std::isfinite(m.u_coeff) || !std::isfinite(m.v_coeff))
      throw std::invalid_argument("potential: non-finite coefficient");
  }
}

int PotentialSpec::max_mode() const {
  int m = 0;
  for (const auto& mode : modes)
    for (int i = 0; i < d; ++i)
      if (mode.k[i] > m) m = mode.k[i];
  return m;
}

namespace {

// d/dx_j of coeff * prod_i cos(2 pi k_i x_i), accumulated into out.
void add_mode_gradient(const BasisIndex& k, double coeff, const Vec& x, Vec& out) {
  if (coeff == 0.0) return;
  double cosv[kMaxDim];
  double sinv[kMaxDim];
  for (int i = 0; i < k.d; ++i) {
    const double a = 2.0 * M_PI * k[i] * x[i];
    cosv[i] = std::cos(a);
    sinv[i] = std::sin(a);
  }
  for (int j = 0; j < k.d; ++j) {
    if (k[j] == 0) continue;
    double term = -coeff * 2.0 * M_PI * k[j] * sinv[j];
    for (int i = 0; i < k.d; ++i)
      if (i != j) term *= cosv[i];
    out[j] += term;
  }
}

}  // namespace

Vec force(const PotentialSpec& spec, const Vec& displacement, int y) {
  if (displacement.d != spec.d) throw std::invalid_argument("force: dimension mismatch");
  Vec out(spec.d);
  for (const auto& m : spec.modes) {
    const double c = (y > 0 ? m.u_coeff : m.v_coeff) * spec.eta_scale;
    add_mode_gradient(m.k, c, displacement, out);
  }
  return out;
}

LipschitzEstimate estimate_eta(const PotentialSpec& spec, int grid_n) {
  spec.validate();
  if (grid_n < 16) throw std::invalid_argument("estimate_eta: grid_n must be >= 16");

  LipschitzEstimate est;
  est.certified = true;
  if (spec.modes.empty() || spec.eta_scale == 0.0) return est;

  // Hessian coefficient-sum bound: ||D^2 U|| <= sum |c_k| |2 pi k|^2, then
  // |x - w| <= (sqrt(d)/2) f(|x - w|) turns it into the f-weighted constant.
  double sum_u = 0.0, sum_v = 0.0;
  for (const auto& m : spec.modes) {
    const double lk = m.k.laplace_symbol();
    sum_u += std::abs(m.u_coeff) * lk;
    sum_v += std::abs(m.v_coeff) * lk;
  }
  est.euclid_upper = spec.eta_scale * (sum_u > sum_v ? sum_u : sum_v);
  est.analytic_upper = 0.5 * std::sqrt(static_cast<double>(spec.d)) * est.euclid_upper;

  // Grid search lower bound for |F(x,y)-F(w,y)| / f(|x-w|).
  const int d = spec.d;
  int npts = 1;
  for (int i = 0; i < d; ++i) npts *= grid_n;
  std::vector<Vec> pts(static_cast<std::size_t>(npts), Vec(d));
  for (int flat = 0; flat < npts; ++flat) {
    int rem = flat;
    for (int i = d - 1; i >= 0; --i) {
      pts[static_cast<std::size_t>(flat)][i] = static_cast<double>(rem % grid_n) / grid_n;
      rem /= grid_n;
    }
  }
  std::vector<Vec> fp(pts.size(), Vec(d)), fm(pts.size(), Vec(d));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    fp[i] = force(spec, pts[i], +1);
    fm[i] = force(spec, pts[i], -1);
  }
  double lower = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dist = torus_distance(pts[i], pts[j]);
      if (dist < 1e-12) continue;
      const double fr = comparison_f(dist, d);
      const double rp = (fp[i] - fp[j]).norm() / fr;
      const double rm = (fm[i] - fm[j]).norm() / fr;
      if (rp > lower) lower = rp;
      if (rm > lower) lower = rm;
    }
  }
  est.grid_lower = lower;
  return est;
}

Vec mean_field_drift(const PotentialSpec& spec, const Vec& x, const SpectralField& rho) {
  if (x.d != spec.d || rho.d != spec.d)
    throw std::invalid_argument("mean_field_drift: dimension mismatch");
  Vec out(spec.d);
  for (const auto& m : spec.modes) {
    // convolution multiplier acts mode-wise on the basis coefficients
    const int idx = mode_index(rho.d, rho.K, m.k);
    if (idx < 0) continue;
    const double q = mode_multiplier(m.u_coeff, m.k) * rho.u[static_cast<std::size_t>(idx)] +
                     mode_multiplier(m.v_coeff, m.k) * rho.v[static_cast<std::size_t>(idx)];
    // gradient of q * w_k = q * N_k * prod cos
    add_mode_gradient(m.k, spec.eta_scale * q * m.k.normalization(), x, out);
  }
  return out;
}

}  // namespace adhesion

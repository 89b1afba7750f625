#include "adhesion/spin.hpp"

#include <cmath>
#include <stdexcept>

namespace adhesion {

void FlipRates::validate() const {
  if (alpha_plus < 0.0 || alpha_minus < 0.0)
    throw std::invalid_argument("flip rates must be nonnegative");
  if (alpha_plus + alpha_minus <= 0.0)
    throw std::invalid_argument("flip rates must not both vanish");
}

SpinLaw SpinLaw::from_p_plus(double p) {
  SpinLaw law{p, 1.0 - p};
  law.validate();
  return law;
}

SpinLaw SpinLaw::stationary(const FlipRates& rates) {
  rates.validate();
  const double s = rates.total();
  return SpinLaw{rates.alpha_minus / s, rates.alpha_plus / s};
}

void SpinLaw::validate() const {
  if (!(p_plus >= -1e-12 && p_plus <= 1.0 + 1e-12) ||
      !(p_minus >= -1e-12 && p_minus <= 1.0 + 1e-12))
    throw std::invalid_argument("spin law probabilities outside [0,1]");
  if (std::abs(p_plus + p_minus - 1.0) > 1e-12)
    throw std::invalid_argument("spin law probabilities must sum to 1");
}

SpinLaw evolve_law(const SpinLaw& law0, const FlipRates& rates, double t) {
  if (t < 0.0) throw std::domain_error("evolve_law: negative time");
  rates.validate();
  const double s = rates.total();
  const double decay = std::exp(-s * t);
  const SpinLaw fix = SpinLaw::stationary(rates);
  return SpinLaw{decay * law0.p_plus + fix.p_plus * (1.0 - decay),
                 decay * law0.p_minus + fix.p_minus * (1.0 - decay)};
}

std::vector<double> sample_flips(int y0, const FlipRates& rates, double horizon,
                                 CounterRng& rng) {
  if (horizon < 0.0) throw std::domain_error("sample_flips: negative horizon");
  rates.validate();
  std::vector<double> times;
  int spin = y0;
  double t = 0.0;
  for (;;) {
    const double hold = rng.exponential(rates.rate_from(spin));
    t += hold;
    if (!(t <= horizon)) break;
    times.push_back(t);
    spin = -spin;
  }
  return times;
}

double spin_w1(const SpinLaw& a, const SpinLaw& b) {
  return 2.0 * std::abs(a.p_plus - b.p_plus);
}

int couple_spins(int y, const SpinLaw& law_y, const SpinLaw& law_ybar, CounterRng& rng) {
  const double v = rng.uniform();
  // conditional quantile of y's representation given the observed state
  const double u = (y > 0) ? v * law_y.p_plus : law_y.p_plus + v * (1.0 - law_y.p_plus);
  return (u <= law_ybar.p_plus) ? +1 : -1;
}

int advance_spin(int spin, const FlipRates& rates, double t0, double t1, CounterRng& rng,
                 std::vector<SpinSegment>& segments) {
  double t = t0;
  for (;;) {
    const double hold = rng.exponential(rates.rate_from(spin));
    const double flip_at = t + hold;
    if (!(flip_at < t1)) {
      segments.push_back({t, t1, spin});
      return spin;
    }
    segments.push_back({t, flip_at, spin});
    spin = -spin;
    t = flip_at;
  }
}

void advance_spin_pair(SpinPairState& pair, const FlipRates& rates, double t0, double t1,
                       CounterRng& rng_y, CounterRng& rng_pair,
                       std::vector<SpinSegment>& seg_y, std::vector<SpinSegment>& seg_ybar) {
  double t = t0;
  if (pair.y == pair.ybar) pair.glued = true;
  while (!pair.glued && t < t1) {
    // independent clocks; the first flip of either chain equalizes the states
    const double hold_y = rng_y.exponential(rates.rate_from(pair.y));
    const double hold_b = rng_pair.exponential(rates.rate_from(pair.ybar));
    const double flip_at = t + (hold_y < hold_b ? hold_y : hold_b);
    if (!(flip_at < t1)) {
      seg_y.push_back({t, t1, pair.y});
      seg_ybar.push_back({t, t1, pair.ybar});
      return;
    }
    seg_y.push_back({t, flip_at, pair.y});
    seg_ybar.push_back({t, flip_at, pair.ybar});
    if (hold_y < hold_b) {
      pair.y = -pair.y;  // lands on ybar's state
    } else {
      pair.ybar = -pair.ybar;  // lands on y's state
    }
    pair.glued = true;
    t = flip_at;
  }
  // glued: one exact path drives both
  if (t < t1) {
    const std::size_t first = seg_y.size();
    pair.y = advance_spin(pair.y, rates, t, t1, rng_y, seg_y);
    for (std::size_t i = first; i < seg_y.size(); ++i) seg_ybar.push_back(seg_y[i]);
    pair.ybar = pair.y;
  }
}

}  // namespace adhesion

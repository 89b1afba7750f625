#pragma once

// Two-state jump dynamics of the phenotype variable: closed-form marginal
// law, exact event-time simulation, and the optimal coupling on {-1,+1}
// (cost |y - ybar| = 2 * 1{y != ybar}).

#include <vector>

#include "adhesion/rng.hpp"

namespace adhesion {

// alpha_plus is the rate of +1 -> -1 flips, alpha_minus of -1 -> +1.
struct FlipRates {
  double alpha_plus = 1.0;
  double alpha_minus = 1.0;

  double total() const { return alpha_plus + alpha_minus; }
  double rate_from(int spin) const { return spin > 0 ? alpha_plus : alpha_minus; }
  void validate() const;
};

struct SpinLaw {
  double p_plus = 1.0;
  double p_minus = 0.0;

  static SpinLaw from_p_plus(double p);
  static SpinLaw delta(int spin) { return spin > 0 ? SpinLaw{1.0, 0.0} : SpinLaw{0.0, 1.0}; }
  // (alpha_minus, alpha_plus) / (alpha_plus + alpha_minus)
  static SpinLaw stationary(const FlipRates& rates);
  void validate() const;
};

// p_plus(t) = e^{-(a1+a2) t} p_plus(0) + (a2/(a1+a2)) (1 - e^{-(a1+a2) t}).
SpinLaw evolve_law(const SpinLaw& law0, const FlipRates& rates, double t);

// Exact event-time simulation from spin y0; strictly increasing flip times
// in (0, horizon]. A zero rate in the current state is absorbing.
std::vector<double> sample_flips(int y0, const FlipRates& rates, double horizon,
                                 CounterRng& rng);

// W1 between two spin laws: 2 |p_plus_a - p_plus_b|.
double spin_w1(const SpinLaw& a, const SpinLaw& b);

// Comonotone draw of ybar ~ law_ybar given y ~ law_y sharing one uniform;
// attains P(y != ybar) = |p_plus_a - p_plus_b|.
int couple_spins(int y, const SpinLaw& law_y, const SpinLaw& law_ybar, CounterRng& rng);

// Constant-spin segment of a trajectory on [t_begin, t_end).
struct SpinSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  int spin = 1;
};

// Advances a single spin over [t0, t1] with exact exponential events,
// appending the constant segments. Returns the end spin. Draw counts are
// per-window; memorylessness makes re-drawing the holding time exact.
int advance_spin(int spin, const FlipRates& rates, double t0, double t1,
                 CounterRng& rng, std::vector<SpinSegment>& segments);

// Coupled pair (Y, Ybar): while the states differ the two chains run on
// independent clocks and glue at the first flip of either (total rate
// alpha_plus + alpha_minus, which is exactly the optimal-coupling decay of
// the disagreement probability); once equal they share every flip.
struct SpinPairState {
  int y = 1;
  int ybar = 1;
  bool glued = false;
};

// Advances the pair over [t0, t1]; segments for y and ybar are appended to
// the two lists. rng_y drives Y's clock, rng_pair the candidate clock of
// Ybar while the pair disagrees.
void advance_spin_pair(SpinPairState& pair, const FlipRates& rates, double t0,
                       double t1, CounterRng& rng_y, CounterRng& rng_pair,
                       std::vector<SpinSegment>& seg_y,
                       std::vector<SpinSegment>& seg_ybar);

}  // namespace adhesion

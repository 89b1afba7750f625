#pragma once

// Synchronous construction pairing the N-particle system with N independent
// mean-field copies: reflection coupling of the positions (blended with a
// synchronous channel through a smooth partition of unity) and the optimal
// coupling of the spins.

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "adhesion/meanfield.hpp"
#include "adhesion/particles.hpp"

namespace adhesion {

// phi_r = sin(pi/2 h(|x|)), phi_s = cos(pi/2 h(|x|)) with h the quintic
// smoothstep on [delta/2, delta]; phi_r^2 + phi_s^2 = 1 identically and the
// reflected channel switches off below delta/2.
struct PartitionOfUnity {
  double delta = 0.1;

  double h(double r) const;
  double phi_r(double r) const;
  double phi_s(double r) const;
};

// v - 2 <e, v> e; e must be unit up to 1e-12.
Vec reflect(const Vec& v, const Vec& e);

struct LyapunovParams {
  double a = 1e-10;
  double delta = 0.1;
};

// Proof-matched defaults a = N^{-5}, delta = N^{-1/2}.
double default_coupling_a(int n);
double default_coupling_delta(int n);

struct CouplingState {
  ParticleEnsemble sys;  // (X, Y): interacting system
  ParticleEnsemble bar;  // (Xbar, Ybar): mean-field copies
  std::vector<SpinPairState> pairs;  // glue bookkeeping of the spin coupling
  PartitionOfUnity pou;

  int size() const { return sys.size(); }
  double time() const { return sys.t; }
  // Minimal torus representative of Xbar^i - X^i.
  Vec pair_displacement(int i) const;
  double min_pair_distance() const;
  double spin_disagreement_fraction() const;
};

// Both ensembles start from the given states; spins of the copies are drawn
// by the comonotone coupling against law_bar given the system spins
// (law_sys must be the law the system spins were drawn from).
CouplingState make_coupling(const ParticleEnsemble& sys, const SpinLaw& law_sys,
                            const SpinLaw& law_bar, double delta, SimRng& rng);
// Matched laws: copies start identical to the system, pairs glued.
CouplingState make_matched_coupling(const ParticleEnsemble& sys, double delta);

// One coupled Euler-Maruyama step with shared Gaussian channels (B, Btilde).
// D^i, e^i and the partition weights are frozen at the step start; when
// |D^i| < 1e-14 the reflected channel is replaced by the synchronous one.
// The field trajectory must cover [t, t+dt].
CouplingState coupled_step(const CouplingState& state, const PotentialSpec& spec,
                           const DiffusionSpec& diff, const FlipRates& rates,
                           const FieldTrajectory& field, double dt, SimRng& rng,
                           ForcePath path = ForcePath::kAuto);

// (1/N) sum_i f(sqrt(|D^i|^2 + a)); the argument is clamped to the torus
// diameter, which the a-regularization can exceed by at most O(a).
double lyapunov(const CouplingState& state, const LyapunovParams& params);

// Coupling-induced upper bounds on the marginal W1 distances:
// ((1/N) sum |X - Xbar|, (1/N) sum 2 * 1{Y != Ybar}).
std::pair<double, double> w1_upper_bound(const CouplingState& state);

// Diagnostic row of a coupled run.
struct CouplingDiagnostics {
  double t = 0.0;
  double lyapunov_value = 0.0;
  double x_bound = 0.0;
  double y_bound = 0.0;
  double min_pair_dist = 0.0;
  double spin_disagreement = 0.0;
};

CouplingDiagnostics coupling_diagnostics(const CouplingState& state,
                                         const LyapunovParams& params);
void write_diagnostics_csv(const std::vector<CouplingDiagnostics>& rows, std::ostream& out);

}  // namespace adhesion

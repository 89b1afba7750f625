#pragma once

// The N-particle diffusion-jump system: Euler-Maruyama positions with exact
// spin events interleaved (the diffusion coefficient is applied piecewise
// across intra-step flips), plus empirical-measure extraction and snapshot
// serialization.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "adhesion/potential.hpp"
#include "adhesion/rng.hpp"
#include "adhesion/spin.hpp"
#include "adhesion/torus.hpp"

namespace adhesion {

struct IntegratorFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiffusionSpec {
  double sigma_plus = 1.0;   // sigma(+1)
  double sigma_minus = 1.0;  // sigma(-1)

  double sigma(int spin) const { return spin > 0 ? sigma_plus : sigma_minus; }
  double sigma_min() const { return sigma_plus < sigma_minus ? sigma_plus : sigma_minus; }
  double sigma_max() const { return sigma_plus > sigma_minus ? sigma_plus : sigma_minus; }
  // |sigma(1) - sigma(-1)| / |1 - (-1)|
  double lip() const { return 0.5 * (sigma_plus > sigma_minus ? sigma_plus - sigma_minus
                                                              : sigma_minus - sigma_plus); }
  void validate() const;
};

struct ParticleEnsemble {
  int d = 1;
  double t = 0.0;
  std::vector<double> pos;  // N x d, row-major, wrapped into [0,1)
  std::vector<int> spin;    // +1 / -1

  int size() const { return static_cast<int>(spin.size()); }
  std::span<const double> x(int i) const {
    return {pos.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  void validate() const;
};

// Uniform atoms on T^d x {+-1}, weight 1/N each.
struct EmpiricalMeasure {
  int d = 1;
  std::vector<double> pos;
  std::vector<int> spin;

  int size() const { return static_cast<int>(spin.size()); }
  std::span<const double> x(int i) const {
    return {pos.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  SpinLaw type_marginal() const;
  double fraction_plus() const;
};

EmpiricalMeasure empirical(const ParticleEnsemble& ens);

// Per-particle persistent streams for one run. Channel draw counters carry
// across steps, so a trajectory is a pure function of (seed, run).
class SimRng {
 public:
  SimRng(std::uint64_t seed, std::uint32_t run, int particles);
  CounterRng& stream(int particle, RngChannel channel);
  std::uint32_t run() const { return run_; }

 private:
  std::vector<CounterRng> streams_;
  int particles_;
  std::uint32_t run_;
};

enum class ForcePath {
  kAuto,      // direct for small N, spectral otherwise
  kDirect,    // O(N^2) pairwise-tree summation, index-ascending
  kSpectral,  // exact band-limited kernel evaluation via trig moments, O(N x modes)
};

// (1/N) sum_j F(X^i - X^j, Y^j) for every i, including the vanishing j = i
// term. Both paths agree to ~1e-12 and are deterministic for any worker count.
std::vector<double> pairwise_forces(const ParticleEnsemble& ens, const PotentialSpec& spec,
                                    ForcePath path = ForcePath::kAuto);

// One Euler-Maruyama step: drift frozen at step start, diffusion coefficient
// piecewise across the particle's exact flip times inside the window.
ParticleEnsemble step(const ParticleEnsemble& ens, const PotentialSpec& spec,
                      const DiffusionSpec& diff, const FlipRates& rates, double dt,
                      SimRng& rng, ForcePath path = ForcePath::kAuto);

// dt ceiling used by the drivers: 1e-3 * min(1, 1/eta, 1/(a1+a2)).
double default_dt_max(double eta, const FlipRates& rates);

// Initial conditions.
ParticleEnsemble init_uniform(int d, int n, const SpinLaw& law, SimRng& rng);
ParticleEnsemble init_lattice(int d, int n, const SpinLaw& law, SimRng& rng);

// Snapshot format: "ensemble d=<d> N=<N> t=<t> seed=<seed>" then one line per
// particle with d coordinates and the spin, shortest round-trip decimals.
void save_ensemble(const ParticleEnsemble& ens, std::uint64_t seed, std::ostream& out);
void save_ensemble_file(const ParticleEnsemble& ens, std::uint64_t seed,
                        const std::string& path);
ParticleEnsemble load_ensemble(std::istream& in, std::uint64_t* seed_out = nullptr);
ParticleEnsemble load_ensemble_file(const std::string& path,
                                    std::uint64_t* seed_out = nullptr);

}  // namespace adhesion

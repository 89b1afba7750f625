#include "adhesion/particles.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adhesion/csv.hpp"

namespace adhesion {

void DiffusionSpec::validate() const {
  if (!(sigma_plus > 0.0) || !(sigma_minus > 0.0))
    throw std::invalid_argument("diffusion coefficients must be positive");
}

void ParticleEnsemble::validate() const {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("ensemble: bad dimension");
  if (spin.empty()) throw std::invalid_argument("ensemble: N must be >= 1");
  if (pos.size() != spin.size() * static_cast<std::size_t>(d))
    throw std::invalid_argument("ensemble: position/spin size mismatch");
  for (double x : pos)
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("ensemble: position not wrapped");
  for (int s : spin)
    if (s != 1 && s != -1) throw std::invalid_argument("ensemble: spin must be +-1");
}

EmpiricalMeasure empirical(const ParticleEnsemble& ens) {
  return EmpiricalMeasure{ens.d, ens.pos, ens.spin};
}

SpinLaw EmpiricalMeasure::type_marginal() const {
  const double p = fraction_plus();
  return SpinLaw{p, 1.0 - p};
}

double EmpiricalMeasure::fraction_plus() const {
  long long plus = 0;
  for (int s : spin) plus += (s > 0);
  return static_cast<double>(plus) / static_cast<double>(spin.size());
}

namespace {
constexpr int kChannels = 5;
int channel_slot(RngChannel c) { return static_cast<int>(c); }
}  // namespace

SimRng::SimRng(std::uint64_t seed, std::uint32_t run, int particles)
    : particles_(particles), run_(run) {
  streams_.reserve(static_cast<std::size_t>(particles) * kChannels);
  for (int p = 0; p < particles; ++p)
    for (int c = 0; c < kChannels; ++c)
      streams_.emplace_back(seed, run, static_cast<std::uint32_t>(p),
                            static_cast<RngChannel>(c));
}

CounterRng& SimRng::stream(int particle, RngChannel channel) {
  return streams_[static_cast<std::size_t>(particle) * kChannels + channel_slot(channel)];
}

namespace {

// Pairwise-tree sum of F(x_i - x_j, y_j) over j in [lo, hi), ascending leaves.
void force_tree_sum(const ParticleEnsemble& ens, const PotentialSpec& spec, int i, int lo,
                    int hi, Vec& out) {
  if (hi - lo <= 8) {
    for (int j = lo; j < hi; ++j) {
      const Vec r = torus_displacement(ens.x(i), ens.x(j));
      const Vec f = force(spec, r, ens.spin[static_cast<std::size_t>(j)]);
      for (int c = 0; c < ens.d; ++c) out[c] += f[c];
    }
    return;
  }
  const int mid = lo + (hi - lo) / 2;
  Vec left(ens.d), right(ens.d);
  force_tree_sum(ens, spec, i, lo, mid, left);
  force_tree_sum(ens, spec, i, mid, hi, right);
  for (int c = 0; c < ens.d; ++c) out[c] += left[c] + right[c];
}

std::vector<double> forces_direct(const ParticleEnsemble& ens, const PotentialSpec& spec) {
  const int n = ens.size();
  std::vector<double> out(static_cast<std::size_t>(n) * ens.d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) {
    Vec acc(ens.d);
    force_tree_sum(ens, spec, i, 0, n, acc);
    for (int c = 0; c < ens.d; ++c) out[static_cast<std::size_t>(i) * ens.d + c] = acc[c] * inv_n;
  }
  return out;
}

// Spectral path. For every potential mode k the pair sum splits into
// per-type trigonometric moments,
//   sum_j prod_i cos(2 pi k_i (x_i - w_{j,i}))
//     = sum_{S} [prod_{i in S} sin][prod_{i notin S} cos](x) * M_S
// with M_S the matching product moment of the sources; the gradient then
// costs O(modes * 2^{nz}) per target. Exact because the kernel series is
// finite; moment accumulation is serial for bit-reproducibility.
struct ModeMoments {
  // indexed by subset mask over the mode's nonzero dimensions
  std::array<double, 1 << kMaxDim> plus{};
  std::array<double, 1 << kMaxDim> minus{};
};

std::vector<double> forces_spectral(const ParticleEnsemble& ens, const PotentialSpec& spec) {
  const int n = ens.size();
  const int d = ens.d;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out(static_cast<std::size_t>(n) * d, 0.0);
  if (spec.modes.empty() || spec.eta_scale == 0.0) return out;

  const std::size_t n_modes = spec.modes.size();
  std::vector<ModeMoments> moments(n_modes);

  std::vector<double> cs(static_cast<std::size_t>(n_modes) * d), sn(cs.size());
  auto trig_at = [&](std::span<const double> x) {
    for (std::size_t m = 0; m < n_modes; ++m) {
      const BasisIndex& k = spec.modes[m].k;
      for (int i = 0; i < d; ++i) {
        const double a = 2.0 * M_PI * k[i] * x[static_cast<std::size_t>(i)];
        cs[m * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = std::cos(a);
        sn[m * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = std::sin(a);
      }
    }
  };

  for (int j = 0; j < n; ++j) {
    trig_at(ens.x(j));
    const bool is_plus = ens.spin[static_cast<std::size_t>(j)] > 0;
    for (std::size_t m = 0; m < n_modes; ++m) {
      const BasisIndex& k = spec.modes[m].k;
      const int nz = k.nonzero_count();
      for (int mask = 0; mask < (1 << nz); ++mask) {
        double prod = 1.0;
        int bit = 0;
        for (int i = 0; i < d; ++i) {
          if (k[i] == 0) continue;
          const std::size_t idx = m * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
          prod *= (mask >> bit & 1) ? sn[idx] : cs[idx];
          ++bit;
        }
        auto& slot = is_plus ? moments[m].plus : moments[m].minus;
        slot[static_cast<std::size_t>(mask)] += prod;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    trig_at(ens.x(i));
    for (std::size_t m = 0; m < n_modes; ++m) {
      const BasisIndex& k = spec.modes[m].k;
      const int nz = k.nonzero_count();
      const double cu = spec.modes[m].u_coeff * spec.eta_scale;
      const double cv = spec.modes[m].v_coeff * spec.eta_scale;
      if (cu == 0.0 && cv == 0.0) continue;
      // gradient component jdim of sum_j cos-product, then weight by type
      for (int jdim = 0; jdim < d; ++jdim) {
        if (k[jdim] == 0) continue;
        double grad_plus = 0.0, grad_minus = 0.0;
        for (int mask = 0; mask < (1 << nz); ++mask) {
          // target factor: product with the jdim factor differentiated
          double prod = 1.0;
          int bit = 0;
          for (int idim = 0; idim < d; ++idim) {
            if (k[idim] == 0) continue;
            const std::size_t idx =
                m * static_cast<std::size_t>(d) + static_cast<std::size_t>(idim);
            const bool use_sin = (mask >> bit & 1) != 0;
            double factor = use_sin ? sn[idx] : cs[idx];
            if (idim == jdim)
              factor = use_sin ? cs[idx] : -sn[idx];  // d/dx of sin / cos
            prod *= factor;
            ++bit;
          }
          prod *= 2.0 * M_PI * k[jdim];
          grad_plus += prod * moments[m].plus[static_cast<std::size_t>(mask)];
          grad_minus += prod * moments[m].minus[static_cast<std::size_t>(mask)];
        }
        out[static_cast<std::size_t>(i) * d + jdim] +=
            inv_n * (cu * grad_plus + cv * grad_minus);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> pairwise_forces(const ParticleEnsemble& ens, const PotentialSpec& spec,
                                    ForcePath path) {
  if (spec.d != ens.d) throw std::invalid_argument("pairwise_forces: dimension mismatch");
  if (path == ForcePath::kAuto)
    path = ens.size() <= 128 ? ForcePath::kDirect : ForcePath::kSpectral;
  return path == ForcePath::kDirect ? forces_direct(ens, spec) : forces_spectral(ens, spec);
}

ParticleEnsemble step(const ParticleEnsemble& ens, const PotentialSpec& spec,
                      const DiffusionSpec& diff, const FlipRates& rates, double dt,
                      SimRng& rng, ForcePath path) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  diff.validate();
  rates.validate();

  const int n = ens.size();
  const int d = ens.d;
  const std::vector<double> drift = pairwise_forces(ens, spec, path);

  ParticleEnsemble next = ens;
  std::vector<SpinSegment> segments;
  for (int i = 0; i < n; ++i) {
    segments.clear();
    CounterRng& spin_rng = rng.stream(i, RngChannel::kSpin);
    CounterRng& noise = rng.stream(i, RngChannel::kBrownian);
    next.spin[static_cast<std::size_t>(i)] =
        advance_spin(ens.spin[static_cast<std::size_t>(i)], rates, ens.t, ens.t + dt,
                     spin_rng, segments);
    for (int c = 0; c < d; ++c) {
      double x = ens.pos[static_cast<std::size_t>(i) * d + c] +
                 drift[static_cast<std::size_t>(i) * d + c] * dt;
      for (const SpinSegment& seg : segments) {
        const double len = seg.t_end - seg.t_begin;
        if (len <= 0.0) continue;
        x += diff.sigma(seg.spin) * std::sqrt(len) * noise.normal();
      }
      if (!std::isfinite(x))
        throw IntegratorFailure(
            "particle step produced a non-finite position (particle " + std::to_string(i) +
            ", t=" + format_double(ens.t) + ")");
      next.pos[static_cast<std::size_t>(i) * d + c] = wrap_unit(x);
    }
  }
  next.t = ens.t + dt;
  return next;
}

double default_dt_max(double eta, const FlipRates& rates) {
  double m = 1.0;
  if (eta > 0.0 && 1.0 / eta < m) m = 1.0 / eta;
  const double s = rates.total();
  if (s > 0.0 && 1.0 / s < m) m = 1.0 / s;
  return 1e-3 * m;
}

ParticleEnsemble init_uniform(int d, int n, const SpinLaw& law, SimRng& rng) {
  ParticleEnsemble ens;
  ens.d = d;
  ens.pos.resize(static_cast<std::size_t>(n) * d);
  ens.spin.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    CounterRng& r = rng.stream(i, RngChannel::kInit);
    for (int c = 0; c < d; ++c)
      ens.pos[static_cast<std::size_t>(i) * d + c] = wrap_unit(r.uniform());
    ens.spin[static_cast<std::size_t>(i)] = (r.uniform() <= law.p_plus) ? +1 : -1;
  }
  return ens;
}

ParticleEnsemble init_lattice(int d, int n, const SpinLaw& law, SimRng& rng) {
  ParticleEnsemble ens;
  ens.d = d;
  ens.pos.resize(static_cast<std::size_t>(n) * d);
  ens.spin.resize(static_cast<std::size_t>(n));
  int side = 1;
  while (std::pow(side, d) < n) ++side;
  for (int i = 0; i < n; ++i) {
    int rem = i;
    for (int c = 0; c < d; ++c) {
      ens.pos[static_cast<std::size_t>(i) * d + c] =
          (static_cast<double>(rem % side) + 0.5) / side;
      rem /= side;
    }
    CounterRng& r = rng.stream(i, RngChannel::kInit);
    ens.spin[static_cast<std::size_t>(i)] = (r.uniform() <= law.p_plus) ? +1 : -1;
  }
  return ens;
}

void save_ensemble(const ParticleEnsemble& ens, std::uint64_t seed, std::ostream& out) {
  out << "ensemble d=" << ens.d << " N=" << ens.size() << " t=" << format_double(ens.t)
      << " seed=" << seed << "\n";
  for (int i = 0; i < ens.size(); ++i) {
    for (int c = 0; c < ens.d; ++c)
      out << format_double(ens.pos[static_cast<std::size_t>(i) * ens.d + c]) << ' ';
    out << ens.spin[static_cast<std::size_t>(i)] << "\n";
  }
}

void save_ensemble_file(const ParticleEnsemble& ens, std::uint64_t seed,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  save_ensemble(ens, seed, out);
}

ParticleEnsemble load_ensemble(std::istream& in, std::uint64_t* seed_out) {
  std::string tag;
  in >> tag;
  if (tag != "ensemble") throw std::runtime_error("not an ensemble snapshot");
  ParticleEnsemble ens;
  int n = 0;
  std::uint64_t seed = 0;
  std::string field;
  for (int f = 0; f < 4; ++f) {
    in >> field;
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad ensemble header");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "d") ens.d = std::stoi(val);
    else if (key == "N") n = std::stoi(val);
    else if (key == "t") ens.t = std::stod(val);
    else if (key == "seed") seed = std::stoull(val);
  }
  ens.pos.resize(static_cast<std::size_t>(n) * ens.d);
  ens.spin.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < ens.d; ++c) in >> ens.pos[static_cast<std::size_t>(i) * ens.d + c];
    in >> ens.spin[static_cast<std::size_t>(i)];
  }
  if (!in) throw std::runtime_error("truncated ensemble snapshot");
  ens.validate();
  if (seed_out) *seed_out = seed;
  return ens;
}

ParticleEnsemble load_ensemble_file(const std::string& path, std::uint64_t* seed_out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_ensemble(in, seed_out);
}

}  // namespace adhesion

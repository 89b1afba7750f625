#pragma once

// Counter-based random streams (Philox4x32-10).
//
// Every stream is addressed by (seed, run, particle, channel) and produces
// its variates from an incrementing 64-bit draw counter, so simulations are
// reproducible for any worker count and any interleaving of particles.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace adhesion {

struct PhiloxBlock {
  std::array<std::uint32_t, 4> x;
};

// One bumped-key round pass of Philox4x32, 10 rounds total.
inline PhiloxBlock philox4x32(std::array<std::uint32_t, 4> ctr,
                              std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return PhiloxBlock{ctr};
}

// Noise channels used by the simulators. Streams with distinct channels are
// independent even for the same particle.
enum class RngChannel : std::uint32_t {
  kInit = 0,       // initial condition draws
  kBrownian = 1,   // B
  kBrownianTilde = 2,  // B-tilde (synchronous channel of the coupling)
  kSpin = 3,       // flip clocks of the particle-system spin
  kCouplingUniform = 4,  // shared uniforms / candidate clocks of the pair
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t run, std::uint32_t particle,
             RngChannel channel)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        hi2_(particle),
        hi3_((static_cast<std::uint32_t>(channel) << 24) ^ run) {}

  // Two 64-bit words per Philox block; uniforms use the top 53 bits.
  double uniform() {
    if (spare_valid_) {
      spare_valid_ = false;
      return to_unit(spare_);
    }
    const PhiloxBlock b = next_block();
    const std::uint64_t w0 =
        (static_cast<std::uint64_t>(b.x[0]) << 32) | b.x[1];
    spare_ = (static_cast<std::uint64_t>(b.x[2]) << 32) | b.x[3];
    spare_valid_ = true;
    return to_unit(w0);
  }

  // Box-Muller; deterministic draw count (two uniforms per pair).
  double normal() {
    if (normal_valid_) {
      normal_valid_ = false;
      return normal_spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * M_PI * u2;
    normal_spare_ = r * std::sin(theta);
    normal_valid_ = true;
    return r * std::cos(theta);
  }

  // Exponential holding time; rate 0 yields +infinity (absorbing state).
  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log1p(-uniform()) / rate;
  }

  std::uint64_t draw_index() const { return counter_; }

 private:
  PhiloxBlock next_block() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32), hi2_, hi3_};
    ++counter_;
    return philox4x32(ctr, key_);
  }

  static double to_unit(std::uint64_t w) {
    // strictly inside (0,1): offset by half an ulp of the 53-bit grid
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t hi2_ = 0;
  std::uint32_t hi3_ = 0;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool spare_valid_ = false;
  double normal_spare_ = 0.0;
  bool normal_valid_ = false;
};

}  // namespace adhesion

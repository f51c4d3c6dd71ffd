#pragma once

#include <cmath>
#include <cstdint>

namespace topkboot {

// Counter-based splittable pseudo-random streams.
//
// Every consumer derives an independent 64-bit stream key from
// (master seed, purpose tag, indices...) through a stateless mixing
// function, so replicate b of cell c always sees the same draws no
// matter which thread produces it or in which order cells run.
// Within a stream the state advances by a Weyl increment and is
// finalized by the SplitMix64 output function (Steele, Lea & Flood,
// "Fast splittable pseudorandom number generators", 2014).

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// MurmurHash3 64-bit finalizer; bijective, full avalanche.
inline constexpr std::uint64_t mix_bits(std::uint64_t z) noexcept {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

// Stream purposes. Keeping the tags distinct guarantees that, e.g., the
// multiplier draws of replicate 3 never collide with the data draws of
// Monte Carlo rep 3 under the same master seed.
enum class StreamTag : std::uint64_t {
  data = 1,
  gaussian = 2,
  multiplier = 3,
  resample = 4,
  noise_t = 5,
  noise_w = 6,
  scan = 7,
};

inline constexpr std::uint64_t derive_key(std::uint64_t seed, StreamTag tag,
                                          std::uint64_t i0 = 0,
                                          std::uint64_t i1 = 0,
                                          std::uint64_t i2 = 0) noexcept {
  std::uint64_t h = mix_bits(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix_bits(h ^ (static_cast<std::uint64_t>(tag) + kGolden));
  h = mix_bits(h ^ (i0 + 0xbb67ae8584caa73bULL));
  h = mix_bits(h ^ (i1 + 0x3c6ef372fe94f82bULL));
  h = mix_bits(h ^ (i2 + 0xa54ff53a5f1d36f1ULL));
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) noexcept : state_(key) {}

  RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t i0 = 0,
            std::uint64_t i1 = 0, std::uint64_t i2 = 0) noexcept
      : state_(derive_key(seed, tag, i0, i1, i2)) {}

  std::uint64_t next_u64() noexcept {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on the open interval (0,1); never returns an exact 0 or 1,
  // so logs in downstream transforms are always finite.
  double next_unit() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, keeping the per-stream draw sequence deterministic.
  double next_normal() noexcept {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cache_ = r * std::sin(theta);
    has_cache_ = true;
    return r * std::cos(theta);
  }

  double next_rademacher() noexcept {
    return (next_u64() & 1u) ? 1.0 : -1.0;
  }

 private:
  std::uint64_t state_ = 0;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace topkboot

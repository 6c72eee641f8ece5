#pragma once

#include <cmath>
#include <cstdint>

namespace mf {

// PCG32 (XSH-RR). One master seed per run; each component draws from its own
// stream so adding draws in one component never perturbs another.
class Pcg32 {
 public:
  Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
  Pcg32(std::uint64_t seed, std::uint64_t stream) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  // Unbiased bounded draw (Lemire-style rejection on the modulus threshold).
  std::uint32_t next_below(std::uint32_t bound) {
    std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0,1) with 53 significant bits.
  double next_double() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  // Box-Muller; spare cached so draw count is stable per call pair.
  double next_normal(double mean, double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(6.283185307179586477 * u2);
    has_spare_ = true;
    return mean + stddev * mag * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream ids, one per component that consumes randomness.
namespace rng_stream {
constexpr std::uint64_t kInit = 0;    // parameter initialization
constexpr std::uint64_t kCorpus = 1;  // synthetic corpus generation
constexpr std::uint64_t kProbe = 2;   // multi-word mask sampling
constexpr std::uint64_t kFocus = 3;   // response-concept sampling
constexpr std::uint64_t kShuffle = 4; // batch shuffling
}  // namespace rng_stream

}  // namespace mf

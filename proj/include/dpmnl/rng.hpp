#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace dpmnl {

// Deterministic random stream with labeled substream derivation.
//
// Every consumer of randomness (environment, exploration, choice sampling,
// mechanism noise) owns its own stream, derived from a master seed and a
// label plus indices. Derivation is a SplitMix64-style hash, so streams for
// distinct (label, a, b) tuples are independent for all practical purposes
// and a run is reproducible from its master seed alone.
//
// Uniforms come straight from mt19937_64 bits (53-bit mantissa scaling) and
// normals from Box-Muller, keeping the byte-level output independent of any
// standard-library distribution implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(mix(seed)), engine_(seed_) {}

  RngStream derive(std::string_view label, std::uint64_t a = 0,
                   std::uint64_t b = 0) const {
    std::uint64_t h = seed_;
    h = mix(h ^ fnv1a(label));
    h = mix(h ^ a);
    h = mix(h ^ b);
    return RngStream(h, 0);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller; one spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double sigma) { return sigma * normal(); }

  std::uint64_t seed() const { return seed_; }

 private:
  RngStream(std::uint64_t derived_seed, int)
      : seed_(derived_seed), engine_(derived_seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpmnl

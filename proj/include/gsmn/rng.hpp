#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gsmn {

// Deterministic 64-bit RNG (splitmix64). Self-contained so that streams are
// reproducible independently of the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return next_u64() % n;
  }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  uint64_t state_;
};

// Derive a child seed from a root seed and a stream label, so independent
// subsystems (generation, collection, noise, init) never share a stream.
inline uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index = 0) {
  uint64_t h = 0xcbf29ce484222325ULL ^ root;
  for (char c : label) {
    h ^= uint64_t(uint8_t(c));
    h *= 0x100000001b3ULL;
  }
  h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  // One splitmix round to decorrelate nearby indices.
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

}  // namespace gsmn

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace verikit {

// splitmix64 finalizer; used to spread seeds and derive independent
// per-trial streams from (master seed, index).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 0x51ed270b0a1c6d3fULL));
}

// Deterministic random source. The engine is the standard-specified
// mt19937_64; the distributions below are implemented inline (rather than
// via <random> distribution objects) so that draws are reproducible
// bit-for-bit regardless of standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  static Rng derived(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_seed(master, index));
  }

  std::uint64_t next() { return engine_(); }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (no caching, so call order is the only
  // state that matters)
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double sign() { return (next() & 1u) ? 1.0 : -1.0; }

  // uniform integer in [lo, hi], inclusive; rejection sampling to avoid
  // modulo bias
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t limit = ~0ULL - (~0ULL % span);
    std::uint64_t draw;
    do {
      draw = next();
    } while (draw >= limit);
    return lo + static_cast<int>(draw % span);
  }

  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace verikit

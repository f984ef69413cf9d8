#pragma once

#include <cmath>
#include <cstdint>

namespace nrdf {

// Counter-style splitmix64 generator. Streams derived with split() depend only
// on the parent seed and the stream index, so work items can be handed their
// own generator up front and produce identical draws whether they run
// sequentially or on a thread pool. All distributions are generated from raw
// bits in-house to keep output identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // independent child stream; does not advance this generator
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0xD1B54A32D192ED03ull)));
  }

  std::uint64_t seed() const { return seed_; }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // standard normal, Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 32)) * 0xE9846AF9B1A615Dull;
    z = (z ^ (z >> 32)) * 0xE9846AF9B1A615Dull;
    return z ^ (z >> 28);
  }

  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nrdf

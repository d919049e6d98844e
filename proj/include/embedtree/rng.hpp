#pragma once

#include <cstdint>
#include <stdexcept>

namespace embedtree {

// xorshift64* generator with a splitmix64-scrambled seed.
//
// The algorithm is fixed and documented here because the stream itself is
// part of the reproducibility contract: a given seed must yield the same
// draws on every platform and in every build. Do not swap this for a
// std:: engine (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 scramble so that small seeds (0, 1, 2, ...) diverge.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    state_ = z != 0 ? z : 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next_u64() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi); requires lo < hi.
  double uniform(double lo, double hi) {
    if (!(lo < hi)) {
      throw std::invalid_argument("Rng::uniform: requires lo < hi");
    }
    double r = lo + next_double() * (hi - lo);
    return r < hi ? r : lo;
  }

  // Uniform in [0, n); requires n > 0.
  int uniform_int(int n) {
    if (n <= 0) {
      throw std::invalid_argument("Rng::uniform_int: requires n > 0");
    }
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
};

}  // namespace embedtree

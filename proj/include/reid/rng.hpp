#pragma once

#include <cstdint>

namespace reid {

// Counter-based SplitMix64: draw i (0-based) is mix(seed + (i + 1) * gamma)
// with gamma = 0x9E3779B97F4A7C15 and the standard SplitMix64 finalizer.
// Every derived draw uses integer arithmetic or correctly rounded IEEE
// operations only, so sequences are identical across platforms. normal()
// is the exception: it relies on libm log/cos.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64";

  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on [lo, hi], unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  // Standard normal via Box-Muller.
  double normal();

  // Independent stream for e.g. one image of a batch.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace reid

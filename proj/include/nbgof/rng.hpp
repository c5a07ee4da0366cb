#pragma once

#include <cstdint>
#include <limits>

namespace nbgof {

// Master seed plus replicate index. Every replicate gets its own stream,
// a pure function of the pair, so results do not depend on scheduling.
struct RngSeed {
  std::uint64_t master = 0;
  std::uint64_t index = 0;

  // Seed for a nested sub-stream (e.g. replicate i of a grid cell).
  RngSeed child(std::uint64_t sub) const;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// Counter-based generator: output k is mix64(key + k * golden). Satisfies
// UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(RngSeed seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    counter_ += kGolden;
    return mix64(key_ + counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nbgof

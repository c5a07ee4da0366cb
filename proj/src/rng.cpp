#include "nbgof/rng.hpp"

namespace nbgof {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a + 0x632be59bd9b4e019ULL) ^ (b + 0x8cb92ba72f3d8dd7ULL));
}

RngSeed RngSeed::child(std::uint64_t sub) const {
  return RngSeed{hash_combine(master, index), sub};
}

CounterRng::CounterRng(RngSeed seed) : key_(hash_combine(seed.master, seed.index)) {}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Lemire's multiply-shift with rejection.
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>((*this)()) * static_cast<unsigned __int128>(bound);
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

}  // namespace nbgof

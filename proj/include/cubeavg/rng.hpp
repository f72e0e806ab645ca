#pragma once

#include <cstdint>

#include "cubeavg/phase.hpp"

namespace cubeavg {

// SplitMix64: tiny deterministic generator with identical output on every
// platform. fork() derives independent streams keyed by an id, which lets
// Monte Carlo loops hand one stream to each sample or block so results do
// not depend on how the work is partitioned.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the unit circle.
  cplx next_unit_complex() { return unit_phase(next_double()); }

  // +1 or -1.
  double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  SplitMix64 fork(std::uint64_t id) const {
    SplitMix64 g(state_ ^ ((id + 0x61c8864680b583ebull) * 0xd1b54a32d192ed03ull));
    g.next_u64();
    return g;
  }

 private:
  std::uint64_t state_;
};

}  // namespace cubeavg

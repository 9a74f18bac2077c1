#pragma once

#include <cstdint>

namespace satdiff {

// Deterministic xoshiro256** generator seeded through splitmix64.
// std::mt19937 would be reproducible too, but the distributions layered on
// top of it are not pinned by the standard; this keeps every text artifact
// bit-identical across compilers. Substreams are derived counter-style from
// (seed, stream) so independent pipeline stages never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform();

  // Uniform integer in [0, n); n must be > 0. Rejection-sampled, unbiased.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare, fully deterministic).
  double normal();

  // Independent generator for a named substream of this one's seed.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace satdiff

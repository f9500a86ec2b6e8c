#pragma once

#include <cstdint>

namespace bmilasso {

// splitmix64 step: advances the state and returns the next output.
// Used both for seeding xoshiro state and for deriving independent
// sub-seeds from a top-level seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives a sub-seed for a named purpose (replication, arm, imputation, ...)
// so that streams built from nearby seeds never coincide.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

// xoshiro256** generator. All stochastic code in the library draws from
// this generator so that a seed fully determines every output byte,
// independent of platform standard library and thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Substream for chain `index`: state seeded from (seed XOR index).
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); never returns 0 or 1, so it is
  // safe inside log() and logit() without further guards.
  double uniform();

  // Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
};

}  // namespace bmilasso

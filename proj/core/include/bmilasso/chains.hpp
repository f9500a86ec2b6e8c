#pragma once

#include <cstdint>
#include <vector>

namespace bmilasso {

struct ChainConfig {
  int n_chains = 4;
  int burn_in = 2000;
  int kept = 2000;       // post-burn-in sweeps
  int thin = 1;          // retain every thin-th sweep
  std::uint64_t seed = 0;
  double rhat_threshold = 1.1;
  bool compute_rhat = true;

  int retained_per_chain() const { return kept / thin; }

  // Throws std::invalid_argument unless: n_chains >= 1 (>= 2 when R-hat is
  // requested), burn_in >= 0, kept >= 1, thin >= 1, kept divisible by thin,
  // kept/thin >= 100, rhat_threshold > 1.
  void validate() const;
};

struct RhatResult {
  double value = 1.0;
  // True when the draws carry no variance information (all retained draws
  // identical across every chain, e.g. an always-excluded spike coefficient);
  // value is 1.0 in that case. A single stuck chain among varying ones
  // yields value = +infinity instead.
  bool degenerate = false;
};

// Split-chain potential scale reduction factor: each chain is halved, and
// with m draws per half, W the mean within-half variance and B the
// between-half variance (m times the variance of half means),
//   R-hat = sqrt((W (m-1)/m + B/m) / W),
// floored at 1.0. Requires >= 2 chains with >= 10 draws each.
RhatResult split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace bmilasso

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmilasso/dataset.hpp"

namespace bmilasso {

// Chained-equations imputation settings. Every incomplete column must keep
// at least five observed entries; the response is always complete.
struct MiceConfig {
  int d_count = 5;
  int cycles = 10;
  int pmm_donors = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Imputations are mutually independent: imputation d uses the substream
// derive_seed(seed, d). Columns are visited in ascending missing-count
// order, seeded by observed means (continuous) or modes (binary).
// Continuous cells: Bayesian linear regression on all other columns plus
// the response, then predictive-mean matching against the five nearest
// observed rows (ties broken by row index). Binary cells: logistic
// regression with a normal-approximation parameter draw, then a Bernoulli
// draw. Numerically degenerate fits fall back to a small ridge and are
// recorded in warnings. Observed cells are never modified.
struct MiceResult {
  ImputedStack stack;
  std::vector<std::string> warnings;
};

MiceResult impute(const IncompleteDataset& data, const MiceConfig& cfg);

}  // namespace bmilasso

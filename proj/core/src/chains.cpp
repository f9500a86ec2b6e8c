#include "bmilasso/chains.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bmilasso {

void ChainConfig::validate() const {
  auto fail = [](const std::string& message) {
    throw std::invalid_argument("chain config: " + message);
  };
  if (n_chains < 1) fail("n_chains must be >= 1");
  if (compute_rhat && n_chains < 2)
    fail("n_chains must be >= 2 when R-hat is requested");
  if (burn_in < 0) fail("burn_in must be >= 0");
  if (kept < 1) fail("kept must be >= 1");
  if (thin < 1) fail("thin must be >= 1");
  if (kept % thin != 0) fail("kept must be divisible by thin");
  if (kept / thin < 100) fail("kept/thin must be >= 100 retained draws");
  if (!(rhat_threshold > 1.0)) fail("rhat_threshold must be > 1");
}

RhatResult split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2)
    throw std::invalid_argument("split_rhat: need at least 2 chains");
  for (const auto& chain : chains)
    if (chain.size() < 10)
      throw std::invalid_argument("split_rhat: need at least 10 draws per chain");

  // Halve every chain (odd lengths drop the middle draw).
  std::size_t half = chains.front().size();
  for (const auto& chain : chains) half = std::min(half, chain.size());
  half /= 2;
  const std::size_t m = half;

  std::vector<double> means;
  std::vector<double> vars;
  bool any_zero_var = false;
  double pooled_min = std::numeric_limits<double>::infinity();
  double pooled_max = -std::numeric_limits<double>::infinity();
  for (const auto& chain : chains) {
    const std::size_t offsets[2] = {0, chain.size() - half};
    for (const std::size_t off : offsets) {
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += chain[off + i];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = chain[off + i] - mean;
        var += d * d;
        pooled_min = std::min(pooled_min, chain[off + i]);
        pooled_max = std::max(pooled_max, chain[off + i]);
      }
      var /= static_cast<double>(m - 1);
      means.push_back(mean);
      vars.push_back(var);
      if (var == 0.0) any_zero_var = true;
    }
  }

  if (pooled_min == pooled_max) {
    // Every draw in every chain equals the same constant: the chains agree
    // perfectly (typical for a spike coefficient that is never included).
    return {1.0, true};
  }
  if (any_zero_var) {
    return {std::numeric_limits<double>::infinity(), true};
  }

  const double k = static_cast<double>(means.size());
  double w = 0.0;
  for (const double v : vars) w += v;
  w /= k;
  double grand = 0.0;
  for (const double mu : means) grand += mu;
  grand /= k;
  double var_of_means = 0.0;
  for (const double mu : means) var_of_means += (mu - grand) * (mu - grand);
  var_of_means /= (k - 1.0);
  const double b = static_cast<double>(m) * var_of_means;

  const double md = static_cast<double>(m);
  const double value = std::sqrt((w * (md - 1.0) / md + b / md) / w);
  return {std::max(value, 1.0), false};
}

}  // namespace bmilasso

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/dataset.hpp"

namespace bmilasso {

// Confusion-style scores for one selected set against the truth, plus the
// covariance-weighted estimation error (beta_hat - beta_true)' Sigma
// (beta_hat - beta_true). Zero-denominator rates fall back to 1 and are
// flagged; an empty selection has precision 0 and hence F1 = 0.
struct MetricsRow {
  double sensitivity = 1.0;
  double specificity = 1.0;
  double precision = 0.0;
  double f1 = 0.0;
  double mse = 0.0;
  int selected_count = 0;
  bool convention_flagged = false;
};

MetricsRow evaluate(const std::vector<std::uint8_t>& selected,
                    const std::vector<std::uint8_t>& truth,
                    const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& beta_true,
                    const Eigen::MatrixXd& sigma);

// Per-dataset least squares on the selected columns (intercept implicit via
// centering), averaged across datasets; unselected coefficients stay zero.
// A singular normal matrix falls back to a small ridge and is flagged.
// Requires strictly fewer selected columns than rows.
struct RefitResult {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  bool ridge_fallback = false;
};

RefitResult refit_pool(const ImputedStack& stack,
                       const std::vector<std::uint8_t>& selected);

}  // namespace bmilasso

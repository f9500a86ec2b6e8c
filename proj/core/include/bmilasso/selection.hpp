#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/dataset.hpp"
#include "bmilasso/gibbs.hpp"

namespace bmilasso {

// Cross-imputation mixture of posterior draws. For covariate j the pooled
// sample concatenates the original-scale beta_{d,j} draws over datasets
// (major), then chains, then retained sweeps, so its size is always
// d_count * n_chains * retained_per_chain and the layout is deterministic.
struct PooledPosterior {
  ModelKind kind = ModelKind::MultiLaplace;
  int d_count = 0;
  int p = 0;
  std::vector<std::string> column_names;

  std::vector<std::vector<double>> beta;   // p flat samples, d-major
  std::vector<double> sigma2;              // shared across d, chain-major
  std::vector<std::vector<double>> gamma;  // spike models only, p samples

  // Posterior means per dataset on the original scale. The active variant
  // restricts spike draws to sweeps with gamma_j = 1 (zero for groups that
  // are never active); for shrinkage models both matrices coincide.
  Eigen::MatrixXd per_dataset_mean;         // D x p
  Eigen::MatrixXd per_dataset_mean_active;  // D x p

  int pooled_size() const {
    return beta.empty() ? 0 : static_cast<int>(beta.front().size());
  }
};

// Mixes all chains and datasets into one flat sample per covariate. Throws
// on empty draws, and on a failed convergence check unless force is set.
PooledPosterior pool(const PosteriorDraws& draws, bool force = false);

// Linear-interpolation empirical quantile (type 7) of a sorted sample.
double quantile_type7_sorted(const std::vector<double>& sorted, double q);

// Convenience overload that copies and sorts.
double quantile_type7(std::vector<double> sample, double q);

enum class SelectionRule { CredibleInterval, MedianIndicator, BicPath };

const char* selection_rule_name(SelectionRule rule);

struct SelectionResult {
  SelectionRule rule = SelectionRule::CredibleInterval;
  std::vector<std::string> column_names;
  std::vector<std::uint8_t> selected;  // one flag per covariate
  std::vector<double> estimate;        // pooled posterior mean per covariate
  std::vector<double> lo;              // equal-tailed interval endpoints
  std::vector<double> hi;
  std::vector<double> inclusion;  // median rule only: inclusion proportions

  double x_pct = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  bool bic_zero_residual = false;

  int selected_count() const;
};

// Equal-tailed x% credible-interval rule: covariate j is kept when the
// interval [q_{(1-x/100)/2}, q_{1-(1-x/100)/2}] of its pooled draws excludes
// zero (an endpoint exactly at zero counts as containing it). Requires
// x in (0, 100) and at least 200 pooled draws per covariate.
SelectionResult select_by_interval(const PooledPosterior& pooled, double x_pct);

struct ScanRow {
  double x_pct = 0.0;
  std::vector<std::uint8_t> selected;
  double sensitivity = std::numeric_limits<double>::quiet_NaN();
  double specificity = std::numeric_limits<double>::quiet_NaN();
  double distance = std::numeric_limits<double>::quiet_NaN();
  double bic = std::numeric_limits<double>::quiet_NaN();
  bool convention_flagged = false;  // a zero denominator forced a rate to 1
  bool best = false;                // exactly one row carries the mark
};

// Scans x = 5, 10, ..., 95 against a known truth vector. A rate with a zero
// denominator is reported as 1 by convention and the row is flagged. The row
// maximizing sqrt(SEN^2 + SPE^2) is marked best; ties go to the larger x
// (the sparser selected set).
std::vector<ScanRow> scan_intervals(const PooledPosterior& pooled,
                                    const std::vector<std::uint8_t>& truth);

enum class BicCoefficientMode { PosteriorMean, RefitOls };

const char* bic_coefficient_mode_name(BicCoefficientMode mode);

// The same scan without truth: each row carries the modified BIC of the
// per-dataset coefficients restricted to that row's selected set, either the
// pooled posterior means (conditional on inclusion for spike models) or a
// per-dataset least-squares refit. The stack must be the original-scale data
// the draws refer to. The row minimizing BIC is marked best; ties go to the
// larger x.
std::vector<ScanRow> scan_intervals_bic(
    const PooledPosterior& pooled, const ImputedStack& stack,
    BicCoefficientMode mode = BicCoefficientMode::PosteriorMean);

// Runs scan_intervals and materializes the interval rule at the best row.
SelectionResult select_by_distance(const PooledPosterior& pooled,
                                   const std::vector<std::uint8_t>& truth);

// Runs scan_intervals_bic and materializes the interval rule at the best row.
SelectionResult select_by_bic_scan(
    const PooledPosterior& pooled, const ImputedStack& stack,
    BicCoefficientMode mode = BicCoefficientMode::PosteriorMean);

// Discrete rule for spike models: covariate j is kept when its posterior
// inclusion proportion strictly exceeds 1/2 (the median of the pooled
// indicator draws). A proportion of exactly 1/2 is not selected. Shrinkage
// models carry no indicators and are rejected. The reported lo/hi are the
// descriptive 95% equal-tailed endpoints of the pooled coefficient draws.
SelectionResult select_by_median_indicator(const PosteriorDraws& draws,
                                           bool force = false);

struct ModifiedBic {
  double value = 0.0;
  double df = 0.0;
  bool zero_residual = false;  // value is the -infinity sentinel
  bool ols_fallback = false;   // df = D * (number of nonzero groups)
};

// BIC = log(sum_d RSS_d / (D n)) + df log(D n) / (D n), where RSS_d uses the
// intercept beta0_d = mean(y_d) - mean(x_d)' beta_d and
// df = sum_j 1(|beta_j| > 0) + (D - 1) sum_j |beta_j| / |beta_ols_j| over
// group norms taken across datasets. Pass an empty beta_ols (the n <= p
// case) to use the fallback df. Sums over datasets use magnitude-ordered
// compensated summation, so the value is invariant to dataset order.
ModifiedBic modified_bic(const ImputedStack& stack,
                         const Eigen::MatrixXd& beta_bar,
                         const Eigen::MatrixXd& beta_ols);

// Per-dataset least squares over all covariates, intercept handled by
// centering. Returns an empty matrix when n <= p so callers can take the
// documented df fallback.
Eigen::MatrixXd per_dataset_ols(const ImputedStack& stack);

}  // namespace bmilasso

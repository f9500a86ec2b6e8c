#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace bmilasso {

enum class ColumnKind { Continuous, Binary };

// One complete design: n rows, p covariates, fully observed response.
// A column is Binary exactly when every observed value is 0 or 1; the
// distinction drives the imputation engine, nothing else.
struct Dataset {
  Eigen::MatrixXd x;                       // n x p
  Eigen::VectorXd y;                       // n
  std::vector<std::string> column_names;   // p
  std::vector<ColumnKind> column_kinds;    // p

  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }

  // Throws std::invalid_argument on shape mismatch, non-finite entries,
  // duplicate or empty column names, or n < 2.
  void validate() const;
};

// Infers Continuous/Binary per column from the values actually present;
// rows with mask 0 (when given) are ignored during inference.
std::vector<ColumnKind> infer_column_kinds(
    const Eigen::MatrixXd& x,
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>* mask =
        nullptr);

// A dataset with a response and a missingness mask over the covariates:
// mask(i, j) == 1 means x(i, j) is observed. The response is always fully
// observed. Values stored at masked-out cells are placeholders and carry
// no information.
struct IncompleteDataset {
  Dataset data;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;  // n x p

  int n() const { return data.n(); }
  int p() const { return data.p(); }
  int observed_count(int col) const;

  // Validates the underlying dataset (placeholder cells must still be
  // finite), the mask shape and values, and that every column retains at
  // least two observed rows.
  void validate() const;
};

enum class StackProvenance { Simulated, Imputed, Loaded };

// D completed datasets sharing one covariate schema. The j-th covariate
// across all D datasets forms one selection group.
struct ImputedStack {
  std::vector<Dataset> datasets;
  StackProvenance provenance = StackProvenance::Loaded;

  int count() const { return static_cast<int>(datasets.size()); }
  int n() const { return datasets.empty() ? 0 : datasets.front().n(); }
  int p() const { return datasets.empty() ? 0 : datasets.front().p(); }
  const std::vector<std::string>& column_names() const {
    return datasets.front().column_names;
  }

  // Throws if D < 1, any member dataset is invalid, or the members disagree
  // on shape, column names, or column kinds.
  void validate() const;
};

// Per-dataset affine maps applied by standardize(); retained so that
// coefficients can be mapped back to the original data scale.
struct StandardizationState {
  std::vector<Eigen::VectorXd> x_mean;  // D entries of length p
  std::vector<Eigen::VectorXd> x_sd;    // D entries of length p
  std::vector<double> y_mean;           // D

  int count() const { return static_cast<int>(y_mean.size()); }
};

// Centers and scales every covariate column to mean 0, sample sd 1, and
// centers y, separately within each dataset. The intercept becomes
// implicit. Throws naming the column if any column has zero variance.
// Applying standardize to an already standardized stack is a no-op up to
// 1e-12.
std::pair<ImputedStack, StandardizationState> standardize(
    const ImputedStack& stack);

struct OriginalScaleCoefficients {
  Eigen::MatrixXd beta;       // D x p, original scale
  Eigen::VectorXd intercept;  // D
};

// Maps coefficients estimated on the standardized scale back to the
// original scale, recovering the per-dataset intercept.
OriginalScaleCoefficients destandardize_coefficients(
    const Eigen::MatrixXd& beta_std, const StandardizationState& state);

// Drops every row carrying at least one masked entry. Throws when fewer than
// two complete rows remain. Column kinds are re-inferred from the survivors.
Dataset complete_cases(const IncompleteDataset& incomplete);

}  // namespace bmilasso

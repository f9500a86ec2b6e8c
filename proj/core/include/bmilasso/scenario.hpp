#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/dataset.hpp"
#include "bmilasso/rng.hpp"

namespace bmilasso {

enum class CovKind { CompoundSymmetry, Ar1 };
enum class MissingMechanism { Mcar, Mar };

// How entries are removed. MCAR masks exactly ceil(frac * n) uniformly
// chosen entries per targeted column; MAR masks entry (i, j) with
// probability logistic(alpha0 + slope_x X_{i, j - driver_offset} +
// slope_y Y_i). Column indices are 0-based throughout.
struct MissingSpec {
  MissingMechanism mechanism = MissingMechanism::Mcar;
  std::vector<int> target_cols;
  double mcar_frac = 0.05;
  double alpha0 = -4.0;
  double slope_x = 0.5;
  double slope_y = 0.5;
  int driver_offset = 10;

  // Targets must be distinct and within [0, p); under MAR every driver
  // column j - driver_offset must exist and must not itself be a target.
  void validate(int p) const;
};

// Full generative description of one simulation cell.
struct ScenarioConfig {
  int n = 100;
  int p = 20;
  double corr = 0.1;
  CovKind cov_kind = CovKind::CompoundSymmetry;
  Eigen::VectorXd beta_true;  // p entries
  bool binary = false;        // dichotomize X at 0 before forming Y
  MissingSpec missing;
  int replications = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class MissingLevel { Low, High };

// Published cells: compound symmetry at n=100, p=20 with unit coefficients
// on {1,2,5,11,12,15} (1-based); AR(1) at corr 0.5 with the same actives,
// plus {21,22,25,31,32,35} when p=40; the binary cell dichotomizes the AR(1)
// covariates. Low missingness targets the second half of the covariates
// (fraction 0.05, alpha0 -4); High (p=20 only) targets every column under
// MCAR and keeps targets 11..20 with alpha0 -1.8 under MAR; the p=40 cell
// targets columns 11..20 and 31..40 at fraction 0.025.
ScenarioConfig scenario_a(double corr, MissingMechanism mechanism);
ScenarioConfig scenario_b(int n, int p, MissingMechanism mechanism,
                          MissingLevel level = MissingLevel::Low);
ScenarioConfig scenario_c(MissingMechanism mechanism);

// Population covariance of the Gaussian covariates implied by the config.
Eigen::MatrixXd scenario_population_covariance(const ScenarioConfig& cfg);

// Noise variance sigma^2 = beta' Sigma beta of the Gaussian covariates, the
// unit signal-to-noise design. The dichotomized cell keeps this value.
double scenario_noise_variance(const ScenarioConfig& cfg);

// Draws X row-major from MVN(0, Sigma), dichotomizes at 0 first when the
// config says so, then forms Y = X beta + eps with eps ~ N(0, sigma^2).
// Returns the completed dataset and the importance truth vector.
struct GeneratedData {
  Dataset data;
  std::vector<std::uint8_t> truth;
};

GeneratedData generate(const ScenarioConfig& cfg, Rng& rng);

// Applies the missingness mechanism. A column left with fewer than two
// observed entries is redrawn a bounded number of times, then an error is
// raised naming the column.
IncompleteDataset impose_missing(const Dataset& data, const MissingSpec& spec,
                                 Rng& rng);

// Covariance of the dichotomized covariates estimated from Monte-Carlo rows
// drawn with the given seed; used as the MSE weight for the binary cell.
Eigen::MatrixXd binary_covariance_mc(const ScenarioConfig& cfg,
                                     std::int64_t rows, std::uint64_t seed);

}  // namespace bmilasso

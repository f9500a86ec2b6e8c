#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/chains.hpp"
#include "bmilasso/gibbs.hpp"
#include "bmilasso/metrics.hpp"
#include "bmilasso/mice.hpp"
#include "bmilasso/scenario.hpp"
#include "bmilasso/selection.hpp"

namespace bmilasso {

// Estimators compared in a simulation run. The first three are penalized
// least squares baselines; the next five are the Gibbs samplers on the
// imputed stack; the last two run the Multi-Laplace sampler on the full
// data as a single-dataset stack.
enum class ArmKind {
  Lasso,
  CcLasso,
  MiLasso,
  MultiLaplace,
  Horseshoe,
  Ard,
  SpikeNormal,
  SpikeLaplace,
  Blasso,
  BlassoCi,
};

std::string arm_kind_name(ArmKind kind);
ArmKind arm_kind_from_name(const std::string& name);

// How a Bayesian arm turns posterior draws into a selected set.
// DistanceScan picks the credible-interval width maximizing
// sqrt(SEN^2 + SPE^2) against the truth; BicScan picks the width minimizing
// the modified information criterion; FixedInterval uses one width;
// MedianIndicator keeps covariates whose inclusion probability exceeds 1/2
// (spike models only).
enum class SelectionStrategy {
  DistanceScan,
  BicScan,
  FixedInterval,
  MedianIndicator,
};

std::string selection_strategy_name(SelectionStrategy strategy);
SelectionStrategy selection_strategy_from_name(const std::string& name);

struct ArmSpec {
  ArmKind kind = ArmKind::MultiLaplace;
  ModelSpec model;
  ChainConfig chains;
  SelectionStrategy selection = SelectionStrategy::DistanceScan;
  double fixed_x_pct = 50.0;
  BicCoefficientMode bic_mode = BicCoefficientMode::PosteriorMean;
};

// The published comparison: the three penalized baselines plus the five
// samplers, each with its default priors and selection rule (interval scan
// for shrinkage, median indicator for spike). The two full-data
// single-imputation arms are opt-in.
std::vector<ArmSpec> default_arms(const ChainConfig& chains);
ArmSpec make_arm(ArmKind kind, const ChainConfig& chains);

// Which covariance weights the estimation error in the binary cell: the
// Monte-Carlo covariance of the dichotomized covariates (default) or the
// Gaussian generator covariance.
enum class MseSigmaMode { BinaryMc, Generator };

struct ArmResult {
  std::string arm;
  bool ok = false;
  std::string error;
  MetricsRow metrics;
  std::vector<std::uint8_t> selected;
  double max_rhat = 1.0;
  bool converged = true;
  bool ridge_fallback = false;
  double x_pct = 0.0;   // interval width actually used, 0 otherwise
  double lambda = 0.0;  // penalty actually used, 0 otherwise
  std::vector<ScanRow> scan;  // Bayesian arms: full interval scan
};

struct ReplicationResult {
  int index = 0;
  bool ok = false;
  std::string error;
  std::vector<std::string> imputation_warnings;
  std::vector<ArmResult> arms;
};

// Mean and standard error (sd / sqrt(R)) over successful replications.
struct ArmSummary {
  std::string arm;
  int replications = 0;
  double sen_mean = 0.0, sen_se = 0.0;
  double spe_mean = 0.0, spe_se = 0.0;
  double f1_mean = 0.0, f1_se = 0.0;
  double mse_mean = 0.0, mse_se = 0.0;
  bool se_flagged = false;  // single replication: se reported as 0
};

struct ExperimentResult {
  ScenarioConfig config;
  std::vector<ReplicationResult> replications;
  std::vector<ArmSummary> table;
  Eigen::MatrixXd mse_sigma;
  int failed_replications = 0;
};

// Runs the full pipeline per replication: generate, impose missingness,
// impute, then every arm. Replication r uses base seed config.seed + r with
// one derived substream per stage. A replication whose shared pipeline or
// any arm throws is recorded as failed; the run aborts only when more than
// ten percent fail. Results are byte-identical for any thread count.
ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const std::vector<ArmSpec>& arms,
                                const MiceConfig& mice, int n_threads = 1,
                                MseSigmaMode mse_mode = MseSigmaMode::BinaryMc);

// Summarizes per-arm metric rows into the mean/se table.
std::vector<ArmSummary> summarize_arms(
    const std::vector<ReplicationResult>& replications,
    const std::vector<std::string>& arm_order);

}  // namespace bmilasso

#include "bmilasso/experiment.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <utility>

#include "bmilasso/group_lasso.hpp"
#include "bmilasso/numeric.hpp"
#include "bmilasso/rng.hpp"

namespace bmilasso {

namespace {

// Substream purposes hung off each replication's base seed.
constexpr std::uint64_t kPurposeGenerate = 0;
constexpr std::uint64_t kPurposeMissing = 1;
constexpr std::uint64_t kPurposeImpute = 2;
constexpr std::uint64_t kPurposeArmBase = 3;

// Fixed seed of the Monte-Carlo covariance for the dichotomized cell, so
// the MSE weight matrix does not depend on the run seed.
constexpr std::uint64_t kBinarySigmaSeed = 0x5eedb1a5c0de0001ULL;
constexpr std::int64_t kBinarySigmaRows = 1000000;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("experiment: " + message);
}

ImputedStack single_stack(const Dataset& data) {
  ImputedStack stack;
  stack.provenance = StackProvenance::Simulated;
  stack.datasets.push_back(data);
  return stack;
}

bool uses_imputed_stack(ArmKind kind) {
  switch (kind) {
    case ArmKind::Lasso:
    case ArmKind::CcLasso:
    case ArmKind::Blasso:
    case ArmKind::BlassoCi:
      return false;
    default:
      return true;
  }
}

std::vector<std::uint8_t> nonzero_flags(const Eigen::VectorXd& values) {
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(values.size()));
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    flags[static_cast<std::size_t>(j)] = values[j] != 0.0 ? 1 : 0;
  }
  return flags;
}

// Penalized baseline on one dataset: standardize, tune by the information
// criterion over the default grid, select the nonzero set, refit unpenalized
// on the original data.
void run_single_lasso_arm(const Dataset& data, const ScenarioConfig& cfg,
                          const std::vector<std::uint8_t>& truth,
                          const Eigen::MatrixXd& mse_sigma, ArmResult& out) {
  ImputedStack original = single_stack(data);
  const auto standardized = standardize(original);
  const Dataset& std_data = standardized.first.datasets.front();
  const double lambda_max = lasso_lambda_max(std_data);
  LassoTuneResult tuned = tune_lasso(std_data, default_lambda_grid(lambda_max));
  out.lambda = tuned.best.lambda;
  out.selected = nonzero_flags(tuned.best.beta);
  RefitResult refit = refit_pool(original, out.selected);
  out.ridge_fallback = refit.ridge_fallback;
  out.metrics =
      evaluate(out.selected, truth, refit.beta, cfg.beta_true, mse_sigma);
  out.ok = true;
}

void run_milasso_arm(const ImputedStack& stack, const ScenarioConfig& cfg,
                     const std::vector<std::uint8_t>& truth,
                     const Eigen::MatrixXd& mse_sigma, ArmResult& out) {
  const auto standardized = standardize(stack);
  const double lambda_max = milasso_lambda_max(standardized.first);
  MilassoTuneResult tuned =
      tune_milasso(standardized.first, default_lambda_grid(lambda_max));
  out.lambda = tuned.best.lambda;
  out.selected = nonzero_flags(tuned.best.group_norms);
  RefitResult refit = refit_pool(stack, out.selected);
  out.ridge_fallback = refit.ridge_fallback;
  out.metrics =
      evaluate(out.selected, truth, refit.beta, cfg.beta_true, mse_sigma);
  out.ok = true;
}

void run_bayesian_arm(const ArmSpec& spec, const ImputedStack& stack,
                      const ScenarioConfig& cfg,
                      const std::vector<std::uint8_t>& truth,
                      const Eigen::MatrixXd& mse_sigma, std::uint64_t seed,
                      ArmResult& out) {
  ChainConfig chains = spec.chains;
  chains.seed = seed;
  PosteriorDraws draws = fit(spec.model, stack, chains, 1);
  out.max_rhat = draws.max_rhat;
  out.converged = draws.converged;

  PooledPosterior pooled = pool(draws, true);
  out.scan = scan_intervals(pooled, truth);

  SelectionResult selection;
  switch (spec.selection) {
    case SelectionStrategy::DistanceScan: {
      const ScanRow* best = nullptr;
      for (const ScanRow& row : out.scan) {
        if (row.best) best = &row;
      }
      if (best == nullptr) {
        throw std::logic_error("experiment: interval scan marked no best row");
      }
      selection = select_by_interval(pooled, best->x_pct);
      out.x_pct = best->x_pct;
      break;
    }
    case SelectionStrategy::BicScan: {
      selection = select_by_bic_scan(pooled, stack, spec.bic_mode);
      out.x_pct = selection.x_pct;
      break;
    }
    case SelectionStrategy::FixedInterval: {
      selection = select_by_interval(pooled, spec.fixed_x_pct);
      out.x_pct = spec.fixed_x_pct;
      break;
    }
    case SelectionStrategy::MedianIndicator: {
      selection = select_by_median_indicator(draws, true);
      break;
    }
  }
  out.selected = selection.selected;
  RefitResult refit = refit_pool(stack, out.selected);
  out.ridge_fallback = refit.ridge_fallback;
  out.metrics =
      evaluate(out.selected, truth, refit.beta, cfg.beta_true, mse_sigma);
  out.ok = true;
}

struct SharedInputs {
  GeneratedData generated;
  IncompleteDataset incomplete;
  ImputedStack imputed;
  std::vector<std::string> imputation_warnings;
};

ReplicationResult run_replication(const ScenarioConfig& cfg,
                                  const std::vector<ArmSpec>& arms,
                                  const MiceConfig& mice,
                                  const Eigen::MatrixXd& mse_sigma,
                                  int index) {
  ReplicationResult rep;
  rep.index = index;
  const std::uint64_t rep_seed =
      cfg.seed + static_cast<std::uint64_t>(index);

  bool needs_stack = false;
  for (const ArmSpec& arm : arms) needs_stack |= uses_imputed_stack(arm.kind);

  SharedInputs shared;
  try {
    Rng rng_gen(derive_seed(rep_seed, kPurposeGenerate));
    shared.generated = generate(cfg, rng_gen);
    Rng rng_mis(derive_seed(rep_seed, kPurposeMissing));
    shared.incomplete =
        impose_missing(shared.generated.data, cfg.missing, rng_mis);
    if (needs_stack) {
      MiceConfig rep_mice = mice;
      rep_mice.seed = derive_seed(rep_seed, kPurposeImpute);
      MiceResult imputed = impute(shared.incomplete, rep_mice);
      shared.imputed = std::move(imputed.stack);
      rep.imputation_warnings = std::move(imputed.warnings);
    }
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
    return rep;
  }

  rep.ok = true;
  for (std::size_t k = 0; k < arms.size(); ++k) {
    const ArmSpec& spec = arms[k];
    ArmResult result;
    result.arm = arm_kind_name(spec.kind);
    const std::uint64_t arm_seed =
        derive_seed(rep_seed, kPurposeArmBase + static_cast<std::uint64_t>(k));
    try {
      switch (spec.kind) {
        case ArmKind::Lasso:
          run_single_lasso_arm(shared.generated.data, cfg,
                               shared.generated.truth, mse_sigma, result);
          break;
        case ArmKind::CcLasso: {
          const Dataset cc = complete_cases(shared.incomplete);
          run_single_lasso_arm(cc, cfg, shared.generated.truth, mse_sigma,
                               result);
          break;
        }
        case ArmKind::MiLasso:
          run_milasso_arm(shared.imputed, cfg, shared.generated.truth,
                          mse_sigma, result);
          break;
        case ArmKind::Blasso:
        case ArmKind::BlassoCi: {
          const ImputedStack full = single_stack(shared.generated.data);
          run_bayesian_arm(spec, full, cfg, shared.generated.truth, mse_sigma,
                           arm_seed, result);
          break;
        }
        default:
          run_bayesian_arm(spec, shared.imputed, cfg, shared.generated.truth,
                           mse_sigma, arm_seed, result);
          break;
      }
    } catch (const std::exception& e) {
      result.ok = false;
      result.error = e.what();
      rep.ok = false;
      if (rep.error.empty()) {
        rep.error = result.arm + ": " + result.error;
      }
    }
    rep.arms.push_back(std::move(result));
  }
  return rep;
}

}  // namespace

std::string arm_kind_name(ArmKind kind) {
  switch (kind) {
    case ArmKind::Lasso: return "lasso";
    case ArmKind::CcLasso: return "cc_lasso";
    case ArmKind::MiLasso: return "mi_lasso";
    case ArmKind::MultiLaplace: return "multi_laplace";
    case ArmKind::Horseshoe: return "horseshoe";
    case ArmKind::Ard: return "ard";
    case ArmKind::SpikeNormal: return "spike_normal";
    case ArmKind::SpikeLaplace: return "spike_laplace";
    case ArmKind::Blasso: return "blasso";
    case ArmKind::BlassoCi: return "blasso_ci";
  }
  fail("unknown arm kind");
}

ArmKind arm_kind_from_name(const std::string& name) {
  for (ArmKind kind :
       {ArmKind::Lasso, ArmKind::CcLasso, ArmKind::MiLasso,
        ArmKind::MultiLaplace, ArmKind::Horseshoe, ArmKind::Ard,
        ArmKind::SpikeNormal, ArmKind::SpikeLaplace, ArmKind::Blasso,
        ArmKind::BlassoCi}) {
    if (arm_kind_name(kind) == name) return kind;
  }
  fail("unknown arm name: " + name);
}

std::string selection_strategy_name(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::DistanceScan: return "distance_scan";
    case SelectionStrategy::BicScan: return "bic_scan";
    case SelectionStrategy::FixedInterval: return "fixed_interval";
    case SelectionStrategy::MedianIndicator: return "median_indicator";
  }
  fail("unknown selection strategy");
}

SelectionStrategy selection_strategy_from_name(const std::string& name) {
  for (SelectionStrategy strategy :
       {SelectionStrategy::DistanceScan, SelectionStrategy::BicScan,
        SelectionStrategy::FixedInterval,
        SelectionStrategy::MedianIndicator}) {
    if (selection_strategy_name(strategy) == name) return strategy;
  }
  fail("unknown selection strategy: " + name);
}

ArmSpec make_arm(ArmKind kind, const ChainConfig& chains) {
  ArmSpec spec;
  spec.kind = kind;
  spec.chains = chains;
  switch (kind) {
    case ArmKind::MultiLaplace:
      spec.model = ModelSpec::defaults(ModelKind::MultiLaplace);
      spec.selection = SelectionStrategy::DistanceScan;
      break;
    case ArmKind::Horseshoe:
      spec.model = ModelSpec::defaults(ModelKind::Horseshoe);
      spec.selection = SelectionStrategy::DistanceScan;
      break;
    case ArmKind::Ard:
      spec.model = ModelSpec::defaults(ModelKind::Ard);
      spec.selection = SelectionStrategy::DistanceScan;
      break;
    case ArmKind::SpikeNormal:
      spec.model = ModelSpec::defaults(ModelKind::SpikeNormal);
      spec.selection = SelectionStrategy::MedianIndicator;
      break;
    case ArmKind::SpikeLaplace:
      spec.model = ModelSpec::defaults(ModelKind::SpikeLaplace);
      spec.selection = SelectionStrategy::MedianIndicator;
      break;
    case ArmKind::Blasso:
      spec.model = ModelSpec::defaults(ModelKind::MultiLaplace);
      spec.selection = SelectionStrategy::FixedInterval;
      spec.fixed_x_pct = 50.0;
      break;
    case ArmKind::BlassoCi:
      spec.model = ModelSpec::defaults(ModelKind::MultiLaplace);
      spec.selection = SelectionStrategy::DistanceScan;
      break;
    default:
      break;
  }
  return spec;
}

std::vector<ArmSpec> default_arms(const ChainConfig& chains) {
  std::vector<ArmSpec> arms;
  for (ArmKind kind :
       {ArmKind::Lasso, ArmKind::CcLasso, ArmKind::MiLasso,
        ArmKind::MultiLaplace, ArmKind::Horseshoe, ArmKind::Ard,
        ArmKind::SpikeNormal, ArmKind::SpikeLaplace}) {
    arms.push_back(make_arm(kind, chains));
  }
  return arms;
}

std::vector<ArmSummary> summarize_arms(
    const std::vector<ReplicationResult>& replications,
    const std::vector<std::string>& arm_order) {
  std::vector<ArmSummary> table;
  for (const std::string& arm : arm_order) {
    ArmSummary row;
    row.arm = arm;
    std::vector<double> sen, spe, f1, mse;
    for (const ReplicationResult& rep : replications) {
      for (const ArmResult& result : rep.arms) {
        if (result.arm != arm || !result.ok) continue;
        sen.push_back(result.metrics.sensitivity);
        spe.push_back(result.metrics.specificity);
        f1.push_back(result.metrics.f1);
        mse.push_back(result.metrics.mse);
      }
    }
    row.replications = static_cast<int>(sen.size());
    const auto mean_se = [&](const std::vector<double>& values, double& mean,
                             double& se) {
      if (values.empty()) return;
      mean = compensated_mean(values);
      if (values.size() < 2) {
        se = 0.0;
        return;
      }
      std::vector<double> sq(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean;
        sq[i] = d * d;
      }
      const double var =
          stable_sum(sq) / static_cast<double>(values.size() - 1);
      se = std::sqrt(var / static_cast<double>(values.size()));
    };
    mean_se(sen, row.sen_mean, row.sen_se);
    mean_se(spe, row.spe_mean, row.spe_se);
    mean_se(f1, row.f1_mean, row.f1_se);
    mean_se(mse, row.mse_mean, row.mse_se);
    row.se_flagged = row.replications == 1;
    table.push_back(std::move(row));
  }
  return table;
}

ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const std::vector<ArmSpec>& arms,
                                const MiceConfig& mice, int n_threads,
                                MseSigmaMode mse_mode) {
  cfg.validate();
  mice.validate();
  if (arms.empty()) fail("at least one arm is required");
  if (n_threads < 1) fail("n_threads must be at least 1");

  ExperimentResult out;
  out.config = cfg;
  if (cfg.binary && mse_mode == MseSigmaMode::BinaryMc) {
    out.mse_sigma = binary_covariance_mc(cfg, kBinarySigmaRows, kBinarySigmaSeed);
  } else {
    out.mse_sigma = scenario_population_covariance(cfg);
  }

  const int reps = cfg.replications;
  out.replications.resize(static_cast<std::size_t>(reps));
  const auto worker_range = [&](std::atomic<int>& next) {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) break;
      out.replications[static_cast<std::size_t>(r)] =
          run_replication(cfg, arms, mice, out.mse_sigma, r);
    }
  };
  if (n_threads <= 1 || reps == 1) {
    std::atomic<int> next{0};
    worker_range(next);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int pool = std::min(n_threads, reps);
    workers.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) {
      workers.emplace_back([&] { worker_range(next); });
    }
    for (std::thread& w : workers) w.join();
  }

  for (const ReplicationResult& rep : out.replications) {
    if (!rep.ok) ++out.failed_replications;
  }
  if (out.failed_replications * 10 >= reps && out.failed_replications > 0) {
    std::string first_error;
    for (const ReplicationResult& rep : out.replications) {
      if (!rep.ok) {
        first_error = rep.error;
        break;
      }
    }
    throw std::runtime_error(
        "experiment: " + std::to_string(out.failed_replications) + " of " +
        std::to_string(reps) + " replications failed (first error: " +
        first_error + ")");
  }

  std::vector<std::string> order;
  for (const ArmSpec& arm : arms) order.push_back(arm_kind_name(arm.kind));
  out.table = summarize_arms(out.replications, order);
  return out;
}

}  // namespace bmilasso

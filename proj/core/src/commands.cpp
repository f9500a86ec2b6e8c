#include "bmilasso/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bmilasso/bayesopt.hpp"
#include "bmilasso/dataset.hpp"
#include "bmilasso/experiment.hpp"
#include "bmilasso/gibbs.hpp"
#include "bmilasso/mice.hpp"
#include "bmilasso/numeric.hpp"
#include "bmilasso/report.hpp"
#include "bmilasso/run_config.hpp"
#include "bmilasso/selection.hpp"
#include "bmilasso/stack_io.hpp"

namespace bmilasso {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_artifact(const std::string& path, const std::string& content) {
  write_text_file(path, content);
  std::cout << "wrote " << path << "\n";
}

// Numbers that may legitimately be infinite are stored as strings so the
// JSON stays loadable.
ordered_json json_number(double value) {
  if (std::isfinite(value)) return value;
  return value > 0 ? "inf" : "-inf";
}

int run_command(const CommandOptions& options,
                const std::function<int(const RunConfig&)>& body) {
  try {
    if (options.config_path.empty()) {
      std::cerr << "error: --config is required\n";
      return kExitConfig;
    }
    if (options.threads < 1) {
      std::cerr << "error: --threads must be at least 1\n";
      return kExitConfig;
    }
    RunConfig config = load_run_config(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (options.dry_run) {
      std::cout << dump_run_config(config);
      return kExitOk;
    }
    if (options.out_dir.empty()) {
      std::cerr << "error: --out is required\n";
      return kExitConfig;
    }
    std::filesystem::create_directories(options.out_dir);
    return body(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

[[noreturn]] void missing_section(const char* name) {
  throw std::invalid_argument(std::string("config: ") + name +
                              ": section required by the " + name +
                              " command");
}

// ---- posterior artifacts shared by fit and select ----

std::string posterior_summary_csv(const PooledPosterior& pooled) {
  std::string out = "covariate,mean,sd,q025,q500,q975,inclusion\n";
  for (int j = 0; j < pooled.p; ++j) {
    std::vector<double> sorted = pooled.beta[static_cast<std::size_t>(j)];
    std::sort(sorted.begin(), sorted.end());
    const double mean = compensated_mean(sorted);
    std::vector<double> sq(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double d = sorted[i] - mean;
      sq[i] = d * d;
    }
    const double sd =
        sorted.size() > 1
            ? std::sqrt(stable_sum(sq) / static_cast<double>(sorted.size() - 1))
            : 0.0;
    out += pooled.column_names[static_cast<std::size_t>(j)] + "," +
           format_double(mean) + "," + format_double(sd) + "," +
           format_double(quantile_type7_sorted(sorted, 0.025)) + "," +
           format_double(quantile_type7_sorted(sorted, 0.5)) + "," +
           format_double(quantile_type7_sorted(sorted, 0.975)) + ",";
    if (!pooled.gamma.empty()) {
      out += format_double(
          compensated_mean(pooled.gamma[static_cast<std::size_t>(j)]));
    }
    out += "\n";
  }
  return out;
}

std::string rhat_csv(const PosteriorDraws& draws) {
  std::string out = "parameter,rhat\n";
  for (int d = 0; d < draws.d_count; ++d) {
    for (int j = 0; j < draws.p; ++j) {
      out += "beta." + draws.column_names[static_cast<std::size_t>(j)] + ".d" +
             std::to_string(d + 1) + "," +
             format_double(draws.rhat_beta(d, j)) + "\n";
    }
  }
  out += "sigma2," + format_double(draws.rhat_sigma2) + "\n";
  out += "max," + format_double(draws.max_rhat) + "\n";
  return out;
}

// Convergence gate shared by the chain-running commands: under --strict a
// failed gate exits with the dedicated code after artifacts are written.
int convergence_exit(bool converged, double max_rhat, bool strict) {
  if (converged) return kExitOk;
  std::cerr << "warning: chains not converged (max split R-hat "
            << format_double(max_rhat) << ")\n";
  return strict ? kExitNotConverged : kExitOk;
}

// ---- simulate ----

ordered_json metrics_to_json(const MetricsRow& metrics) {
  ordered_json out;
  out["sensitivity"] = metrics.sensitivity;
  out["specificity"] = metrics.specificity;
  out["precision"] = metrics.precision;
  out["f1"] = metrics.f1;
  out["mse"] = metrics.mse;
  out["selected_count"] = metrics.selected_count;
  out["convention_flagged"] = metrics.convention_flagged;
  return out;
}

ordered_json scan_to_json(const std::vector<ScanRow>& scan) {
  ordered_json rows = ordered_json::array();
  for (const ScanRow& row : scan) {
    ordered_json r;
    r["x_pct"] = row.x_pct;
    r["sensitivity"] = row.sensitivity;
    r["specificity"] = row.specificity;
    r["distance"] = row.distance;
    r["best"] = row.best;
    rows.push_back(std::move(r));
  }
  return rows;
}

ordered_json replications_to_json(const RunConfig& config,
                                  const ExperimentResult& result,
                                  const std::vector<std::string>& arm_order) {
  ordered_json root;
  root["arm_order"] = arm_order;
  root["failed_replications"] = result.failed_replications;
  ordered_json reps = ordered_json::array();
  for (const ReplicationResult& rep : result.replications) {
    ordered_json r;
    r["index"] = rep.index;
    r["ok"] = rep.ok;
    if (!rep.error.empty()) r["error"] = rep.error;
    if (!rep.imputation_warnings.empty()) {
      r["imputation_warnings"] = rep.imputation_warnings;
    }
    ordered_json arms = ordered_json::array();
    for (const ArmResult& arm : rep.arms) {
      ordered_json a;
      a["arm"] = arm.arm;
      a["ok"] = arm.ok;
      if (!arm.error.empty()) a["error"] = arm.error;
      if (arm.ok) {
        a["metrics"] = metrics_to_json(arm.metrics);
        a["selected"] = arm.selected;
        a["max_rhat"] = json_number(arm.max_rhat);
        a["converged"] = arm.converged;
        a["ridge_fallback"] = arm.ridge_fallback;
        a["x_pct"] = arm.x_pct;
        a["lambda"] = arm.lambda;
        if (!arm.scan.empty()) a["scan"] = scan_to_json(arm.scan);
      }
      arms.push_back(std::move(a));
    }
    r["arms"] = std::move(arms);
    reps.push_back(std::move(r));
  }
  root["replications"] = std::move(reps);
  root["config"] = nlohmann::ordered_json::parse(dump_run_config(config));
  return root;
}

void write_scan_curves(const std::vector<ReplicationResult>& replications,
                       const std::vector<std::string>& arm_order,
                       const std::string& out_dir) {
  for (const std::string& arm : arm_order) {
    std::vector<std::vector<ScanRow>> per_replication;
    for (const ReplicationResult& rep : replications) {
      for (const ArmResult& result : rep.arms) {
        if (result.arm == arm && result.ok && !result.scan.empty()) {
          per_replication.push_back(result.scan);
        }
      }
    }
    if (per_replication.empty()) continue;
    const std::vector<ScanCurveRow> curve = scan_curve(per_replication);
    write_artifact(join_path(out_dir, "scan_" + arm + ".csv"),
                   scan_curve_csv(curve));
  }
}

int simulate_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.simulate) missing_section("simulate");
  const SimulateConfig& sim = *config.simulate;

  ScenarioConfig scenario = sim.scenario;
  scenario.seed = config.seed;

  std::vector<ArmSpec> arms;
  std::vector<std::string> arm_order;
  for (ArmKind kind : sim.arm_kinds) {
    arms.push_back(make_arm(kind, sim.chains));
    arm_order.push_back(arm_kind_name(kind));
  }

  const ExperimentResult result = run_experiment(
      scenario, arms, sim.mice, options.threads, sim.mse_mode);

  write_artifact(join_path(options.out_dir, "results.csv"),
                 table_report_csv(result.table));
  write_artifact(join_path(options.out_dir, "results_raw.csv"),
                 table_report_raw_csv(result.table));
  RunConfig resolved = config;
  resolved.simulate->scenario = scenario;
  write_artifact(join_path(options.out_dir, "replications.json"),
                 replications_to_json(resolved, result, arm_order).dump(2) +
                     "\n");
  write_scan_curves(result.replications, arm_order, options.out_dir);

  if (result.failed_replications > 0) {
    std::cerr << "warning: " << result.failed_replications << " of "
              << scenario.replications << " replications failed\n";
  }
  bool all_converged = true;
  double worst_rhat = 1.0;
  for (const ReplicationResult& rep : result.replications) {
    for (const ArmResult& arm : rep.arms) {
      if (!arm.ok) continue;
      if (!arm.converged) all_converged = false;
      worst_rhat = std::max(worst_rhat, arm.max_rhat);
    }
  }
  return convergence_exit(all_converged, worst_rhat, options.strict);
}

// ---- impute ----

int impute_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.impute) missing_section("impute");
  const IncompleteDataset incomplete =
      load_incomplete(config.impute->data, config.impute->mask);
  MiceConfig mice = config.impute->mice;
  mice.seed = config.seed;
  const MiceResult result = impute(incomplete, mice);
  for (const std::string& warning : result.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  const std::string path = join_path(options.out_dir, "imputed.csv");
  emit_stack_long(result.stack, path);
  std::cout << "wrote " << path << "\n";
  return kExitOk;
}

// ---- fit / select ----

PosteriorDraws fit_from_config(const std::string& stack_path,
                               const ModelSpec& model, ChainConfig chains,
                               std::uint64_t seed, int threads,
                               ImputedStack* stack_out) {
  LoadResult loaded = load_stack_long(stack_path);
  for (const std::string& warning : loaded.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  chains.seed = seed;
  PosteriorDraws draws = fit(model, loaded.stack, chains, threads);
  if (stack_out != nullptr) *stack_out = std::move(loaded.stack);
  return draws;
}

int fit_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.fit) missing_section("fit");
  const PosteriorDraws draws =
      fit_from_config(config.fit->stack, config.fit->model, config.fit->chains,
                      config.seed, options.threads, nullptr);
  const PooledPosterior pooled = pool(draws, true);
  write_artifact(join_path(options.out_dir, "posterior_summary.csv"),
                 posterior_summary_csv(pooled));
  write_artifact(join_path(options.out_dir, "rhat.csv"), rhat_csv(draws));
  return convergence_exit(draws.converged, draws.max_rhat, options.strict);
}

ordered_json selection_to_json(const SelectionResult& selection,
                               const PosteriorDraws& draws,
                               const SelectConfig& cfg) {
  ordered_json root;
  root["rule"] = selection_rule_name(selection.rule);
  if (std::isfinite(selection.x_pct)) root["x_pct"] = selection.x_pct;
  if (std::isfinite(selection.bic)) root["bic"] = selection.bic;
  if (cfg.rule == SelectRuleKind::BicScan) {
    root["bic_mode"] = bic_coefficient_mode_name(cfg.bic_mode);
    root["bic_zero_residual"] = selection.bic_zero_residual;
  }
  root["converged"] = draws.converged;
  root["max_rhat"] = json_number(draws.max_rhat);
  ordered_json covariates = ordered_json::array();
  std::vector<std::string> kept;
  for (std::size_t j = 0; j < selection.column_names.size(); ++j) {
    ordered_json c;
    c["name"] = selection.column_names[j];
    c["selected"] = selection.selected[j] != 0;
    c["estimate"] = selection.estimate[j];
    c["lo"] = selection.lo[j];
    c["hi"] = selection.hi[j];
    if (!selection.inclusion.empty()) {
      c["inclusion"] = selection.inclusion[j];
    }
    covariates.push_back(std::move(c));
    if (selection.selected[j] != 0) kept.push_back(selection.column_names[j]);
  }
  root["covariates"] = std::move(covariates);
  root["selected"] = kept;
  return root;
}

int select_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.select) missing_section("select");
  const SelectConfig& cfg = *config.select;

  ImputedStack stack;
  const PosteriorDraws draws = fit_from_config(
      cfg.stack, cfg.model, cfg.chains, config.seed, options.threads, &stack);
  if (!draws.converged && options.strict) {
    std::cerr << "error: chains not converged (max split R-hat "
              << format_double(draws.max_rhat) << ")\n";
    return kExitNotConverged;
  }
  const PooledPosterior pooled = pool(draws, true);

  SelectionResult selection;
  switch (cfg.rule) {
    case SelectRuleKind::CredibleInterval:
      selection = select_by_interval(pooled, cfg.x_pct);
      break;
    case SelectRuleKind::MedianIndicator:
      selection = select_by_median_indicator(draws, true);
      break;
    case SelectRuleKind::BicScan:
      selection = select_by_bic_scan(pooled, stack, cfg.bic_mode);
      break;
  }

  write_artifact(join_path(options.out_dir, "posterior_summary.csv"),
                 posterior_summary_csv(pooled));
  write_artifact(join_path(options.out_dir, "rhat.csv"), rhat_csv(draws));
  write_artifact(join_path(options.out_dir, "selection.json"),
                 selection_to_json(selection, draws, cfg).dump(2) + "\n");
  return convergence_exit(draws.converged, draws.max_rhat, options.strict);
}

// ---- tune ----

int tune_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.tune) missing_section("tune");
  const TuneConfig& cfg = *config.tune;

  LoadResult loaded = load_stack_long(cfg.stack);
  for (const std::string& warning : loaded.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  const ImputedStack& stack = loaded.stack;
  const Eigen::MatrixXd beta_ols = per_dataset_ols(stack);

  const SearchSpace space = cfg.model == ModelKind::SpikeNormal
                                ? spike_normal_space()
                                : spike_laplace_space();

  std::vector<char> converged_log;
  const auto evaluator = [&](const std::vector<double>& values) -> double {
    converged_log.push_back(0);
    ModelSpec model = ModelSpec::defaults(cfg.model);
    if (cfg.model == ModelKind::SpikeNormal) {
      model.v0 = values[0];
      model.p0 = values[1];
    } else {
      model.lambda = values[0];
      model.a = values[1];
      model.b = values[2];
    }
    model.validate();
    ChainConfig chains = cfg.chains;
    chains.seed = config.seed;  // same seed every round: smooth objective
    const PosteriorDraws draws = fit(model, stack, chains, options.threads);
    converged_log.back() = draws.converged ? 1 : 0;
    const PooledPosterior pooled = pool(draws, true);
    const SelectionResult selection = select_by_median_indicator(draws, true);

    Eigen::MatrixXd beta_bar = pooled.per_dataset_mean_active;
    for (int j = 0; j < pooled.p; ++j) {
      if (selection.selected[static_cast<std::size_t>(j)] == 0) {
        beta_bar.col(j).setZero();
      }
    }
    return modified_bic(stack, beta_bar, beta_ols).value;
  };

  const BoResult result = optimize(space, evaluator, cfg.budget, config.seed);

  std::string trace = "round";
  for (const ParameterSpec& parameter : space.parameters) {
    trace += "," + parameter.name;
  }
  trace += ",bic,best_so_far,failed\n";
  for (std::size_t i = 0; i < result.trace.history.size(); ++i) {
    const BoPoint& point = result.trace.history[i];
    trace += std::to_string(i + 1);
    for (double value : point.values) trace += "," + format_double(value);
    trace += "," + format_double(point.objective) + "," +
             format_double(result.trace.best_so_far[i]) + "," +
             (point.failed ? "1" : "0") + "\n";
  }
  write_artifact(join_path(options.out_dir, "tune_trace.csv"), trace);

  ordered_json best;
  best["model"] = model_kind_name(cfg.model);
  ordered_json parameters;
  for (std::size_t d = 0; d < space.parameters.size(); ++d) {
    parameters[space.parameters[d].name] = result.best[d];
  }
  best["parameters"] = std::move(parameters);
  best["bic"] = json_number(result.best_objective);
  write_artifact(join_path(options.out_dir, "best.json"),
                 best.dump(2) + "\n");

  bool best_converged = true;
  for (std::size_t i = 0; i < result.trace.history.size(); ++i) {
    const BoPoint& point = result.trace.history[i];
    if (!point.failed && point.objective == result.best_objective) {
      best_converged = i < converged_log.size() && converged_log[i] != 0;
      break;
    }
  }
  return convergence_exit(best_converged, 0.0, options.strict);
}

// ---- report ----

int report_body(const RunConfig& config, const CommandOptions& options) {
  if (!config.report) missing_section("report");
  std::ifstream in(config.report->experiment);
  if (!in) {
    throw std::runtime_error("report: cannot open " +
                             config.report->experiment);
  }
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("report: " + config.report->experiment +
                             " is not a valid replication log: " + e.what());
  }
  if (!root.is_object() || !root.contains("arm_order") ||
      !root.contains("replications")) {
    throw std::runtime_error("report: " + config.report->experiment +
                             " is not a replication log");
  }

  std::vector<std::string> arm_order;
  for (const auto& name : root["arm_order"]) {
    arm_order.push_back(name.get<std::string>());
  }

  std::vector<ReplicationResult> replications;
  for (const auto& r : root["replications"]) {
    ReplicationResult rep;
    rep.index = r.value("index", 0);
    rep.ok = r.value("ok", false);
    for (const auto& a : r["arms"]) {
      ArmResult arm;
      arm.arm = a.value("arm", "");
      arm.ok = a.value("ok", false);
      if (arm.ok && a.contains("metrics")) {
        const auto& m = a["metrics"];
        arm.metrics.sensitivity = m.value("sensitivity", 0.0);
        arm.metrics.specificity = m.value("specificity", 0.0);
        arm.metrics.precision = m.value("precision", 0.0);
        arm.metrics.f1 = m.value("f1", 0.0);
        arm.metrics.mse = m.value("mse", 0.0);
      }
      if (arm.ok && a.contains("scan")) {
        for (const auto& s : a["scan"]) {
          ScanRow row;
          row.x_pct = s.value("x_pct", 0.0);
          row.sensitivity = s.value("sensitivity", 0.0);
          row.specificity = s.value("specificity", 0.0);
          row.distance = s.value("distance", 0.0);
          row.best = s.value("best", false);
          arm.scan.push_back(std::move(row));
        }
      }
      rep.arms.push_back(std::move(arm));
    }
    replications.push_back(std::move(rep));
  }

  const std::vector<ArmSummary> table = summarize_arms(replications, arm_order);
  write_artifact(join_path(options.out_dir, "results.csv"),
                 table_report_csv(table));
  write_artifact(join_path(options.out_dir, "results_raw.csv"),
                 table_report_raw_csv(table));
  write_scan_curves(replications, arm_order, options.out_dir);
  return kExitOk;
}

}  // namespace

int cmd_simulate(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return simulate_body(config, options); });
}

int cmd_impute(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return impute_body(config, options); });
}

int cmd_fit(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return fit_body(config, options); });
}

int cmd_select(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return select_body(config, options); });
}

int cmd_tune(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return tune_body(config, options); });
}

int cmd_report(const CommandOptions& options) {
  return run_command(
      options, [&](const RunConfig& config) { return report_body(config, options); });
}

}  // namespace bmilasso

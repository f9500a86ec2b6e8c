#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bmilasso/experiment.hpp"

namespace bmilasso {

// Parsed command configurations. The JSON schema is versioned; every key is
// checked, and an unknown or ill-typed field raises an error carrying the
// full path to the offending key. Values validate before any compute runs.

struct SimulateConfig {
  ScenarioConfig scenario;
  std::vector<ArmKind> arm_kinds;
  MiceConfig mice;
  ChainConfig chains;
  MseSigmaMode mse_mode = MseSigmaMode::BinaryMc;
};

struct ImputeConfig {
  std::string data;  // covariate/response CSV
  std::string mask;  // observation mask CSV
  MiceConfig mice;
};

struct FitConfig {
  std::string stack;  // long-format stack CSV
  ModelSpec model;
  ChainConfig chains;
};

enum class SelectRuleKind { CredibleInterval, MedianIndicator, BicScan };

std::string select_rule_kind_name(SelectRuleKind kind);

struct SelectConfig {
  std::string stack;
  ModelSpec model;
  ChainConfig chains;
  SelectRuleKind rule = SelectRuleKind::CredibleInterval;
  double x_pct = 50.0;
  BicCoefficientMode bic_mode = BicCoefficientMode::PosteriorMean;
};

struct TuneConfig {
  std::string stack;
  ModelKind model = ModelKind::SpikeNormal;  // spike models only
  ChainConfig chains;
  int budget = 20;
};

struct ReportConfig {
  std::string experiment;  // replication log written by the simulate command
};

struct RunConfig {
  int version = 1;
  std::uint64_t seed = 0;
  std::optional<SimulateConfig> simulate;
  std::optional<ImputeConfig> impute;
  std::optional<FitConfig> fit;
  std::optional<SelectConfig> select;
  std::optional<TuneConfig> tune;
  std::optional<ReportConfig> report;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical rendering of the resolved configuration (presets expanded,
// defaults filled in); printed by --dry-run and stable across reruns.
std::string dump_run_config(const RunConfig& config);

}  // namespace bmilasso

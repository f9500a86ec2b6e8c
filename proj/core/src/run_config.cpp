#include "bmilasso/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bmilasso {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail_at(const std::string& path, const std::string& message) {
  throw std::invalid_argument("config: " + path + ": " + message);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail_at(path + "." + it.key(), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* value = find(obj, key);
  if (value == nullptr) fail_at(path + "." + key, "required key is missing");
  return *value;
}

void require_object(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail_at(path, "expected an object");
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail_at(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail_at(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  fail_at(path, "expected a non-negative integer");
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail_at(path, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail_at(path, "expected a string");
  return v.get<std::string>();
}

double number_or(const json& obj, const std::string& path, const char* key,
                 double fallback) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_number(*v, path + "." + key);
}

int int_or(const json& obj, const std::string& path, const char* key,
           int fallback) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_int(*v, path + "." + key);
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool fallback) {
  const json* v = find(obj, key);
  return v == nullptr ? fallback : as_bool(*v, path + "." + key);
}

std::string required_string(const json& obj, const std::string& path,
                            const char* key) {
  return as_string(require(obj, path, key), path + "." + key);
}

MissingMechanism parse_mechanism(const json& v, const std::string& path) {
  const std::string name = as_string(v, path);
  if (name == "mcar") return MissingMechanism::Mcar;
  if (name == "mar") return MissingMechanism::Mar;
  fail_at(path, "expected \"mcar\" or \"mar\"");
}

void forbid(const json& obj, const std::string& path,
            std::initializer_list<const char*> keys, const std::string& why) {
  for (const char* key : keys) {
    if (find(obj, key) != nullptr) fail_at(path + "." + key, why);
  }
}

MissingSpec parse_missing(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path,
             {"mechanism", "target_cols", "mcar_frac", "alpha0", "slope_x",
              "slope_y", "driver_offset"});
  MissingSpec spec;
  spec.mechanism = parse_mechanism(require(obj, path, "mechanism"),
                                   path + ".mechanism");
  const json& cols = require(obj, path, "target_cols");
  if (!cols.is_array()) fail_at(path + ".target_cols", "expected an array");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    spec.target_cols.push_back(
        as_int(cols[i], path + ".target_cols[" + std::to_string(i) + "]"));
  }
  spec.mcar_frac = number_or(obj, path, "mcar_frac", spec.mcar_frac);
  spec.alpha0 = number_or(obj, path, "alpha0", spec.alpha0);
  spec.slope_x = number_or(obj, path, "slope_x", spec.slope_x);
  spec.slope_y = number_or(obj, path, "slope_y", spec.slope_y);
  spec.driver_offset = int_or(obj, path, "driver_offset", spec.driver_offset);
  return spec;
}

ScenarioConfig parse_scenario(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path,
             {"preset", "mechanism", "corr", "n", "p", "high_missing",
              "cov_kind", "beta_true", "binary", "replications", "missing"});

  ScenarioConfig cfg;
  const json* preset = find(obj, "preset");
  if (preset != nullptr) {
    const std::string name = as_string(*preset, path + ".preset");
    const MissingMechanism mechanism = parse_mechanism(
        require(obj, path, "mechanism"), path + ".mechanism");
    const std::string preset_note = "not allowed with preset \"" + name + "\"";
    forbid(obj, path, {"cov_kind", "beta_true", "binary", "missing"},
           preset_note);
    if (name == "a") {
      forbid(obj, path, {"n", "p", "high_missing"}, preset_note);
      const double corr =
          as_number(require(obj, path, "corr"), path + ".corr");
      if (!(corr >= 0.0 && corr < 1.0)) {
        fail_at(path + ".corr", "must lie in [0, 1)");
      }
      cfg = scenario_a(corr, mechanism);
    } else if (name == "b") {
      forbid(obj, path, {"corr"}, preset_note);
      const int n = as_int(require(obj, path, "n"), path + ".n");
      const int p = as_int(require(obj, path, "p"), path + ".p");
      const bool high = bool_or(obj, path, "high_missing", false);
      cfg = scenario_b(n, p, mechanism,
                       high ? MissingLevel::High : MissingLevel::Low);
    } else if (name == "c") {
      forbid(obj, path, {"n", "p", "high_missing", "corr"}, preset_note);
      cfg = scenario_c(mechanism);
    } else {
      fail_at(path + ".preset", "expected \"a\", \"b\" or \"c\"");
    }
  } else {
    forbid(obj, path, {"mechanism", "high_missing"},
           "only allowed together with a preset");
    cfg.n = as_int(require(obj, path, "n"), path + ".n");
    cfg.p = as_int(require(obj, path, "p"), path + ".p");
    const double corr = as_number(require(obj, path, "corr"), path + ".corr");
    if (!(corr >= 0.0 && corr < 1.0)) {
      fail_at(path + ".corr", "must lie in [0, 1)");
    }
    cfg.corr = corr;
    const json* cov = find(obj, "cov_kind");
    if (cov != nullptr) {
      const std::string kind = as_string(*cov, path + ".cov_kind");
      if (kind == "compound_symmetry") {
        cfg.cov_kind = CovKind::CompoundSymmetry;
      } else if (kind == "ar1") {
        cfg.cov_kind = CovKind::Ar1;
      } else {
        fail_at(path + ".cov_kind", "expected \"compound_symmetry\" or \"ar1\"");
      }
    }
    const json& beta = require(obj, path, "beta_true");
    if (!beta.is_array()) fail_at(path + ".beta_true", "expected an array");
    cfg.beta_true.resize(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t j = 0; j < beta.size(); ++j) {
      cfg.beta_true[static_cast<Eigen::Index>(j)] = as_number(
          beta[j], path + ".beta_true[" + std::to_string(j) + "]");
    }
    cfg.binary = bool_or(obj, path, "binary", false);
    cfg.missing = parse_missing(require(obj, path, "missing"), path + ".missing");
  }

  cfg.replications = int_or(obj, path, "replications", cfg.replications);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail_at(path, e.what());
  }
  return cfg;
}

MiceConfig parse_mice(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"d_count", "cycles", "pmm_donors"});
  MiceConfig cfg;
  cfg.d_count = int_or(obj, path, "d_count", cfg.d_count);
  cfg.cycles = int_or(obj, path, "cycles", cfg.cycles);
  cfg.pmm_donors = int_or(obj, path, "pmm_donors", cfg.pmm_donors);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail_at(path, e.what());
  }
  return cfg;
}

ChainConfig parse_chains(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path,
             {"n_chains", "burn_in", "kept", "thin", "rhat_threshold",
              "compute_rhat"});
  ChainConfig cfg;
  cfg.n_chains = int_or(obj, path, "n_chains", cfg.n_chains);
  cfg.burn_in = int_or(obj, path, "burn_in", cfg.burn_in);
  cfg.kept = int_or(obj, path, "kept", cfg.kept);
  cfg.thin = int_or(obj, path, "thin", cfg.thin);
  cfg.rhat_threshold =
      number_or(obj, path, "rhat_threshold", cfg.rhat_threshold);
  cfg.compute_rhat = bool_or(obj, path, "compute_rhat", cfg.compute_rhat);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    fail_at(path, e.what());
  }
  return cfg;
}

ModelSpec parse_model(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path,
             {"kind", "r", "s", "p0", "v0", "a", "b", "lambda",
              "gamma_convention"});
  const std::string kind_name = required_string(obj, path, "kind");
  ModelKind kind;
  try {
    kind = model_kind_from_name(kind_name);
  } catch (const std::exception&) {
    fail_at(path + ".kind", "unknown model \"" + kind_name + "\"");
  }
  ModelSpec model = ModelSpec::defaults(kind);
  model.r = number_or(obj, path, "r", model.r);
  model.s = number_or(obj, path, "s", model.s);
  model.p0 = number_or(obj, path, "p0", model.p0);
  model.v0 = number_or(obj, path, "v0", model.v0);
  model.a = number_or(obj, path, "a", model.a);
  model.b = number_or(obj, path, "b", model.b);
  model.lambda = number_or(obj, path, "lambda", model.lambda);
  const json* conv = find(obj, "gamma_convention");
  if (conv != nullptr) {
    const std::string name = as_string(*conv, path + ".gamma_convention");
    if (name == "scale") {
      model.gamma_convention = GammaConvention::Scale;
    } else if (name == "rate") {
      model.gamma_convention = GammaConvention::Rate;
    } else {
      fail_at(path + ".gamma_convention", "expected \"scale\" or \"rate\"");
    }
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    fail_at(path, e.what());
  }
  return model;
}

SimulateConfig parse_simulate(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"scenario", "arms", "mice", "chains", "mse_sigma"});
  SimulateConfig cfg;
  cfg.scenario = parse_scenario(require(obj, path, "scenario"),
                                path + ".scenario");
  const json* arms = find(obj, "arms");
  if (arms != nullptr) {
    if (!arms->is_array() || arms->empty()) {
      fail_at(path + ".arms", "expected a non-empty array of arm names");
    }
    for (std::size_t i = 0; i < arms->size(); ++i) {
      const std::string item_path = path + ".arms[" + std::to_string(i) + "]";
      const std::string name = as_string((*arms)[i], item_path);
      try {
        cfg.arm_kinds.push_back(arm_kind_from_name(name));
      } catch (const std::exception&) {
        fail_at(item_path, "unknown arm \"" + name + "\"");
      }
    }
  } else {
    for (const ArmSpec& arm : default_arms(ChainConfig{})) {
      cfg.arm_kinds.push_back(arm.kind);
    }
  }
  const json* mice = find(obj, "mice");
  if (mice != nullptr) cfg.mice = parse_mice(*mice, path + ".mice");
  const json* chains = find(obj, "chains");
  if (chains != nullptr) cfg.chains = parse_chains(*chains, path + ".chains");
  const json* mse = find(obj, "mse_sigma");
  if (mse != nullptr) {
    const std::string name = as_string(*mse, path + ".mse_sigma");
    if (name == "binary_mc") {
      cfg.mse_mode = MseSigmaMode::BinaryMc;
    } else if (name == "generator") {
      cfg.mse_mode = MseSigmaMode::Generator;
    } else {
      fail_at(path + ".mse_sigma", "expected \"binary_mc\" or \"generator\"");
    }
  }
  return cfg;
}

ImputeConfig parse_impute(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"data", "mask", "mice"});
  ImputeConfig cfg;
  cfg.data = required_string(obj, path, "data");
  cfg.mask = required_string(obj, path, "mask");
  const json* mice = find(obj, "mice");
  if (mice != nullptr) cfg.mice = parse_mice(*mice, path + ".mice");
  return cfg;
}

FitConfig parse_fit(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"stack", "model", "chains"});
  FitConfig cfg;
  cfg.stack = required_string(obj, path, "stack");
  cfg.model = parse_model(require(obj, path, "model"), path + ".model");
  const json* chains = find(obj, "chains");
  if (chains != nullptr) cfg.chains = parse_chains(*chains, path + ".chains");
  return cfg;
}

SelectConfig parse_select(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"stack", "model", "chains", "rule"});
  SelectConfig cfg;
  cfg.stack = required_string(obj, path, "stack");
  cfg.model = parse_model(require(obj, path, "model"), path + ".model");
  const json* chains = find(obj, "chains");
  if (chains != nullptr) cfg.chains = parse_chains(*chains, path + ".chains");

  const json* rule = find(obj, "rule");
  if (rule != nullptr) {
    const std::string rule_path = path + ".rule";
    require_object(*rule, rule_path);
    check_keys(*rule, rule_path, {"type", "x_pct", "bic_mode"});
    const std::string type = required_string(*rule, rule_path, "type");
    if (type == "credible_interval") {
      cfg.rule = SelectRuleKind::CredibleInterval;
    } else if (type == "median_indicator") {
      cfg.rule = SelectRuleKind::MedianIndicator;
    } else if (type == "bic_scan") {
      cfg.rule = SelectRuleKind::BicScan;
    } else {
      fail_at(rule_path + ".type",
              "expected \"credible_interval\", \"median_indicator\" or "
              "\"bic_scan\"");
    }
    cfg.x_pct = number_or(*rule, rule_path, "x_pct", cfg.x_pct);
    if (!(cfg.x_pct > 0.0 && cfg.x_pct < 100.0)) {
      fail_at(rule_path + ".x_pct", "must lie in (0, 100)");
    }
    const json* mode = find(*rule, "bic_mode");
    if (mode != nullptr) {
      const std::string name = as_string(*mode, rule_path + ".bic_mode");
      if (name == "posterior_mean") {
        cfg.bic_mode = BicCoefficientMode::PosteriorMean;
      } else if (name == "refit_ols") {
        cfg.bic_mode = BicCoefficientMode::RefitOls;
      } else {
        fail_at(rule_path + ".bic_mode",
                "expected \"posterior_mean\" or \"refit_ols\"");
      }
    }
  } else if (is_spike_model(cfg.model.kind)) {
    cfg.rule = SelectRuleKind::MedianIndicator;
  }

  const bool spike = is_spike_model(cfg.model.kind);
  if (spike && cfg.rule != SelectRuleKind::MedianIndicator) {
    fail_at(path + ".rule.type",
            "rule " + select_rule_kind_name(cfg.rule) +
                " is incompatible with model " +
                model_kind_name(cfg.model.kind) +
                "; spike models use the median indicator rule");
  }
  if (!spike && cfg.rule == SelectRuleKind::MedianIndicator) {
    fail_at(path + ".rule.type",
            "rule median_indicator is incompatible with model " +
                model_kind_name(cfg.model.kind) +
                "; it needs inclusion indicators");
  }
  return cfg;
}

TuneConfig parse_tune(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"stack", "model", "budget", "chains"});
  TuneConfig cfg;
  cfg.stack = required_string(obj, path, "stack");
  const std::string kind_name = required_string(obj, path, "model");
  try {
    cfg.model = model_kind_from_name(kind_name);
  } catch (const std::exception&) {
    fail_at(path + ".model", "unknown model \"" + kind_name + "\"");
  }
  if (!is_spike_model(cfg.model)) {
    fail_at(path + ".model",
            "tuning covers the spike models only; got " + kind_name);
  }
  cfg.budget = int_or(obj, path, "budget", cfg.budget);
  if (cfg.budget < 3) fail_at(path + ".budget", "must be at least 3");
  const json* chains = find(obj, "chains");
  if (chains != nullptr) cfg.chains = parse_chains(*chains, path + ".chains");
  return cfg;
}

ReportConfig parse_report(const json& obj, const std::string& path) {
  require_object(obj, path);
  check_keys(obj, path, {"experiment"});
  ReportConfig cfg;
  cfg.experiment = required_string(obj, path, "experiment");
  return cfg;
}

std::string mechanism_name(MissingMechanism mechanism) {
  return mechanism == MissingMechanism::Mcar ? "mcar" : "mar";
}

std::string cov_kind_name(CovKind kind) {
  return kind == CovKind::CompoundSymmetry ? "compound_symmetry" : "ar1";
}

ordered_json dump_missing(const MissingSpec& spec) {
  ordered_json out;
  out["mechanism"] = mechanism_name(spec.mechanism);
  out["target_cols"] = spec.target_cols;
  out["mcar_frac"] = spec.mcar_frac;
  out["alpha0"] = spec.alpha0;
  out["slope_x"] = spec.slope_x;
  out["slope_y"] = spec.slope_y;
  out["driver_offset"] = spec.driver_offset;
  return out;
}

ordered_json dump_scenario(const ScenarioConfig& cfg) {
  ordered_json out;
  out["n"] = cfg.n;
  out["p"] = cfg.p;
  out["corr"] = cfg.corr;
  out["cov_kind"] = cov_kind_name(cfg.cov_kind);
  out["beta_true"] = std::vector<double>(
      cfg.beta_true.data(), cfg.beta_true.data() + cfg.beta_true.size());
  out["binary"] = cfg.binary;
  out["replications"] = cfg.replications;
  out["missing"] = dump_missing(cfg.missing);
  return out;
}

ordered_json dump_mice(const MiceConfig& cfg) {
  ordered_json out;
  out["d_count"] = cfg.d_count;
  out["cycles"] = cfg.cycles;
  out["pmm_donors"] = cfg.pmm_donors;
  return out;
}

ordered_json dump_chains(const ChainConfig& cfg) {
  ordered_json out;
  out["n_chains"] = cfg.n_chains;
  out["burn_in"] = cfg.burn_in;
  out["kept"] = cfg.kept;
  out["thin"] = cfg.thin;
  out["rhat_threshold"] = cfg.rhat_threshold;
  out["compute_rhat"] = cfg.compute_rhat;
  return out;
}

ordered_json dump_model(const ModelSpec& model) {
  ordered_json out;
  out["kind"] = model_kind_name(model.kind);
  out["r"] = model.r;
  out["s"] = model.s;
  out["p0"] = model.p0;
  out["v0"] = model.v0;
  out["a"] = model.a;
  out["b"] = model.b;
  out["lambda"] = model.lambda;
  out["gamma_convention"] =
      model.gamma_convention == GammaConvention::Scale ? "scale" : "rate";
  return out;
}

}  // namespace

std::string select_rule_kind_name(SelectRuleKind kind) {
  switch (kind) {
    case SelectRuleKind::CredibleInterval: return "credible_interval";
    case SelectRuleKind::MedianIndicator: return "median_indicator";
    case SelectRuleKind::BicScan: return "bic_scan";
  }
  throw std::invalid_argument("config: unknown selection rule");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") +
                                e.what());
  }
  require_object(root, "config");
  check_keys(root, "config",
             {"version", "seed", "simulate", "impute", "fit", "select",
              "tune", "report"});

  RunConfig config;
  config.version = as_int(require(root, "config", "version"), "config.version");
  if (config.version != 1) {
    fail_at("config.version", "unsupported schema version " +
                                  std::to_string(config.version) +
                                  "; expected 1");
  }
  const json* seed = find(root, "seed");
  if (seed != nullptr) config.seed = as_u64(*seed, "config.seed");

  const json* simulate = find(root, "simulate");
  if (simulate != nullptr) {
    config.simulate = parse_simulate(*simulate, "config.simulate");
  }
  const json* impute = find(root, "impute");
  if (impute != nullptr) {
    config.impute = parse_impute(*impute, "config.impute");
  }
  const json* fit = find(root, "fit");
  if (fit != nullptr) config.fit = parse_fit(*fit, "config.fit");
  const json* select = find(root, "select");
  if (select != nullptr) {
    config.select = parse_select(*select, "config.select");
  }
  const json* tune = find(root, "tune");
  if (tune != nullptr) config.tune = parse_tune(*tune, "config.tune");
  const json* report = find(root, "report");
  if (report != nullptr) {
    config.report = parse_report(*report, "config.report");
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string dump_run_config(const RunConfig& config) {
  ordered_json root;
  root["version"] = config.version;
  root["seed"] = config.seed;
  if (config.simulate) {
    ordered_json section;
    section["scenario"] = dump_scenario(config.simulate->scenario);
    std::vector<std::string> arms;
    for (ArmKind kind : config.simulate->arm_kinds) {
      arms.push_back(arm_kind_name(kind));
    }
    section["arms"] = arms;
    section["mice"] = dump_mice(config.simulate->mice);
    section["chains"] = dump_chains(config.simulate->chains);
    section["mse_sigma"] = config.simulate->mse_mode == MseSigmaMode::BinaryMc
                               ? "binary_mc"
                               : "generator";
    root["simulate"] = std::move(section);
  }
  if (config.impute) {
    ordered_json section;
    section["data"] = config.impute->data;
    section["mask"] = config.impute->mask;
    section["mice"] = dump_mice(config.impute->mice);
    root["impute"] = std::move(section);
  }
  if (config.fit) {
    ordered_json section;
    section["stack"] = config.fit->stack;
    section["model"] = dump_model(config.fit->model);
    section["chains"] = dump_chains(config.fit->chains);
    root["fit"] = std::move(section);
  }
  if (config.select) {
    ordered_json section;
    section["stack"] = config.select->stack;
    section["model"] = dump_model(config.select->model);
    section["chains"] = dump_chains(config.select->chains);
    ordered_json rule;
    rule["type"] = select_rule_kind_name(config.select->rule);
    rule["x_pct"] = config.select->x_pct;
    rule["bic_mode"] =
        config.select->bic_mode == BicCoefficientMode::PosteriorMean
            ? "posterior_mean"
            : "refit_ols";
    section["rule"] = std::move(rule);
    root["select"] = std::move(section);
  }
  if (config.tune) {
    ordered_json section;
    section["stack"] = config.tune->stack;
    section["model"] = model_kind_name(config.tune->model);
    section["budget"] = config.tune->budget;
    section["chains"] = dump_chains(config.tune->chains);
    root["tune"] = std::move(section);
  }
  if (config.report) {
    ordered_json section;
    section["experiment"] = config.report->experiment;
    root["report"] = std::move(section);
  }
  return root.dump(2) + "\n";
}

}  // namespace bmilasso

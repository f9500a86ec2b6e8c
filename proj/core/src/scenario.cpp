#include "bmilasso/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "bmilasso/distributions.hpp"
#include "bmilasso/numeric.hpp"

namespace bmilasso {

namespace {

constexpr int kMaskRetries = 100;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("scenario: " + message);
}

Eigen::MatrixXd build_sigma(int p, double corr, CovKind kind) {
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i == j) {
        sigma(i, j) = 1.0;
      } else if (kind == CovKind::CompoundSymmetry) {
        sigma(i, j) = corr;
      } else {
        sigma(i, j) = std::pow(corr, std::abs(i - j));
      }
    }
  }
  return sigma;
}

std::vector<std::string> default_names(int p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Eigen::VectorXd unit_beta(int p, const std::vector<int>& active_one_based) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int j : active_one_based) beta[j - 1] = 1.0;
  return beta;
}

std::vector<int> iota_cols(int first_one_based, int last_one_based) {
  std::vector<int> cols;
  for (int j = first_one_based; j <= last_one_based; ++j) cols.push_back(j - 1);
  return cols;
}

}  // namespace

void MissingSpec::validate(int p) const {
  if (target_cols.empty()) fail("missing spec has no target columns");
  std::set<int> seen;
  for (int j : target_cols) {
    if (j < 0 || j >= p) {
      fail("target column " + std::to_string(j) + " outside [0, " +
           std::to_string(p) + ")");
    }
    if (!seen.insert(j).second) {
      fail("target column " + std::to_string(j) + " listed twice");
    }
  }
  if (mechanism == MissingMechanism::Mcar) {
    if (!(mcar_frac >= 0.0 && mcar_frac < 1.0)) {
      fail("mcar_frac must lie in [0, 1)");
    }
  } else {
    if (driver_offset <= 0) fail("driver_offset must be positive");
    for (int j : target_cols) {
      const int driver = j - driver_offset;
      if (driver < 0 || driver >= p) {
        fail("column " + std::to_string(j) + " has no driver column " +
             std::to_string(driver));
      }
      if (seen.count(driver) != 0) {
        fail("driver column " + std::to_string(driver) +
             " must stay fully observed but is itself a target");
      }
    }
    if (!std::isfinite(alpha0) || !std::isfinite(slope_x) ||
        !std::isfinite(slope_y)) {
      fail("missingness model coefficients must be finite");
    }
  }
}

void ScenarioConfig::validate() const {
  if (n < 3) fail("n must be at least 3");
  if (p < 1) fail("p must be at least 1");
  if (!(corr >= 0.0 && corr < 1.0)) fail("corr must lie in [0, 1)");
  if (beta_true.size() != p) {
    fail("beta_true has " + std::to_string(beta_true.size()) +
         " entries, expected " + std::to_string(p));
  }
  if (beta_true.norm() == 0.0) {
    fail("beta_true must have at least one nonzero entry");
  }
  if (replications < 1) fail("replications must be at least 1");
  missing.validate(p);
}

ScenarioConfig scenario_a(double corr, MissingMechanism mechanism) {
  ScenarioConfig cfg;
  cfg.n = 100;
  cfg.p = 20;
  cfg.corr = corr;
  cfg.cov_kind = CovKind::CompoundSymmetry;
  cfg.beta_true = unit_beta(20, {1, 2, 5, 11, 12, 15});
  cfg.missing.mechanism = mechanism;
  cfg.missing.target_cols = iota_cols(11, 20);
  cfg.missing.mcar_frac = 0.05;
  cfg.missing.alpha0 = -4.0;
  return cfg;
}

ScenarioConfig scenario_b(int n, int p, MissingMechanism mechanism,
                          MissingLevel level) {
  if (p != 20 && p != 40) fail("scenario_b supports p = 20 or p = 40");
  if (level == MissingLevel::High && p != 20) {
    fail("the high-missingness cell uses p = 20");
  }
  ScenarioConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.corr = 0.5;
  cfg.cov_kind = CovKind::Ar1;
  if (p == 20) {
    cfg.beta_true = unit_beta(20, {1, 2, 5, 11, 12, 15});
  } else {
    cfg.beta_true =
        unit_beta(40, {1, 2, 5, 11, 12, 15, 21, 22, 25, 31, 32, 35});
  }
  cfg.missing.mechanism = mechanism;
  if (p == 20) {
    if (level == MissingLevel::High) {
      if (mechanism == MissingMechanism::Mcar) {
        cfg.missing.target_cols = iota_cols(1, 20);
      } else {
        cfg.missing.target_cols = iota_cols(11, 20);
      }
      cfg.missing.mcar_frac = 0.05;
      cfg.missing.alpha0 = -1.8;
    } else {
      cfg.missing.target_cols = iota_cols(11, 20);
      cfg.missing.mcar_frac = 0.05;
      cfg.missing.alpha0 = -4.0;
    }
  } else {
    std::vector<int> cols = iota_cols(11, 20);
    std::vector<int> tail = iota_cols(31, 40);
    cols.insert(cols.end(), tail.begin(), tail.end());
    cfg.missing.target_cols = std::move(cols);
    cfg.missing.mcar_frac = 0.025;
    cfg.missing.alpha0 = -4.0;
  }
  return cfg;
}

ScenarioConfig scenario_c(MissingMechanism mechanism) {
  ScenarioConfig cfg = scenario_b(100, 20, mechanism, MissingLevel::Low);
  cfg.binary = true;
  return cfg;
}

Eigen::MatrixXd scenario_population_covariance(const ScenarioConfig& cfg) {
  return build_sigma(cfg.p, cfg.corr, cfg.cov_kind);
}

double scenario_noise_variance(const ScenarioConfig& cfg) {
  const Eigen::MatrixXd sigma = scenario_population_covariance(cfg);
  return cfg.beta_true.dot(sigma * cfg.beta_true);
}

GeneratedData generate(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  Eigen::MatrixXd sigma = scenario_population_covariance(cfg);
  const double sigma2 = cfg.beta_true.dot(sigma * cfg.beta_true);
  const int pivot = cholesky_lower_in_place(sigma);
  if (pivot >= 0) {
    fail("covariance is not positive definite at pivot " +
         std::to_string(pivot));
  }

  Eigen::MatrixXd z(cfg.n, cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p; ++j) z(i, j) = sample_normal(rng);
  }
  Eigen::MatrixXd x = z * sigma.triangularView<Eigen::Lower>().transpose();
  if (cfg.binary) {
    for (int i = 0; i < cfg.n; ++i) {
      for (int j = 0; j < cfg.p; ++j) x(i, j) = x(i, j) >= 0.0 ? 1.0 : 0.0;
    }
  }

  const double noise_sd = std::sqrt(sigma2);
  Eigen::VectorXd y = x * cfg.beta_true;
  for (int i = 0; i < cfg.n; ++i) y[i] += noise_sd * sample_normal(rng);

  GeneratedData out;
  out.data.x = std::move(x);
  out.data.y = std::move(y);
  out.data.column_names = default_names(cfg.p);
  out.data.column_kinds.assign(
      static_cast<std::size_t>(cfg.p),
      cfg.binary ? ColumnKind::Binary : ColumnKind::Continuous);
  out.data.validate();
  out.truth.resize(static_cast<std::size_t>(cfg.p));
  for (int j = 0; j < cfg.p; ++j) {
    out.truth[static_cast<std::size_t>(j)] = cfg.beta_true[j] != 0.0 ? 1 : 0;
  }
  return out;
}

namespace {

// Marks exactly ceil(frac * n) uniformly chosen rows of one column.
void mask_mcar_column(std::vector<std::uint8_t>& column_mask, double frac,
                      Rng& rng) {
  const int n = static_cast<int>(column_mask.size());
  const int k = static_cast<int>(std::ceil(frac * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int t = 0; t < k; ++t) {
    const int pick =
        t + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n - t)));
    std::swap(order[static_cast<std::size_t>(t)],
              order[static_cast<std::size_t>(pick)]);
    column_mask[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = 0;
  }
}

void mask_mar_column(std::vector<std::uint8_t>& column_mask,
                     const Dataset& data, int col, const MissingSpec& spec,
                     Rng& rng) {
  const int driver = col - spec.driver_offset;
  for (int i = 0; i < data.n(); ++i) {
    const double eta = spec.alpha0 + spec.slope_x * data.x(i, driver) +
                       spec.slope_y * data.y[i];
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    if (rng.uniform() < prob) column_mask[static_cast<std::size_t>(i)] = 0;
  }
}

}  // namespace

IncompleteDataset impose_missing(const Dataset& data, const MissingSpec& spec,
                                 Rng& rng) {
  data.validate();
  spec.validate(data.p());
  IncompleteDataset out;
  out.data = data;
  out.mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Ones(
      data.n(), data.p());

  const int n = data.n();
  std::vector<std::uint8_t> column_mask;
  for (int col : spec.target_cols) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaskRetries && !placed; ++attempt) {
      column_mask.assign(static_cast<std::size_t>(n), 1);
      if (spec.mechanism == MissingMechanism::Mcar) {
        mask_mcar_column(column_mask, spec.mcar_frac, rng);
      } else {
        mask_mar_column(column_mask, data, col, spec, rng);
      }
      const int observed = static_cast<int>(
          std::count(column_mask.begin(), column_mask.end(), std::uint8_t{1}));
      if (observed >= 2) placed = true;
    }
    if (!placed) {
      throw std::runtime_error(
          "scenario: column " + std::to_string(col) +
          " kept fewer than two observed entries after " +
          std::to_string(kMaskRetries) + " mask draws");
    }
    for (int i = 0; i < n; ++i) {
      out.mask(i, col) = column_mask[static_cast<std::size_t>(i)];
    }
  }
  out.validate();
  return out;
}

Eigen::MatrixXd binary_covariance_mc(const ScenarioConfig& cfg,
                                     std::int64_t rows, std::uint64_t seed) {
  if (rows < 2) fail("binary_covariance_mc needs at least 2 rows");
  Eigen::MatrixXd sigma = scenario_population_covariance(cfg);
  const int pivot = cholesky_lower_in_place(sigma);
  if (pivot >= 0) {
    fail("covariance is not positive definite at pivot " +
         std::to_string(pivot));
  }
  const auto lower = sigma.triangularView<Eigen::Lower>();

  Rng rng(seed);
  const int p = cfg.p;
  Eigen::VectorXd z(p);
  Eigen::VectorXd row(p);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, p);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (int j = 0; j < p; ++j) z[j] = sample_normal(rng);
    row.noalias() = lower * z;
    for (int j = 0; j < p; ++j) row[j] = row[j] >= 0.0 ? 1.0 : 0.0;
    mean += row;
    cross.selfadjointView<Eigen::Lower>().rankUpdate(row, 1.0);
  }
  const double denom = static_cast<double>(rows);
  mean /= denom;
  Eigen::MatrixXd cov =
      Eigen::MatrixXd(cross.selfadjointView<Eigen::Lower>()) / denom -
      mean * mean.transpose();
  cov *= denom / (denom - 1.0);
  return cov;
}

}  // namespace bmilasso

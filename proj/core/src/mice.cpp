#include "bmilasso/mice.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "bmilasso/distributions.hpp"
#include "bmilasso/rng.hpp"

namespace bmilasso {

namespace {

constexpr int kMinObservedPerColumn = 5;
constexpr int kIrlsIterations = 25;
constexpr double kIrlsTolerance = 1e-8;
constexpr double kIrlsWeightFloor = 1e-6;
constexpr double kLogisticRidge = 1e-4;
constexpr double kSeparationCoefficientCap = 25.0;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("mice: " + message);
}

struct ColumnPlan {
  int col = 0;
  int missing = 0;
  std::vector<int> observed_rows;
  std::vector<int> missing_rows;
};

// Solves chol_of * x = rhs given the in-place lower Cholesky factor.
Eigen::VectorXd chol_solve(const Eigen::MatrixXd& lower,
                           const Eigen::VectorXd& rhs) {
  Eigen::VectorXd x = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

// Draws z ~ N(0, (L L')^{-1}) from the lower factor of the precision.
Eigen::VectorXd precision_noise(const Eigen::MatrixXd& lower, Rng& rng) {
  Eigen::VectorXd z(lower.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = sample_normal(rng);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
  return z;
}

// Factorizes a into lower Cholesky form, retrying with growing ridge terms
// when the pivot fails. Returns the ridge actually applied.
double factor_with_ridge(Eigen::MatrixXd& a, const std::string& what) {
  const Eigen::MatrixXd original = a;
  const double scale =
      std::max(1.0, original.diagonal().mean());
  double ridge = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (cholesky_lower_in_place(a) < 0) return ridge;
    ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 1e3;
    a = original +
        ridge * Eigen::MatrixXd::Identity(original.rows(), original.cols());
  }
  throw std::runtime_error("mice: " + what +
                           " stayed singular after ridge retries");
}

// Design matrix [1, X_{-col}, y] restricted to the given rows.
Eigen::MatrixXd build_design(const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, int col,
                             const std::vector<int>& rows) {
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), p + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    Eigen::Index c = 0;
    z(static_cast<Eigen::Index>(r), c++) = 1.0;
    for (int j = 0; j < p; ++j) {
      if (j == col) continue;
      z(static_cast<Eigen::Index>(r), c++) = x(i, j);
    }
    z(static_cast<Eigen::Index>(r), c) = y[i];
  }
  return z;
}

void impute_continuous(Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const ColumnPlan& plan, int pmm_donors, Rng& rng,
                       std::set<std::string>& warnings,
                       const std::string& column_name) {
  const Eigen::MatrixXd z_obs = build_design(x, y, plan.col, plan.observed_rows);
  const Eigen::MatrixXd z_mis = build_design(x, y, plan.col, plan.missing_rows);
  Eigen::VectorXd w_obs(static_cast<Eigen::Index>(plan.observed_rows.size()));
  for (std::size_t r = 0; r < plan.observed_rows.size(); ++r) {
    w_obs[static_cast<Eigen::Index>(r)] = x(plan.observed_rows[r], plan.col);
  }

  Eigen::MatrixXd gram = z_obs.transpose() * z_obs;
  const double ridge = factor_with_ridge(gram, "linear imputation design");
  if (ridge > 0.0) {
    warnings.insert("linear imputation for column " + column_name +
                    " ridge-stabilized");
  }
  const Eigen::VectorXd beta_hat = chol_solve(gram, z_obs.transpose() * w_obs);

  const Eigen::VectorXd fitted = z_obs * beta_hat;
  const double rss = (w_obs - fitted).squaredNorm();
  const int df = std::max(
      1, static_cast<int>(plan.observed_rows.size()) - static_cast<int>(gram.rows()));
  const double chi2 = sample_gamma(rng, 0.5 * df, 0.5);
  const double sigma_star2 = std::max(rss, 1e-30) / std::max(chi2, 1e-300);
  const double sigma_star = std::sqrt(sigma_star2);

  const Eigen::VectorXd beta_star =
      beta_hat + sigma_star * precision_noise(gram, rng);

  // Type-1 matching: observed predictions use the mode, missing predictions
  // use the parameter draw.
  const Eigen::VectorXd pred_mis = z_mis * beta_star;
  const int n_obs = static_cast<int>(plan.observed_rows.size());
  const int donor_count = std::min(pmm_donors, n_obs);

  std::vector<std::pair<double, int>> gaps(static_cast<std::size_t>(n_obs));
  for (std::size_t m = 0; m < plan.missing_rows.size(); ++m) {
    const double target = pred_mis[static_cast<Eigen::Index>(m)];
    for (int k = 0; k < n_obs; ++k) {
      gaps[static_cast<std::size_t>(k)] = {
          std::abs(fitted[k] - target), plan.observed_rows[static_cast<std::size_t>(k)]};
    }
    std::partial_sort(gaps.begin(), gaps.begin() + donor_count, gaps.end());
    const int pick = static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(donor_count)));
    const int donor_row = gaps[static_cast<std::size_t>(pick)].second;
    x(plan.missing_rows[m], plan.col) = x(donor_row, plan.col);
  }
}

void impute_binary(Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const ColumnPlan& plan, Rng& rng,
                   std::set<std::string>& warnings,
                   const std::string& column_name) {
  const Eigen::MatrixXd z_obs = build_design(x, y, plan.col, plan.observed_rows);
  const Eigen::MatrixXd z_mis = build_design(x, y, plan.col, plan.missing_rows);
  const Eigen::Index q = z_obs.cols();
  Eigen::VectorXd w_obs(static_cast<Eigen::Index>(plan.observed_rows.size()));
  for (std::size_t r = 0; r < plan.observed_rows.size(); ++r) {
    w_obs[static_cast<Eigen::Index>(r)] = x(plan.observed_rows[r], plan.col);
  }

  // Newton iterations for the logistic fit; a failed or runaway fit is
  // retried with a ridge prior, which also tames separation.
  const auto run_irls = [&](double ridge, Eigen::VectorXd& beta,
                            Eigen::MatrixXd& hessian_chol) -> bool {
    beta = Eigen::VectorXd::Zero(q);
    for (int it = 0; it < kIrlsIterations; ++it) {
      const Eigen::VectorXd eta = z_obs * beta;
      const Eigen::VectorXd mu =
          (1.0 / (1.0 + (-eta.array()).exp())).matrix();
      Eigen::VectorXd weight =
          (mu.array() * (1.0 - mu.array())).cwiseMax(kIrlsWeightFloor).matrix();
      Eigen::MatrixXd hessian =
          z_obs.transpose() * weight.asDiagonal() * z_obs;
      hessian.diagonal().array() += ridge;
      Eigen::VectorXd grad = z_obs.transpose() * (w_obs - mu);
      grad -= ridge * beta;
      Eigen::MatrixXd chol = hessian;
      if (cholesky_lower_in_place(chol) >= 0) return false;
      const Eigen::VectorXd step = chol_solve(chol, grad);
      beta += step;
      if (step.cwiseAbs().maxCoeff() < kIrlsTolerance) {
        if (beta.cwiseAbs().maxCoeff() > kSeparationCoefficientCap &&
            ridge == 0.0) {
          return false;
        }
        hessian_chol = std::move(chol);
        return true;
      }
    }
    return false;
  };

  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd hessian_chol;
  if (!run_irls(0.0, beta_hat, hessian_chol)) {
    if (!run_irls(kLogisticRidge, beta_hat, hessian_chol)) {
      throw std::runtime_error(
          "mice: logistic imputation for column " + column_name +
          " failed even with the ridge fallback");
    }
    warnings.insert("logistic imputation for column " + column_name +
                    " ridge-stabilized");
  }

  const Eigen::VectorXd beta_star =
      beta_hat + precision_noise(hessian_chol, rng);
  const Eigen::VectorXd eta_mis = z_mis * beta_star;
  for (std::size_t m = 0; m < plan.missing_rows.size(); ++m) {
    const double prob =
        1.0 / (1.0 + std::exp(-eta_mis[static_cast<Eigen::Index>(m)]));
    x(plan.missing_rows[m], plan.col) = rng.uniform() < prob ? 1.0 : 0.0;
  }
}

}  // namespace

void MiceConfig::validate() const {
  if (d_count < 1) fail("d_count must be at least 1");
  if (cycles < 1) fail("cycles must be at least 1");
  if (pmm_donors < 1) fail("pmm_donors must be at least 1");
}

MiceResult impute(const IncompleteDataset& data, const MiceConfig& cfg) {
  cfg.validate();
  data.validate();
  const int n = data.data.n();
  const int p = data.data.p();

  std::vector<ColumnPlan> plans;
  for (int j = 0; j < p; ++j) {
    ColumnPlan plan;
    plan.col = j;
    for (int i = 0; i < n; ++i) {
      if (data.mask(i, j) != 0) {
        plan.observed_rows.push_back(i);
      } else {
        plan.missing_rows.push_back(i);
      }
    }
    plan.missing = static_cast<int>(plan.missing_rows.size());
    if (plan.missing == 0) continue;
    if (static_cast<int>(plan.observed_rows.size()) < kMinObservedPerColumn) {
      fail("column " + data.data.column_names[static_cast<std::size_t>(j)] +
           " has fewer than " + std::to_string(kMinObservedPerColumn) +
           " observed entries");
    }
    plans.push_back(std::move(plan));
  }
  std::sort(plans.begin(), plans.end(),
            [](const ColumnPlan& a, const ColumnPlan& b) {
              if (a.missing != b.missing) return a.missing < b.missing;
              return a.col < b.col;
            });

  // Starting values: observed means and modes.
  Eigen::MatrixXd seeded = data.data.x;
  for (const ColumnPlan& plan : plans) {
    const bool is_binary =
        data.data.column_kinds[static_cast<std::size_t>(plan.col)] ==
        ColumnKind::Binary;
    double fill;
    if (is_binary) {
      int ones = 0;
      for (int i : plan.observed_rows) {
        if (seeded(i, plan.col) == 1.0) ++ones;
      }
      fill = 2 * ones > static_cast<int>(plan.observed_rows.size()) ? 1.0 : 0.0;
    } else {
      double total = 0.0;
      for (int i : plan.observed_rows) total += seeded(i, plan.col);
      fill = total / static_cast<double>(plan.observed_rows.size());
    }
    for (int i : plan.missing_rows) seeded(i, plan.col) = fill;
  }

  MiceResult out;
  out.stack.provenance = StackProvenance::Imputed;
  out.stack.datasets.reserve(static_cast<std::size_t>(cfg.d_count));
  std::set<std::string> warnings;

  for (int d = 0; d < cfg.d_count; ++d) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(d)));
    Eigen::MatrixXd working = seeded;
    for (int cycle = 0; cycle < cfg.cycles && !plans.empty(); ++cycle) {
      for (const ColumnPlan& plan : plans) {
        const std::string& name =
            data.data.column_names[static_cast<std::size_t>(plan.col)];
        if (data.data.column_kinds[static_cast<std::size_t>(plan.col)] ==
            ColumnKind::Binary) {
          impute_binary(working, data.data.y, plan, rng, warnings, name);
        } else {
          impute_continuous(working, data.data.y, plan, cfg.pmm_donors, rng,
                            warnings, name);
        }
      }
    }
    Dataset complete = data.data;
    complete.x = std::move(working);
    out.stack.datasets.push_back(std::move(complete));
  }

  out.warnings.assign(warnings.begin(), warnings.end());
  out.stack.validate();
  return out;
}

}  // namespace bmilasso

#include "bmilasso/metrics.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

#include "bmilasso/distributions.hpp"
#include "bmilasso/numeric.hpp"

namespace bmilasso {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("metrics: " + message);
}

}  // namespace

MetricsRow evaluate(const std::vector<std::uint8_t>& selected,
                    const std::vector<std::uint8_t>& truth,
                    const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& beta_true,
                    const Eigen::MatrixXd& sigma) {
  const std::size_t p = truth.size();
  if (selected.size() != p) fail("selected and truth lengths differ");
  if (beta_hat.size() != static_cast<Eigen::Index>(p) ||
      beta_true.size() != static_cast<Eigen::Index>(p)) {
    fail("coefficient vectors must have one entry per covariate");
  }
  if (sigma.rows() != static_cast<Eigen::Index>(p) ||
      sigma.cols() != static_cast<Eigen::Index>(p)) {
    fail("covariance dimensions do not match the covariate count");
  }

  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t j = 0; j < p; ++j) {
    const bool sel = selected[j] != 0;
    const bool important = truth[j] != 0;
    if (sel && important) ++tp;
    if (sel && !important) ++fp;
    if (!sel && !important) ++tn;
    if (!sel && important) ++fn;
  }

  MetricsRow row;
  row.selected_count = tp + fp;
  if (tp + fn > 0) {
    row.sensitivity = static_cast<double>(tp) / (tp + fn);
  } else {
    row.sensitivity = 1.0;
    row.convention_flagged = true;
  }
  if (tn + fp > 0) {
    row.specificity = static_cast<double>(tn) / (tn + fp);
  } else {
    row.specificity = 1.0;
    row.convention_flagged = true;
  }
  row.precision =
      row.selected_count > 0 ? static_cast<double>(tp) / row.selected_count : 0.0;
  const double f1_denom = row.precision + row.sensitivity;
  row.f1 = f1_denom > 0.0 ? 2.0 * row.precision * row.sensitivity / f1_denom : 0.0;

  const Eigen::VectorXd diff = beta_hat - beta_true;
  row.mse = diff.dot(sigma * diff);
  return row;
}

RefitResult refit_pool(const ImputedStack& stack,
                       const std::vector<std::uint8_t>& selected) {
  stack.validate();
  const int p = stack.p();
  const int n = stack.n();
  if (selected.size() != static_cast<std::size_t>(p)) {
    fail("selected length does not match the covariate count");
  }
  std::vector<int> active;
  for (int j = 0; j < p; ++j) {
    if (selected[static_cast<std::size_t>(j)] != 0) active.push_back(j);
  }
  const int k = static_cast<int>(active.size());
  if (k >= n) {
    fail("refit needs fewer selected columns (" + std::to_string(k) +
         ") than rows (" + std::to_string(n) + ")");
  }

  const int d_count = stack.count();
  RefitResult out;
  out.beta = Eigen::VectorXd::Zero(p);

  std::vector<std::vector<double>> coef_draws(
      static_cast<std::size_t>(k),
      std::vector<double>(static_cast<std::size_t>(d_count)));
  std::vector<double> intercepts(static_cast<std::size_t>(d_count));

  for (int d = 0; d < d_count; ++d) {
    const Dataset& data = stack.datasets[static_cast<std::size_t>(d)];
    const double y_mean = data.y.mean();
    if (k == 0) {
      intercepts[static_cast<std::size_t>(d)] = y_mean;
      continue;
    }
    Eigen::MatrixXd xs(n, k);
    for (int a = 0; a < k; ++a) xs.col(a) = data.x.col(active[static_cast<std::size_t>(a)]);
    const Eigen::RowVectorXd x_mean = xs.colwise().mean();
    xs.rowwise() -= x_mean;
    const Eigen::VectorXd yc = data.y.array() - y_mean;

    Eigen::MatrixXd gram = xs.transpose() * xs;
    Eigen::MatrixXd chol = gram;
    if (cholesky_lower_in_place(chol) >= 0) {
      out.ridge_fallback = true;
      chol = gram + 1e-8 * Eigen::MatrixXd::Identity(k, k);
      if (cholesky_lower_in_place(chol) >= 0) {
        throw std::runtime_error(
            "metrics: refit normal matrix stayed singular after the ridge "
            "fallback");
      }
    }
    const Eigen::VectorXd rhs = xs.transpose() * yc;
    Eigen::VectorXd b = chol.triangularView<Eigen::Lower>().solve(rhs);
    chol.triangularView<Eigen::Lower>().transpose().solveInPlace(b);

    for (int a = 0; a < k; ++a) {
      coef_draws[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] = b[a];
    }
    intercepts[static_cast<std::size_t>(d)] = y_mean - x_mean.transpose().dot(b);
  }

  for (int a = 0; a < k; ++a) {
    out.beta[active[static_cast<std::size_t>(a)]] =
        compensated_mean(coef_draws[static_cast<std::size_t>(a)]);
  }
  out.intercept = compensated_mean(intercepts);
  return out;
}

}  // namespace bmilasso

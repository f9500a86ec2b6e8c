#include "bmilasso/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "bmilasso/numeric.hpp"

namespace bmilasso {
namespace {

bool is_spike(ModelKind kind) {
  return kind == ModelKind::SpikeNormal || kind == ModelKind::SpikeLaplace;
}

std::vector<double> scan_grid() {
  std::vector<double> xs;
  for (int x = 5; x <= 95; x += 5) xs.push_back(static_cast<double>(x));
  return xs;
}

// Shared core of the two scans: per-covariate sorted pooled samples and the
// per-row selected sets. Selection is monotone in x because both interval
// endpoints are monotone functions of the quantile level.
std::vector<ScanRow> scan_selected_sets(const PooledPosterior& pooled) {
  const int p = pooled.p;
  std::vector<std::vector<double>> sorted(pooled.beta.begin(),
                                          pooled.beta.end());
  for (auto& sample : sorted) std::sort(sample.begin(), sample.end());

  std::vector<ScanRow> rows;
  for (double x : scan_grid()) {
    ScanRow row;
    row.x_pct = x;
    row.selected.assign(static_cast<std::size_t>(p), 0);
    const double alpha = (1.0 - x / 100.0) / 2.0;
    for (int j = 0; j < p; ++j) {
      const double lo = quantile_type7_sorted(sorted[static_cast<std::size_t>(j)], alpha);
      const double hi = quantile_type7_sorted(sorted[static_cast<std::size_t>(j)], 1.0 - alpha);
      row.selected[static_cast<std::size_t>(j)] = (lo > 0.0 || hi < 0.0) ? 1 : 0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void require_pooled_sample(const PooledPosterior& pooled) {
  if (pooled.p <= 0 || pooled.beta.empty()) {
    throw std::invalid_argument("pooled posterior is empty");
  }
  if (pooled.pooled_size() < 200) {
    std::ostringstream msg;
    msg << "interval selection needs at least 200 pooled draws per covariate, "
        << "got " << pooled.pooled_size();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

PooledPosterior pool(const PosteriorDraws& draws, bool force) {
  const int retained = draws.retained_per_chain();
  if (draws.chains.empty() || retained == 0) {
    throw std::invalid_argument("cannot pool empty posterior draws");
  }
  if (!draws.converged && !force) {
    std::ostringstream msg;
    msg << "chains did not converge (max split R-hat " << draws.max_rhat
        << " exceeds " << draws.config.rhat_threshold
        << "); pass force to pool anyway";
    throw std::runtime_error(msg.str());
  }

  const int d_count = draws.d_count;
  const int p = draws.p;
  const int n_chains = static_cast<int>(draws.chains.size());
  const int per_dataset = n_chains * retained;

  PooledPosterior pooled;
  pooled.kind = draws.kind;
  pooled.d_count = d_count;
  pooled.p = p;
  pooled.column_names = draws.column_names;

  pooled.beta.assign(static_cast<std::size_t>(p), {});
  for (auto& sample : pooled.beta) {
    sample.reserve(static_cast<std::size_t>(d_count) * static_cast<std::size_t>(per_dataset));
  }
  for (int j = 0; j < p; ++j) {
    auto& sample = pooled.beta[static_cast<std::size_t>(j)];
    for (int d = 0; d < d_count; ++d) {
      for (int c = 0; c < n_chains; ++c) {
        const ChainDraws& chain = draws.chains[static_cast<std::size_t>(c)];
        for (int t = 0; t < retained; ++t) {
          sample.push_back(chain.beta_orig[static_cast<std::size_t>(t)](d, j));
        }
      }
    }
  }

  pooled.sigma2.reserve(static_cast<std::size_t>(per_dataset));
  for (int c = 0; c < n_chains; ++c) {
    const ChainDraws& chain = draws.chains[static_cast<std::size_t>(c)];
    pooled.sigma2.insert(pooled.sigma2.end(), chain.sigma2.begin(),
                         chain.sigma2.end());
  }

  if (is_spike(draws.kind)) {
    pooled.gamma.assign(static_cast<std::size_t>(p), {});
    for (int j = 0; j < p; ++j) {
      auto& sample = pooled.gamma[static_cast<std::size_t>(j)];
      sample.reserve(static_cast<std::size_t>(per_dataset));
      for (int c = 0; c < n_chains; ++c) {
        const ChainDraws& chain = draws.chains[static_cast<std::size_t>(c)];
        for (int t = 0; t < retained; ++t) {
          sample.push_back(static_cast<double>(
              chain.gamma[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]));
        }
      }
    }
  }

  pooled.per_dataset_mean.resize(d_count, p);
  pooled.per_dataset_mean_active.resize(d_count, p);
  std::vector<double> segment(static_cast<std::size_t>(per_dataset));
  std::vector<double> active;
  for (int j = 0; j < p; ++j) {
    const auto& sample = pooled.beta[static_cast<std::size_t>(j)];
    for (int d = 0; d < d_count; ++d) {
      const std::size_t offset =
          static_cast<std::size_t>(d) * static_cast<std::size_t>(per_dataset);
      std::copy(sample.begin() + static_cast<std::ptrdiff_t>(offset),
                sample.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(per_dataset)),
                segment.begin());
      pooled.per_dataset_mean(d, j) = compensated_mean(segment);
      if (is_spike(draws.kind)) {
        active.clear();
        const auto& indicators = pooled.gamma[static_cast<std::size_t>(j)];
        for (int k = 0; k < per_dataset; ++k) {
          if (indicators[static_cast<std::size_t>(k)] > 0.5) {
            active.push_back(segment[static_cast<std::size_t>(k)]);
          }
        }
        pooled.per_dataset_mean_active(d, j) =
            active.empty() ? 0.0 : compensated_mean(active);
      } else {
        pooled.per_dataset_mean_active(d, j) = pooled.per_dataset_mean(d, j);
      }
    }
  }
  return pooled;
}

double quantile_type7_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("quantile level must lie in [0, 1]");
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile_type7(std::vector<double> sample, double q) {
  std::sort(sample.begin(), sample.end());
  return quantile_type7_sorted(sample, q);
}

const char* selection_rule_name(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::CredibleInterval:
      return "credible_interval";
    case SelectionRule::MedianIndicator:
      return "median_indicator";
    case SelectionRule::BicPath:
      return "bic_path";
  }
  return "unknown";
}

const char* bic_coefficient_mode_name(BicCoefficientMode mode) {
  switch (mode) {
    case BicCoefficientMode::PosteriorMean:
      return "posterior_mean";
    case BicCoefficientMode::RefitOls:
      return "refit_ols";
  }
  return "unknown";
}

int SelectionResult::selected_count() const {
  int count = 0;
  for (std::uint8_t flag : selected) count += flag ? 1 : 0;
  return count;
}

SelectionResult select_by_interval(const PooledPosterior& pooled, double x_pct) {
  if (!(x_pct > 0.0 && x_pct < 100.0)) {
    throw std::invalid_argument("interval width must lie in (0, 100) percent");
  }
  require_pooled_sample(pooled);

  const int p = pooled.p;
  SelectionResult result;
  result.rule = SelectionRule::CredibleInterval;
  result.column_names = pooled.column_names;
  result.selected.assign(static_cast<std::size_t>(p), 0);
  result.estimate.assign(static_cast<std::size_t>(p), 0.0);
  result.lo.assign(static_cast<std::size_t>(p), 0.0);
  result.hi.assign(static_cast<std::size_t>(p), 0.0);
  result.x_pct = x_pct;

  const double alpha = (1.0 - x_pct / 100.0) / 2.0;
  std::vector<double> sorted;
  for (int j = 0; j < p; ++j) {
    const auto& sample = pooled.beta[static_cast<std::size_t>(j)];
    sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_type7_sorted(sorted, alpha);
    const double hi = quantile_type7_sorted(sorted, 1.0 - alpha);
    result.estimate[static_cast<std::size_t>(j)] = compensated_mean(sample);
    result.lo[static_cast<std::size_t>(j)] = lo;
    result.hi[static_cast<std::size_t>(j)] = hi;
    result.selected[static_cast<std::size_t>(j)] = (lo > 0.0 || hi < 0.0) ? 1 : 0;
  }
  return result;
}

std::vector<ScanRow> scan_intervals(const PooledPosterior& pooled,
                                    const std::vector<std::uint8_t>& truth) {
  require_pooled_sample(pooled);
  if (truth.size() != static_cast<std::size_t>(pooled.p)) {
    throw std::invalid_argument("truth vector length must match covariate count");
  }

  std::vector<ScanRow> rows = scan_selected_sets(pooled);
  std::size_t best_index = 0;
  double best_distance = -1.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ScanRow& row = rows[r];
    int tp = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const bool sel = row.selected[j] != 0;
      const bool pos = truth[j] != 0;
      if (pos) {
        sel ? ++tp : ++fn;
      } else {
        sel ? ++fp : ++tn;
      }
    }
    if (tp + fn > 0) {
      row.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    } else {
      row.sensitivity = 1.0;
      row.convention_flagged = true;
    }
    if (tn + fp > 0) {
      row.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    } else {
      row.specificity = 1.0;
      row.convention_flagged = true;
    }
    row.distance = std::sqrt(row.sensitivity * row.sensitivity +
                             row.specificity * row.specificity);
    if (row.distance >= best_distance) {  // ties go to the larger x
      best_distance = row.distance;
      best_index = r;
    }
  }
  rows[best_index].best = true;
  return rows;
}

std::vector<ScanRow> scan_intervals_bic(const PooledPosterior& pooled,
                                        const ImputedStack& stack,
                                        BicCoefficientMode mode) {
  require_pooled_sample(pooled);
  if (stack.count() != pooled.d_count || stack.p() != pooled.p) {
    throw std::invalid_argument("stack shape does not match the pooled draws");
  }

  const int d_count = pooled.d_count;
  const int p = pooled.p;
  const Eigen::MatrixXd beta_ols = per_dataset_ols(stack);

  std::vector<ScanRow> rows = scan_selected_sets(pooled);
  std::size_t best_index = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ScanRow& row = rows[r];
    Eigen::MatrixXd beta_bar = Eigen::MatrixXd::Zero(d_count, p);
    if (mode == BicCoefficientMode::PosteriorMean) {
      for (int j = 0; j < p; ++j) {
        if (row.selected[static_cast<std::size_t>(j)]) {
          beta_bar.col(j) = pooled.per_dataset_mean_active.col(j);
        }
      }
    } else {
      std::vector<int> cols;
      for (int j = 0; j < p; ++j) {
        if (row.selected[static_cast<std::size_t>(j)]) cols.push_back(j);
      }
      if (!cols.empty()) {
        const int k = static_cast<int>(cols.size());
        for (int d = 0; d < d_count; ++d) {
          const Eigen::MatrixXd& x = stack.datasets[static_cast<std::size_t>(d)].x;
          const Eigen::VectorXd& y = stack.datasets[static_cast<std::size_t>(d)].y;
          Eigen::MatrixXd xs(x.rows(), k);
          for (int c = 0; c < k; ++c) xs.col(c) = x.col(cols[static_cast<std::size_t>(c)]);
          const Eigen::RowVectorXd x_mean = xs.colwise().mean();
          const Eigen::MatrixXd xc = xs.rowwise() - x_mean;
          const Eigen::VectorXd yc = y.array() - y.mean();
          const Eigen::VectorXd sol = xc.colPivHouseholderQr().solve(yc);
          for (int c = 0; c < k; ++c) {
            beta_bar(d, cols[static_cast<std::size_t>(c)]) = sol(c);
          }
        }
      }
    }
    const ModifiedBic bic = modified_bic(stack, beta_bar, beta_ols);
    row.bic = bic.value;
    row.convention_flagged = bic.zero_residual || bic.ols_fallback;
    if (bic.value <= best_bic) {  // ties go to the larger x
      best_bic = bic.value;
      best_index = r;
    }
  }
  rows[best_index].best = true;
  return rows;
}

namespace {

SelectionResult materialize_best(const PooledPosterior& pooled,
                                 const std::vector<ScanRow>& rows) {
  for (const ScanRow& row : rows) {
    if (!row.best) continue;
    SelectionResult result = select_by_interval(pooled, row.x_pct);
    result.bic = row.bic;
    return result;
  }
  throw std::logic_error("interval scan produced no best row");
}

}  // namespace

SelectionResult select_by_distance(const PooledPosterior& pooled,
                                   const std::vector<std::uint8_t>& truth) {
  return materialize_best(pooled, scan_intervals(pooled, truth));
}

SelectionResult select_by_bic_scan(const PooledPosterior& pooled,
                                   const ImputedStack& stack,
                                   BicCoefficientMode mode) {
  SelectionResult result =
      materialize_best(pooled, scan_intervals_bic(pooled, stack, mode));
  result.rule = SelectionRule::BicPath;
  return result;
}

SelectionResult select_by_median_indicator(const PosteriorDraws& draws,
                                           bool force) {
  if (!is_spike(draws.kind)) {
    throw std::invalid_argument(
        "median indicator rule requires a spike model with inclusion "
        "indicators");
  }
  const PooledPosterior pooled = pool(draws, force);

  const int p = pooled.p;
  SelectionResult result;
  result.rule = SelectionRule::MedianIndicator;
  result.column_names = pooled.column_names;
  result.selected.assign(static_cast<std::size_t>(p), 0);
  result.estimate.assign(static_cast<std::size_t>(p), 0.0);
  result.lo.assign(static_cast<std::size_t>(p), 0.0);
  result.hi.assign(static_cast<std::size_t>(p), 0.0);
  result.inclusion.assign(static_cast<std::size_t>(p), 0.0);

  std::vector<double> sorted;
  for (int j = 0; j < p; ++j) {
    const auto& sample = pooled.beta[static_cast<std::size_t>(j)];
    sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double proportion =
        compensated_mean(pooled.gamma[static_cast<std::size_t>(j)]);
    result.inclusion[static_cast<std::size_t>(j)] = proportion;
    result.selected[static_cast<std::size_t>(j)] = proportion > 0.5 ? 1 : 0;
    result.estimate[static_cast<std::size_t>(j)] = compensated_mean(sample);
    result.lo[static_cast<std::size_t>(j)] = quantile_type7_sorted(sorted, 0.025);
    result.hi[static_cast<std::size_t>(j)] = quantile_type7_sorted(sorted, 0.975);
  }
  return result;
}

ModifiedBic modified_bic(const ImputedStack& stack,
                         const Eigen::MatrixXd& beta_bar,
                         const Eigen::MatrixXd& beta_ols) {
  const int d_count = stack.count();
  const int n = stack.n();
  const int p = stack.p();
  if (beta_bar.rows() != d_count || beta_bar.cols() != p) {
    throw std::invalid_argument("beta_bar must be D x p");
  }
  const bool have_ols = beta_ols.size() > 0;
  if (have_ols && (beta_ols.rows() != d_count || beta_ols.cols() != p)) {
    throw std::invalid_argument("beta_ols must be D x p or empty");
  }

  std::vector<double> rss(static_cast<std::size_t>(d_count));
  for (int d = 0; d < d_count; ++d) {
    const Eigen::MatrixXd& x = stack.datasets[static_cast<std::size_t>(d)].x;
    const Eigen::VectorXd& y = stack.datasets[static_cast<std::size_t>(d)].y;
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::VectorXd residual =
        (y.array() - y.mean()).matrix() -
        (x.rowwise() - x_mean) * beta_bar.row(d).transpose();
    rss[static_cast<std::size_t>(d)] = residual.squaredNorm();
  }
  const double total_rss = stable_sum(rss);
  const double dn = static_cast<double>(d_count) * static_cast<double>(n);

  ModifiedBic out;
  int active = 0;
  double ratio_sum = 0.0;
  std::vector<double> squares(static_cast<std::size_t>(d_count));
  for (int j = 0; j < p; ++j) {
    for (int d = 0; d < d_count; ++d) {
      const double b = beta_bar(d, j);
      squares[static_cast<std::size_t>(d)] = b * b;
    }
    const double norm_bar = std::sqrt(stable_sum(squares));
    if (norm_bar <= 0.0) continue;
    ++active;
    if (have_ols) {
      for (int d = 0; d < d_count; ++d) {
        const double b = beta_ols(d, j);
        squares[static_cast<std::size_t>(d)] = b * b;
      }
      const double norm_ols = std::sqrt(stable_sum(squares));
      ratio_sum += norm_ols > 0.0 ? norm_bar / norm_ols : 1.0;
    }
  }
  if (have_ols) {
    out.df = static_cast<double>(active) +
             ratio_sum * (static_cast<double>(d_count) - 1.0);
  } else {
    out.ols_fallback = true;
    out.df = static_cast<double>(active) * static_cast<double>(d_count);
  }

  if (total_rss <= 0.0) {
    out.zero_residual = true;
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::log(total_rss / dn) + out.df * std::log(dn) / dn;
  return out;
}

Eigen::MatrixXd per_dataset_ols(const ImputedStack& stack) {
  const int d_count = stack.count();
  const int n = stack.n();
  const int p = stack.p();
  if (n <= p) return {};

  Eigen::MatrixXd out(d_count, p);
  for (int d = 0; d < d_count; ++d) {
    const Eigen::MatrixXd& x = stack.datasets[static_cast<std::size_t>(d)].x;
    const Eigen::VectorXd& y = stack.datasets[static_cast<std::size_t>(d)].y;
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y.mean();
    out.row(d) = xc.colPivHouseholderQr().solve(yc).transpose();
  }
  return out;
}

}  // namespace bmilasso

#include "bmilasso/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bmilasso/numeric.hpp"
#include "bmilasso/selection.hpp"

namespace bmilasso {
namespace {

constexpr double kRidgeEpsilon = 1e-10;
constexpr double kGroupZeroThreshold = 1e-6;
constexpr double kCoefficientTolerance = 1e-6;
constexpr int kMaxRidgeIterations = 500;
constexpr int kMaxPolishSweeps = 2000;
constexpr double kKktTarget = 5e-5;  // margin under the 1e-4 certificate
constexpr int kMaxLassoSweeps = 20000;
constexpr double kLassoKktTarget = 1e-7;  // margin under the 1e-6 certificate

struct StackStats {
  int n = 0;
  int p = 0;
  int d_count = 0;
  std::vector<Eigen::MatrixXd> xtx;
  std::vector<Eigen::VectorXd> xty;
};

StackStats make_stats(const ImputedStack& stack) {
  stack.validate();
  StackStats s;
  s.n = stack.n();
  s.p = stack.p();
  s.d_count = stack.count();
  s.xtx.reserve(stack.datasets.size());
  s.xty.reserve(stack.datasets.size());
  for (const auto& ds : stack.datasets) {
    s.xtx.push_back(ds.x.transpose() * ds.x);
    s.xty.push_back(ds.x.transpose() * ds.y);
  }
  return s;
}

double group_norm(const Eigen::MatrixXd& beta, int j) {
  std::vector<double> values(static_cast<std::size_t>(beta.rows()));
  for (Eigen::Index d = 0; d < beta.rows(); ++d) {
    values[static_cast<std::size_t>(d)] = beta(d, j);
  }
  return stable_norm(values);
}

int hard_zero(Eigen::MatrixXd& beta) {
  int zeroed = 0;
  for (Eigen::Index j = 0; j < beta.cols(); ++j) {
    const double norm = group_norm(beta, static_cast<int>(j));
    if (norm > 0.0 && norm < kGroupZeroThreshold) {
      beta.col(j).setZero();
      ++zeroed;
    }
  }
  return zeroed;
}

double objective(const ImputedStack& stack, const Eigen::MatrixXd& beta,
                 double lambda) {
  std::vector<double> losses(static_cast<std::size_t>(stack.count()));
  for (int d = 0; d < stack.count(); ++d) {
    const auto& ds = stack.datasets[static_cast<std::size_t>(d)];
    losses[static_cast<std::size_t>(d)] =
        (ds.y - ds.x * beta.row(d).transpose()).squaredNorm();
  }
  double penalty = 0.0;
  for (int j = 0; j < static_cast<int>(beta.cols()); ++j) {
    penalty += group_norm(beta, j);
  }
  return stable_sum(losses) + lambda * penalty;
}

// Hard-zeroing a group of norm up to 1e-6 can move the objective by about
// 2 lambda 1e-6, so monotonicity is asserted with that much slack per zero.
void check_monotone(double prev, double next, double lambda, int zeroed,
                    const char* phase) {
  const double slack = lambda * 2e-6 * static_cast<double>(zeroed + 1) +
                       1e-9 * (1.0 + std::abs(prev));
  if (next > prev + slack) {
    std::ostringstream msg;
    msg << "group lasso objective increased from " << prev << " to " << next
        << " during " << phase;
    throw std::logic_error(msg.str());
  }
}

std::vector<Eigen::VectorXd> fitted_stats(const StackStats& s,
                                          const Eigen::MatrixXd& beta) {
  std::vector<Eigen::VectorXd> q(static_cast<std::size_t>(s.d_count));
  for (int d = 0; d < s.d_count; ++d) {
    q[static_cast<std::size_t>(d)] =
        s.xtx[static_cast<std::size_t>(d)] * beta.row(d).transpose();
  }
  return q;
}

double kkt_from_stats(const StackStats& s, const Eigen::MatrixXd& beta,
                      double lambda,
                      const std::vector<Eigen::VectorXd>& q) {
  double worst = 0.0;
  std::vector<double> component(static_cast<std::size_t>(s.d_count));
  std::vector<double> diff(static_cast<std::size_t>(s.d_count));
  for (int j = 0; j < s.p; ++j) {
    for (int d = 0; d < s.d_count; ++d) {
      component[static_cast<std::size_t>(d)] =
          2.0 * (s.xty[static_cast<std::size_t>(d)](j) -
                 q[static_cast<std::size_t>(d)](j));
    }
    const double norm = group_norm(beta, j);
    double violation;
    if (norm > 0.0) {
      for (int d = 0; d < s.d_count; ++d) {
        diff[static_cast<std::size_t>(d)] =
            component[static_cast<std::size_t>(d)] -
            lambda * beta(d, j) / norm;
      }
      violation = stable_norm(diff);
    } else {
      violation = std::max(0.0, stable_norm(component) - lambda);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

// One pass of exact blockwise minimization. For a group with others fixed,
// the optimum norm t solves |(2 t u_d / (2 t a_d + lambda))_d| = t, found by
// bisection; t exists iff |2u| > lambda, else the group is zero. A group is
// snapped to exact zero only when that cannot break the KKT certificate.
double polish_sweep(const StackStats& s, Eigen::MatrixXd& beta, double lambda,
                    std::vector<Eigen::VectorXd>& q) {
  const int d_count = s.d_count;
  double max_change = 0.0;
  std::vector<double> u(static_cast<std::size_t>(d_count));
  std::vector<double> a(static_cast<std::size_t>(d_count));
  std::vector<double> scratch(static_cast<std::size_t>(d_count));
  std::vector<double> candidate(static_cast<std::size_t>(d_count));
  for (int j = 0; j < s.p; ++j) {
    for (int d = 0; d < d_count; ++d) {
      a[static_cast<std::size_t>(d)] = s.xtx[static_cast<std::size_t>(d)](j, j);
      u[static_cast<std::size_t>(d)] =
          s.xty[static_cast<std::size_t>(d)](j) -
          q[static_cast<std::size_t>(d)](j) +
          a[static_cast<std::size_t>(d)] * beta(d, j);
    }
    std::fill(candidate.begin(), candidate.end(), 0.0);
    if (lambda <= 0.0) {
      for (int d = 0; d < d_count; ++d) {
        candidate[static_cast<std::size_t>(d)] =
            u[static_cast<std::size_t>(d)] / a[static_cast<std::size_t>(d)];
      }
    } else {
      for (int d = 0; d < d_count; ++d) {
        scratch[static_cast<std::size_t>(d)] =
            2.0 * u[static_cast<std::size_t>(d)];
      }
      const double two_u_norm = stable_norm(scratch);
      if (two_u_norm > lambda) {
        for (int d = 0; d < d_count; ++d) {
          scratch[static_cast<std::size_t>(d)] =
              u[static_cast<std::size_t>(d)] / a[static_cast<std::size_t>(d)];
        }
        double hi = stable_norm(scratch);
        double lo = 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          for (int d = 0; d < d_count; ++d) {
            scratch[static_cast<std::size_t>(d)] =
                2.0 * mid * u[static_cast<std::size_t>(d)] /
                (2.0 * mid * a[static_cast<std::size_t>(d)] + lambda);
          }
          if (stable_norm(scratch) > mid) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        const double t = 0.5 * (lo + hi);
        for (int d = 0; d < d_count; ++d) {
          candidate[static_cast<std::size_t>(d)] =
              2.0 * t * u[static_cast<std::size_t>(d)] /
              (2.0 * t * a[static_cast<std::size_t>(d)] + lambda);
        }
        const bool snap_safe = two_u_norm <= lambda + 0.5 * kKktTarget;
        if (stable_norm(candidate) < kGroupZeroThreshold && snap_safe) {
          std::fill(candidate.begin(), candidate.end(), 0.0);
        }
      }
    }
    for (int d = 0; d < d_count; ++d) {
      const double delta = candidate[static_cast<std::size_t>(d)] - beta(d, j);
      if (delta != 0.0) {
        max_change = std::max(max_change, std::abs(delta));
        q[static_cast<std::size_t>(d)] +=
            s.xtx[static_cast<std::size_t>(d)].col(j) * delta;
        beta(d, j) = candidate[static_cast<std::size_t>(d)];
      }
    }
  }
  return max_change;
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

double lasso_kkt_from_residual(const Dataset& data,
                               const Eigen::VectorXd& beta, double lambda,
                               const Eigen::VectorXd& residual) {
  double worst = 0.0;
  for (int j = 0; j < data.p(); ++j) {
    const double g = data.x.col(j).dot(residual);
    const double violation =
        beta(j) != 0.0
            ? std::abs(g - lambda * (beta(j) > 0.0 ? 1.0 : -1.0))
            : std::max(0.0, std::abs(g) - lambda);
    worst = std::max(worst, violation);
  }
  return worst;
}

}  // namespace

GroupLassoFit fit_milasso(const ImputedStack& stack, double lambda,
                          const Eigen::MatrixXd* warm_start) {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("group lasso penalty must be finite and >= 0");
  }
  const StackStats s = make_stats(stack);
  const int d_count = s.d_count;
  const int p = s.p;

  GroupLassoFit fit;
  fit.lambda = lambda;
  if (warm_start != nullptr) {
    if (warm_start->rows() != d_count || warm_start->cols() != p ||
        !warm_start->allFinite()) {
      throw std::invalid_argument("warm start must be a finite D x p matrix");
    }
    fit.beta = *warm_start;
  } else {
    // A small ridge keeps the start away from the absorbing all-zero point.
    double diag_scale = 0.0;
    for (const auto& xtx : s.xtx) diag_scale += xtx.diagonal().mean();
    const double delta = 1e-6 * std::max(1.0, diag_scale / d_count);
    fit.beta.resize(d_count, p);
    for (int d = 0; d < d_count; ++d) {
      Eigen::MatrixXd a = s.xtx[static_cast<std::size_t>(d)];
      a.diagonal().array() += delta;
      fit.beta.row(d) =
          a.ldlt().solve(s.xty[static_cast<std::size_t>(d)]).transpose();
    }
  }
  hard_zero(fit.beta);

  double prev_objective = objective(stack, fit.beta, lambda);
  Eigen::VectorXd weights(p);
  Eigen::MatrixXd previous;
  for (int iter = 0; iter < kMaxRidgeIterations; ++iter) {
    ++fit.iterations;
    previous = fit.beta;
    for (int j = 0; j < p; ++j) {
      weights(j) = lambda / (2.0 * group_norm(fit.beta, j) + kRidgeEpsilon);
    }
    for (int d = 0; d < d_count; ++d) {
      Eigen::MatrixXd a = s.xtx[static_cast<std::size_t>(d)];
      a.diagonal() += weights;
      fit.beta.row(d) =
          a.ldlt().solve(s.xty[static_cast<std::size_t>(d)]).transpose();
    }
    const int zeroed = hard_zero(fit.beta);
    const double current = objective(stack, fit.beta, lambda);
    check_monotone(prev_objective, current, lambda, zeroed, "iterated ridge");
    prev_objective = current;
    if ((fit.beta - previous).cwiseAbs().maxCoeff() < kCoefficientTolerance) {
      break;
    }
  }

  double kkt = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < kMaxPolishSweeps; ++sweep) {
    std::vector<Eigen::VectorXd> q = fitted_stats(s, fit.beta);
    kkt = kkt_from_stats(s, fit.beta, lambda, q);
    if (kkt <= kKktTarget) break;
    ++fit.iterations;
    polish_sweep(s, fit.beta, lambda, q);
    const double current = objective(stack, fit.beta, lambda);
    check_monotone(prev_objective, current, lambda, 1, "polish");
    prev_objective = current;
  }
  // The KKT certificate is the convergence criterion; the ridge phase is a
  // warm-up whose change tolerance and cap are heuristics (at lambda_max its
  // tail decays harmonically, so the cap can trip on an exact solution).
  fit.converged = kkt <= kKktTarget;

  fit.group_norms.resize(p);
  for (int j = 0; j < p; ++j) fit.group_norms(j) = group_norm(fit.beta, j);
  fit.intercepts.resize(d_count);
  for (int d = 0; d < d_count; ++d) {
    const auto& ds = stack.datasets[static_cast<std::size_t>(d)];
    fit.intercepts(d) =
        ds.y.mean() - ds.x.colwise().mean().dot(fit.beta.row(d));
  }
  return fit;
}

double milasso_kkt_residual(const ImputedStack& stack,
                            const GroupLassoFit& fit) {
  const StackStats s = make_stats(stack);
  if (fit.beta.rows() != s.d_count || fit.beta.cols() != s.p) {
    throw std::invalid_argument("fit shape does not match the stack");
  }
  const std::vector<Eigen::VectorXd> q = fitted_stats(s, fit.beta);
  return kkt_from_stats(s, fit.beta, fit.lambda, q);
}

double milasso_lambda_max(const ImputedStack& stack) {
  const StackStats s = make_stats(stack);
  double best = 0.0;
  std::vector<double> component(static_cast<std::size_t>(s.d_count));
  for (int j = 0; j < s.p; ++j) {
    for (int d = 0; d < s.d_count; ++d) {
      component[static_cast<std::size_t>(d)] =
          2.0 * s.xty[static_cast<std::size_t>(d)](j);
    }
    best = std::max(best, stable_norm(component));
  }
  return best;
}

std::vector<double> default_lambda_grid(double lambda_max, int points,
                                        double ratio) {
  if (!std::isfinite(lambda_max) || lambda_max <= 0.0) {
    throw std::invalid_argument("lambda_max must be positive and finite");
  }
  if (points < 1) throw std::invalid_argument("grid needs at least one point");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("grid ratio must lie in (0, 1]");
  }
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  if (points == 1) {
    grid.push_back(lambda_max);
    return grid;
  }
  const double log_ratio = std::log(ratio);
  for (int i = 0; i < points; ++i) {
    grid.push_back(lambda_max * std::exp(log_ratio * static_cast<double>(i) /
                                         static_cast<double>(points - 1)));
  }
  return grid;
}

MilassoTuneResult tune_milasso(const ImputedStack& stack,
                               const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) {
    throw std::invalid_argument("lambda grid must not be empty");
  }
  std::vector<double> lambdas = lambda_grid;
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

  const Eigen::MatrixXd beta_ols = per_dataset_ols(stack);
  MilassoTuneResult out;
  out.path.reserve(lambdas.size());
  Eigen::MatrixXd warm_storage;
  const Eigen::MatrixXd* warm = nullptr;
  double best_bic = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double lambda : lambdas) {
    GroupLassoFit fit = fit_milasso(stack, lambda, warm);
    warm_storage = fit.beta;
    warm = &warm_storage;

    const ModifiedBic bic = modified_bic(stack, fit.beta, beta_ols);
    LambdaPathEntry entry;
    entry.lambda = lambda;
    entry.bic = bic.value;
    entry.df = bic.df;
    entry.converged = fit.converged;
    for (int j = 0; j < fit.group_norms.size(); ++j) {
      if (fit.group_norms(j) > 0.0) ++entry.active_groups;
    }
    out.path.push_back(entry);
    // strict <: ties keep the earlier, larger lambda (the sparser model)
    if (!have_best || bic.value < best_bic) {
      best_bic = bic.value;
      have_best = true;
      out.best = std::move(fit);
    }
  }
  return out;
}

LassoFit fit_lasso(const Dataset& data, double lambda,
                   const Eigen::VectorXd* warm_start) {
  data.validate();
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw std::invalid_argument("lasso penalty must be finite and >= 0");
  }
  const int p = data.p();
  LassoFit fit;
  fit.lambda = lambda;

  if (lambda == 0.0) {
    const Eigen::MatrixXd xtx = data.x.transpose() * data.x;
    fit.beta = xtx.ldlt().solve(data.x.transpose() * data.y);
    fit.iterations = 1;
    fit.converged = true;
    return fit;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (warm_start != nullptr) {
    if (warm_start->size() != p || !warm_start->allFinite()) {
      throw std::invalid_argument("warm start must be a finite p-vector");
    }
    beta = *warm_start;
  }
  Eigen::VectorXd column_scale(p);
  for (int j = 0; j < p; ++j) {
    column_scale(j) = data.x.col(j).squaredNorm();
    if (column_scale(j) <= 0.0) {
      throw std::invalid_argument(
          "covariate column '" + data.column_names[static_cast<std::size_t>(j)] +
          "' has zero norm");
    }
  }
  Eigen::VectorXd residual = data.y - data.x * beta;
  for (int sweep = 0; sweep < kMaxLassoSweeps; ++sweep) {
    ++fit.iterations;
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      const double u = data.x.col(j).dot(residual) + column_scale(j) * beta(j);
      const double updated = soft_threshold(u, lambda) / column_scale(j);
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        residual -= data.x.col(j) * delta;
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (lasso_kkt_from_residual(data, beta, lambda, residual) <=
        kLassoKktTarget) {
      fit.converged = true;
      break;
    }
    if (max_change == 0.0) break;  // stalled short of the certificate
  }
  fit.beta = std::move(beta);
  return fit;
}

double lasso_kkt_residual(const Dataset& data, const Eigen::VectorXd& beta,
                          double lambda) {
  if (beta.size() != data.p()) {
    throw std::invalid_argument("coefficient length does not match data");
  }
  const Eigen::VectorXd residual = data.y - data.x * beta;
  return lasso_kkt_from_residual(data, beta, lambda, residual);
}

double lasso_lambda_max(const Dataset& data) {
  return (data.x.transpose() * data.y).cwiseAbs().maxCoeff();
}

LassoTuneResult tune_lasso(const Dataset& data,
                           const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) {
    throw std::invalid_argument("lambda grid must not be empty");
  }
  std::vector<double> lambdas = lambda_grid;
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

  ImputedStack single;
  single.datasets = {data};
  single.provenance = StackProvenance::Loaded;
  const Eigen::MatrixXd beta_ols = per_dataset_ols(single);

  LassoTuneResult out;
  out.path.reserve(lambdas.size());
  Eigen::VectorXd warm_storage;
  const Eigen::VectorXd* warm = nullptr;
  double best_bic = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double lambda : lambdas) {
    LassoFit fit = fit_lasso(data, lambda, warm);
    warm_storage = fit.beta;
    warm = &warm_storage;

    Eigen::MatrixXd beta_bar(1, data.p());
    beta_bar.row(0) = fit.beta.transpose();
    const ModifiedBic bic = modified_bic(single, beta_bar, beta_ols);
    LambdaPathEntry entry;
    entry.lambda = lambda;
    entry.bic = bic.value;
    entry.df = bic.df;
    entry.converged = fit.converged;
    for (int j = 0; j < fit.beta.size(); ++j) {
      if (fit.beta(j) != 0.0) ++entry.active_groups;
    }
    out.path.push_back(entry);
    if (!have_best || bic.value < best_bic) {
      best_bic = bic.value;
      have_best = true;
      out.best = std::move(fit);
    }
  }
  return out;
}

}  // namespace bmilasso

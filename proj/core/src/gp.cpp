#include "bmilasso/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bmilasso/distributions.hpp"

namespace bmilasso {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double length_scale,
                              double signal_var, double noise_var) {
  const Eigen::Index m = x.rows();
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i, i) = signal_var + noise_var;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (x.row(i) - x.row(j)).norm();
      const double value = signal_var * matern52(r, length_scale);
      k(i, j) = value;
      k(j, i) = value;
    }
  }
  return k;
}

}  // namespace

double matern52(double distance, double length_scale) {
  const double t = std::sqrt(5.0) * distance / length_scale;
  return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

double gp_log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       double mean, double length_scale, double signal_var,
                       double noise_var) {
  Eigen::MatrixXd k = kernel_matrix(x, length_scale, signal_var, noise_var);
  if (cholesky_lower_in_place(k) >= 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd centered = y.array() - mean;
  const Eigen::VectorXd white = k.triangularView<Eigen::Lower>().solve(centered);
  const double quad = white.squaredNorm();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i) log_det += std::log(k(i, i));
  return -0.5 * quad - log_det -
         0.5 * static_cast<double>(y.size()) * std::log(kTwoPi);
}

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               double noise_var) {
  if (x.rows() != y.size() || x.rows() < 1) {
    throw std::invalid_argument("gp: inputs and targets must align");
  }
  GpModel model;
  model.x = x;
  model.y = y;
  model.noise_var = noise_var;
  model.mean = y.mean();

  double var_y = 0.0;
  if (y.size() > 1) {
    var_y = (y.array() - model.mean).square().sum() /
            static_cast<double>(y.size() - 1);
  }
  if (!(var_y > 1e-12)) var_y = 1e-12;

  const std::vector<double> lengths = {0.05, 0.1, 0.2, 0.3,  0.5,
                                       0.75, 1.0, 1.5, 2.0, 3.0};
  const std::vector<double> signal_factors = {0.25, 0.5, 1.0, 2.0, 4.0};

  double best_lml = -std::numeric_limits<double>::infinity();
  for (double length : lengths) {
    for (double factor : signal_factors) {
      const double signal = factor * var_y;
      const double lml =
          gp_log_marginal(x, y, model.mean, length, signal, noise_var);
      if (lml > best_lml) {
        best_lml = lml;
        model.length_scale = length;
        model.signal_var = signal;
      }
    }
  }

  Eigen::MatrixXd k =
      kernel_matrix(x, model.length_scale, model.signal_var, model.noise_var);
  double jitter = noise_var;
  for (int attempt = 0; attempt < 6 && cholesky_lower_in_place(k) >= 0;
       ++attempt) {
    jitter *= 100.0;
    k = kernel_matrix(x, model.length_scale, model.signal_var, jitter);
    model.noise_var = jitter;
  }
  model.chol = std::move(k);
  model.alpha = model.chol.triangularView<Eigen::Lower>().solve(
      (y.array() - model.mean).matrix());
  model.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(
      model.alpha);
  return model;
}

GpPrediction gp_predict(const GpModel& model, const Eigen::VectorXd& point) {
  const Eigen::Index m = model.x.rows();
  Eigen::VectorXd k_star(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = (model.x.row(i).transpose() - point).norm();
    k_star[i] = model.signal_var * matern52(r, model.length_scale);
  }
  GpPrediction pred;
  pred.mean = model.mean + k_star.dot(model.alpha);
  const Eigen::VectorXd v =
      model.chol.triangularView<Eigen::Lower>().solve(k_star);
  const double var = model.signal_var - v.squaredNorm();
  pred.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  return pred;
}

double expected_improvement(double mean, double sd, double best) {
  const double gap = best - mean;
  if (!(sd > 0.0)) return gap > 0.0 ? gap : 0.0;
  const double z = gap / sd;
  const double ei = gap * normal_cdf(z) + sd * normal_pdf(z);
  return ei > 0.0 ? ei : 0.0;
}

}  // namespace bmilasso

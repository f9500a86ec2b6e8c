#pragma once

#include <Eigen/Dense>

namespace bmilasso {

// Gaussian-process regressor with an isotropic Matern-5/2 kernel, constant
// mean, and fixed observation noise. Length scale and signal variance are
// picked by maximizing the log marginal likelihood over a fixed grid.
// Inputs are expected inside the unit cube.
struct GpModel {
  Eigen::MatrixXd x;  // m x k training inputs
  Eigen::VectorXd y;  // m targets
  double mean = 0.0;
  double length_scale = 1.0;
  double signal_var = 1.0;
  double noise_var = 1e-6;
  Eigen::MatrixXd chol;   // lower factor of the kernel matrix
  Eigen::VectorXd alpha;  // solve(K, y - mean)
};

double matern52(double distance, double length_scale);

double gp_log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       double mean, double length_scale, double signal_var,
                       double noise_var);

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               double noise_var = 1e-6);

// Posterior of the latent function (observation noise excluded).
struct GpPrediction {
  double mean = 0.0;
  double sd = 0.0;
};

GpPrediction gp_predict(const GpModel& model, const Eigen::VectorXd& point);

// Expected improvement below `best` for a minimization problem. A
// deterministic prediction (sd = 0) improves by best - mean when that is
// positive and zero otherwise.
double expected_improvement(double mean, double sd, double best);

}  // namespace bmilasso

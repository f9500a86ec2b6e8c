#pragma once

#include <Eigen/Dense>

#include "bmilasso/rng.hpp"

namespace bmilasso {

// Scalar samplers. Parameterizations are spelled out per function because
// Gamma-family conventions are the main source of silent bugs in Gibbs code.

// Standard normal draw (Box-Muller; consumes exactly two uniforms).
double sample_normal(Rng& rng);

// Gamma with density x^{shape-1} exp(-rate x); shape > 0, rate > 0.
double sample_gamma(Rng& rng, double shape, double rate);

// Inverse gamma with density x^{-shape-1} exp(-scale / x); shape, scale > 0.
double sample_inverse_gamma(Rng& rng, double shape, double scale);

double sample_beta(Rng& rng, double a, double b);

// Chi-square with df degrees of freedom.
double sample_chi_square(Rng& rng, double df);

// Inverse Gaussian IG(mu, lambda) via the Michael-Schucany-Haas transform.
double sample_inverse_gaussian(Rng& rng, double mu, double lambda);

// Generalized inverse Gaussian with index 1/2:
//   density proportional to x^{-1/2} exp(-(a x + b / x) / 2),  a > 0, b >= 0.
// Uses the exact identity X ~ GIG(1/2, a, b)  <=>  1/X ~ IG(sqrt(a/b), a);
// at b = 0 the distribution degenerates to Gamma(1/2, rate a/2).
double sample_gig_half(Rng& rng, double a, double b);

// Generalized inverse Gaussian with arbitrary index p:
//   density proportional to x^{p-1} exp(-(a x + b / x) / 2).
// Requires a > 0 for p > 0, b > 0 for p < 0 (proper distribution).
// Ratio-of-uniforms with mode shift; exact for all admissible parameters.
double sample_gig(Rng& rng, double p, double a, double b);

// Draw from N(precision^{-1} rhs, precision^{-1}) using one Cholesky
// factorization and triangular solves; the covariance is never formed.
// Throws std::runtime_error naming the failing pivot if the matrix is not
// positive definite.
Eigen::VectorXd sample_mvn_precision(Rng& rng, const Eigen::VectorXd& rhs,
                                     const Eigen::MatrixXd& precision);

// In-place lower Cholesky: returns the index of the first non-positive
// pivot, or -1 on success. Exposed for reuse and for direct testing.
int cholesky_lower_in_place(Eigen::MatrixXd& a);

// Standard normal pdf/cdf (used by expected improvement and MAR masking).
double normal_pdf(double z);
double normal_cdf(double z);

double logistic(double x);

}  // namespace bmilasso

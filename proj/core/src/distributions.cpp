#include "bmilasso/distributions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bmilasso {

namespace {

constexpr double kTiny = 1e-300;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("distributions: ") + what);
}

}  // namespace

double sample_normal(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gamma(Rng& rng, double shape, double rate) {
  require(shape > 0.0 && rate > 0.0, "gamma requires shape > 0, rate > 0");
  // Marsaglia-Tsang squeeze for shape >= 1; boost to shape + 1 below 1.
  if (shape < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(rng, shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v / rate;
  }
}

double sample_inverse_gamma(Rng& rng, double shape, double scale) {
  require(shape > 0.0 && scale > 0.0,
          "inverse gamma requires shape > 0, scale > 0");
  return scale / sample_gamma(rng, shape, 1.0);
}

double sample_beta(Rng& rng, double a, double b) {
  require(a > 0.0 && b > 0.0, "beta requires a > 0, b > 0");
  const double x = sample_gamma(rng, a, 1.0);
  const double y = sample_gamma(rng, b, 1.0);
  return x / (x + y);
}

double sample_chi_square(Rng& rng, double df) {
  return sample_gamma(rng, df / 2.0, 0.5);
}

double sample_inverse_gaussian(Rng& rng, double mu, double lambda) {
  require(mu > 0.0 && lambda > 0.0, "inverse gaussian requires mu, lambda > 0");
  const double z = sample_normal(rng);
  const double nu = z * z;
  // Michael-Schucany-Haas, with the smaller root computed through the
  // root product x- x+ = mu^2 to avoid cancellation for large mu nu / lambda.
  const double q = mu * nu / (2.0 * lambda);
  const double s = q + std::sqrt(q * (q + 2.0));
  const double x = mu / (1.0 + s);
  const double u = rng.uniform();
  if (u <= mu / (mu + x)) return x > kTiny ? x : kTiny;
  const double y = mu * (1.0 + s);
  return y > kTiny ? y : kTiny;
}

double sample_gig_half(Rng& rng, double a, double b) {
  require(a > 0.0 && b >= 0.0, "gig_half requires a > 0, b >= 0");
  if (b <= kTiny) return sample_gamma(rng, 0.5, a / 2.0);
  const double w = sample_inverse_gaussian(rng, std::sqrt(a / b), a);
  return 1.0 / w;
}

namespace {

// Log of the unnormalized GIG density x^{p-1} exp(-(a x + b / x) / 2).
double gig_log_density(double x, double p, double a, double b) {
  return (p - 1.0) * std::log(x) - 0.5 * (a * x + b / x);
}

// d/dx log density.
double gig_log_density_slope(double x, double p, double a, double b) {
  return (p - 1.0) / x - 0.5 * a + 0.5 * b / (x * x);
}

// Root of h(x) = 2 + (x - mode) * slope(x) on a bracketing interval,
// by bisection; h is continuous and changes sign on the bracket.
double gig_rou_root(double lo, double hi, double mode, double p, double a,
                    double b) {
  auto h = [&](double x) {
    return 2.0 + (x - mode) * gig_log_density_slope(x, p, a, b);
  };
  double flo = h(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = h(mid);
    if ((flo <= 0.0) == (fmid <= 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double sample_gig(Rng& rng, double p, double a, double b) {
  // Reduce to p >= 0 through the reciprocal identity
  // X ~ GIG(p, a, b)  <=>  1/X ~ GIG(-p, b, a).
  if (p < 0.0) return 1.0 / sample_gig(rng, -p, b, a);
  require(a > 0.0, "gig requires a > 0 for p >= 0");
  require(b >= 0.0, "gig requires b >= 0");
  if (b <= kTiny) {
    require(p > 0.0, "gig with b = 0 requires p > 0");
    return sample_gamma(rng, p, a / 2.0);
  }
  if (p == 0.5) return sample_gig_half(rng, a, b);

  // Ratio of uniforms with the region shifted to the mode:
  //   { (u, v) : 0 < u <= sqrt(g(v/u + m)) },  g the unnormalized density.
  const double mode =
      ((p - 1.0) + std::sqrt((p - 1.0) * (p - 1.0) + a * b)) / a;
  const double log_gm = gig_log_density(mode, p, a, b);

  // v bounds come from the extrema of (x - m) sqrt(g(x)), located where
  // 2 + (x - m) (log g)'(x) = 0; one root on each side of the mode.
  double lo = mode;
  while (gig_log_density_slope(lo * 0.5, p, a, b) * (lo * 0.5 - mode) > -2.0)
    lo *= 0.5;
  double hi = mode;
  while (gig_log_density_slope(hi * 2.0, p, a, b) * (hi * 2.0 - mode) > -2.0)
    hi *= 2.0;
  const double xm = gig_rou_root(lo * 0.5, mode, mode, p, a, b);
  const double xp = gig_rou_root(mode, hi * 2.0, mode, p, a, b);
  const double vminus =
      (xm - mode) * std::exp(0.5 * (gig_log_density(xm, p, a, b) - log_gm));
  const double vplus =
      (xp - mode) * std::exp(0.5 * (gig_log_density(xp, p, a, b) - log_gm));

  for (;;) {
    const double u = rng.uniform();
    const double v = vminus + rng.uniform() * (vplus - vminus);
    const double x = v / u + mode;
    if (x <= 0.0) continue;
    if (2.0 * std::log(u) <= gig_log_density(x, p, a, b) - log_gm) return x;
  }
}

int cholesky_lower_in_place(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  // Zero the strict upper triangle so the result is a clean factor.
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) a(i, j) = 0.0;
  return -1;
}

Eigen::VectorXd sample_mvn_precision(Rng& rng, const Eigen::VectorXd& rhs,
                                     const Eigen::MatrixXd& precision) {
  if (precision.rows() != precision.cols() ||
      precision.rows() != rhs.size()) {
    throw std::invalid_argument(
        "sample_mvn_precision: dimension mismatch between rhs and precision");
  }
  Eigen::MatrixXd l = precision;
  const int bad = cholesky_lower_in_place(l);
  if (bad >= 0) {
    throw std::runtime_error(
        "sample_mvn_precision: precision matrix not positive definite at "
        "pivot " +
        std::to_string(bad));
  }
  // mean = L^{-T} (L^{-1} rhs); draw = mean + L^{-T} z.
  Eigen::VectorXd w =
      l.triangularView<Eigen::Lower>().solve(rhs);
  Eigen::VectorXd z(rhs.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sample_normal(rng);
  w += z;
  return l.transpose().triangularView<Eigen::Upper>().solve(w);
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace bmilasso

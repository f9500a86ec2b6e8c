#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/dataset.hpp"
#include "bmilasso/metrics.hpp"

using namespace bmilasso;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Dataset data;
  data.x = x;
  data.y = y;
  for (int j = 0; j < x.cols(); ++j) {
    data.column_names.push_back("x" + std::to_string(j + 1));
    data.column_kinds.push_back(ColumnKind::Continuous);
  }
  return data;
}

ImputedStack two_dataset_stack() {
  Eigen::MatrixXd x1(4, 2), x2(4, 2);
  x1 << 1, 2, 2, 0, 3, 1, 4, 3;
  x2 << 1, 1, 2, 2, 3, 2, 4, 4;
  Eigen::VectorXd y1(4), y2(4);
  y1 << 2, 3, 5, 6;
  y2 << 2, 4, 5, 7;
  ImputedStack stack;
  stack.provenance = StackProvenance::Simulated;
  stack.datasets.push_back(make_dataset(x1, y1));
  stack.datasets.push_back(make_dataset(x2, y2));
  return stack;
}

}  // namespace

TEST_CASE("confusion scores match the hand-worked instance") {
  const std::vector<std::uint8_t> truth = {1, 1, 1, 0, 0};
  const std::vector<std::uint8_t> selected = {1, 1, 0, 1, 0};
  const Eigen::VectorXd zero5 = Eigen::VectorXd::Zero(5);
  const Eigen::MatrixXd eye5 = Eigen::MatrixXd::Identity(5, 5);

  const MetricsRow row = evaluate(selected, truth, zero5, zero5, eye5);
  CHECK(row.sensitivity == doctest::Approx(2.0 / 3.0));
  CHECK(row.specificity == doctest::Approx(0.5));
  CHECK(row.precision == doctest::Approx(2.0 / 3.0));
  CHECK(row.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(row.selected_count == 3);
  CHECK_FALSE(row.convention_flagged);
  CHECK(row.mse == 0.0);
}

TEST_CASE("weighted estimation error matches the quadratic form") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0;
  Eigen::VectorXd beta_hat(3), beta_true(3);
  beta_hat << 0.8, 0.0, -0.4;
  beta_true << 1.0, 0.5, 0.0;
  const std::vector<std::uint8_t> truth = {1, 1, 0};
  const std::vector<std::uint8_t> selected = {1, 0, 1};

  const MetricsRow row = evaluate(selected, truth, beta_hat, beta_true, sigma);
  CHECK(std::abs(row.mse - 0.606) < 1e-12);
}

TEST_CASE("zero-denominator rates take the convention value and are flagged") {
  const Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd eye3 = Eigen::MatrixXd::Identity(3, 3);

  // No positives in the truth: sensitivity has a zero denominator.
  const MetricsRow no_pos =
      evaluate({0, 0, 1}, {0, 0, 0}, zero3, zero3, eye3);
  CHECK(no_pos.sensitivity == 1.0);
  CHECK(no_pos.convention_flagged);

  // No negatives in the truth: specificity has a zero denominator.
  const MetricsRow no_neg =
      evaluate({1, 0, 1}, {1, 1, 1}, zero3, zero3, eye3);
  CHECK(no_neg.specificity == 1.0);
  CHECK(no_neg.convention_flagged);

  // Empty selection: precision 0 by convention, so F1 is 0.
  const MetricsRow empty =
      evaluate({0, 0, 0}, {1, 1, 0}, zero3, zero3, eye3);
  CHECK(empty.precision == 0.0);
  CHECK(empty.f1 == 0.0);
  CHECK(empty.selected_count == 0);
  CHECK(empty.sensitivity == 0.0);
  CHECK(empty.specificity == 1.0);
}

TEST_CASE("evaluate validates its input shapes") {
  const Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd eye3 = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(evaluate({1, 0}, {1, 0, 0}, zero3, zero3, eye3),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate({1, 0, 0}, {1, 0, 0}, Eigen::VectorXd::Zero(2),
                           zero3, eye3),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate({1, 0, 0}, {1, 0, 0}, zero3, zero3,
                           Eigen::MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("refit averages per-dataset least squares on the selected set") {
  const ImputedStack stack = two_dataset_stack();
  const RefitResult refit = refit_pool(stack, {1, 0});
  REQUIRE(refit.beta.size() == 2);
  // Single-regressor slopes: 7/5 and 8/5, averaged to 1.5.
  CHECK(std::abs(refit.beta(0) - 1.5) < 1e-12);
  CHECK(refit.beta(1) == 0.0);
  // Intercepts: 4 - 2.5 * 1.4 = 0.5 and 4.5 - 2.5 * 1.6 = 0.5.
  CHECK(std::abs(refit.intercept - 0.5) < 1e-12);
  CHECK_FALSE(refit.ridge_fallback);
}

TEST_CASE("refit with an empty selection returns the mean intercept") {
  const ImputedStack stack = two_dataset_stack();
  const RefitResult refit = refit_pool(stack, {0, 0});
  CHECK(refit.beta(0) == 0.0);
  CHECK(refit.beta(1) == 0.0);
  CHECK(std::abs(refit.intercept - 4.25) < 1e-12);
  CHECK_FALSE(refit.ridge_fallback);
}

TEST_CASE("refit rejects selections as large as the sample size") {
  Eigen::MatrixXd x(4, 5);
  x << 1, 2, 3, 4, 5, 2, 3, 4, 5, 6, 3, 1, 2, 2, 1, 4, 4, 1, 3, 2;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  ImputedStack stack;
  stack.datasets.push_back(make_dataset(x, y));
  CHECK_THROWS_AS(refit_pool(stack, {1, 1, 1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(refit_pool(stack, {1, 1, 1, 1, 0}), std::invalid_argument);
  CHECK_NOTHROW(refit_pool(stack, {1, 1, 1, 0, 0}));
  CHECK_THROWS_AS(refit_pool(stack, {1, 0}), std::invalid_argument);
}

TEST_CASE("a singular refit falls back to ridge and is flagged") {
  Eigen::MatrixXd x(6, 2);
  x << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6;  // duplicated column
  Eigen::VectorXd y(6);
  y << 1.1, 2.0, 2.9, 4.2, 5.0, 5.8;
  ImputedStack stack;
  stack.datasets.push_back(make_dataset(x, y));

  const RefitResult refit = refit_pool(stack, {1, 1});
  CHECK(refit.ridge_fallback);
  CHECK(std::isfinite(refit.beta(0)));
  CHECK(std::isfinite(refit.beta(1)));
  // The two coefficients share the fit; their sum approximates the slope.
  CHECK(refit.beta(0) + refit.beta(1) == doctest::Approx(0.97).epsilon(0.1));
}

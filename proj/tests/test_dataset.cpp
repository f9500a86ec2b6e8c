#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bmilasso/dataset.hpp"

using namespace bmilasso;

namespace {

Dataset small_dataset() {
  Dataset data;
  data.x.resize(4, 2);
  data.x << 1, 0, 2, 1, 3, 0, 4, 1;
  data.y.resize(4);
  data.y << 1, 2, 3, 4;
  data.column_names = {"x1", "x2"};
  data.column_kinds = {ColumnKind::Continuous, ColumnKind::Binary};
  return data;
}

}  // namespace

TEST_CASE("dataset validation rejects malformed inputs") {
  Dataset data = small_dataset();
  CHECK_NOTHROW(data.validate());

  Dataset short_y = small_dataset();
  short_y.y.resize(3);
  CHECK_THROWS_AS(short_y.validate(), std::invalid_argument);

  Dataset nan_cell = small_dataset();
  nan_cell.x(1, 1) = std::nan("");
  CHECK_THROWS_AS(nan_cell.validate(), std::invalid_argument);

  Dataset dup_names = small_dataset();
  dup_names.column_names = {"x1", "x1"};
  CHECK_THROWS_AS(dup_names.validate(), std::invalid_argument);

  Dataset empty_name = small_dataset();
  empty_name.column_names = {"x1", ""};
  CHECK_THROWS_AS(empty_name.validate(), std::invalid_argument);

  Dataset one_row = small_dataset();
  one_row.x = one_row.x.topRows(1).eval();
  one_row.y = one_row.y.head(1).eval();
  CHECK_THROWS_AS(one_row.validate(), std::invalid_argument);
}

TEST_CASE("column kinds are inferred from observed values only") {
  Eigen::MatrixXd x(4, 3);
  x << 0, 0.5, 1, 1, 0.7, 0, 0, 0.2, 1, 1, 0.9, 7;
  const std::vector<ColumnKind> kinds = infer_column_kinds(x);
  CHECK(kinds[0] == ColumnKind::Binary);
  CHECK(kinds[1] == ColumnKind::Continuous);
  CHECK(kinds[2] == ColumnKind::Continuous);  // the 7 disqualifies it

  // Masking out the 7 makes the third column binary again.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask(4, 3);
  mask.setOnes();
  mask(3, 2) = 0;
  const std::vector<ColumnKind> masked = infer_column_kinds(x, &mask);
  CHECK(masked[2] == ColumnKind::Binary);
}

TEST_CASE("standardize centers and scales each dataset separately") {
  ImputedStack stack;
  stack.datasets.push_back(small_dataset());
  Dataset second = small_dataset();
  second.x << 2, 1, 4, 0, 6, 1, 8, 0;
  second.y << 10, 20, 30, 40;
  stack.datasets.push_back(second);

  const auto [standardized, state] = standardize(stack);
  REQUIRE(standardized.count() == 2);
  for (int d = 0; d < 2; ++d) {
    const Dataset& ds = standardized.datasets[static_cast<std::size_t>(d)];
    for (int j = 0; j < ds.p(); ++j) {
      CHECK(ds.x.col(j).mean() == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
      const double ss = ds.x.col(j).squaredNorm();
      CHECK(ss / (ds.n() - 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(ds.y.mean() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }

  // Recorded state reproduces the originals: x = z * sd + mean.
  CHECK(state.x_mean[0](0) == doctest::Approx(2.5).epsilon(1e-15));
  const double sd0 = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  CHECK(state.x_sd[0](0) == doctest::Approx(sd0).epsilon(1e-15));
  CHECK(state.y_mean[1] == doctest::Approx(25.0).epsilon(1e-15));

  // Standardizing again is a no-op.
  const auto [twice, state2] = standardize(standardized);
  for (int d = 0; d < 2; ++d) {
    CHECK((twice.datasets[d].x - standardized.datasets[d].x).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK(state2.x_sd[d].isApproxToConstant(1.0, 1e-12));
  }
}

TEST_CASE("standardize names the constant column it rejects") {
  ImputedStack stack;
  Dataset data = small_dataset();
  data.x.col(1).setConstant(1.0);
  stack.datasets.push_back(data);
  try {
    standardize(stack);
    FAIL("expected a zero-variance error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("x2") != std::string::npos);
  }
}

TEST_CASE("destandardize recovers original-scale coefficients") {
  ImputedStack stack;
  stack.datasets.push_back(small_dataset());
  const auto [standardized, state] = standardize(stack);

  Eigen::MatrixXd beta_std(1, 2);
  beta_std << 0.6, -0.2;
  const OriginalScaleCoefficients orig =
      destandardize_coefficients(beta_std, state);
  for (int j = 0; j < 2; ++j) {
    CHECK(orig.beta(0, j) ==
          doctest::Approx(beta_std(0, j) / state.x_sd[0](j)).epsilon(1e-14));
  }
  const double expected_intercept =
      state.y_mean[0] - state.x_mean[0].dot(orig.beta.row(0));
  CHECK(orig.intercept(0) == doctest::Approx(expected_intercept).epsilon(1e-14));

  // Consistency: predictions agree on both scales.
  const Dataset& raw = stack.datasets[0];
  const Dataset& std_ds = standardized.datasets[0];
  for (int i = 0; i < raw.n(); ++i) {
    const double pred_std = std_ds.x.row(i).dot(beta_std.row(0)) +
                            state.y_mean[0];
    const double pred_raw =
        raw.x.row(i).dot(orig.beta.row(0)) + orig.intercept(0);
    CHECK(pred_std == doctest::Approx(pred_raw).epsilon(1e-12));
  }
}

TEST_CASE("stack validation enforces a shared schema") {
  ImputedStack stack;
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);

  stack.datasets.push_back(small_dataset());
  stack.datasets.push_back(small_dataset());
  CHECK_NOTHROW(stack.validate());

  stack.datasets[1].column_names = {"x1", "other"};
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);

  stack.datasets[1] = small_dataset();
  stack.datasets[1].x.conservativeResize(4, 3);
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);
}

TEST_CASE("incomplete dataset validation checks the mask") {
  IncompleteDataset inc;
  inc.data = small_dataset();
  inc.mask.resize(4, 2);
  inc.mask.setOnes();
  CHECK_NOTHROW(inc.validate());
  CHECK(inc.observed_count(0) == 4);

  inc.mask(0, 0) = 0;
  inc.mask(1, 0) = 0;
  CHECK(inc.observed_count(0) == 2);
  CHECK_NOTHROW(inc.validate());

  inc.mask(2, 0) = 0;  // one observed row left in column 0
  CHECK_THROWS_AS(inc.validate(), std::invalid_argument);

  inc.mask(2, 0) = 1;
  inc.mask(0, 1) = 2;  // masks are strictly 0/1
  CHECK_THROWS_AS(inc.validate(), std::invalid_argument);
}

TEST_CASE("complete cases drops masked rows and re-infers kinds") {
  IncompleteDataset inc;
  inc.data = small_dataset();
  inc.data.x(0, 0) = 0.0;  // placeholder at a masked cell
  inc.mask.resize(4, 2);
  inc.mask.setOnes();
  inc.mask(0, 0) = 0;
  inc.mask(2, 1) = 0;

  const Dataset cc = complete_cases(inc);
  REQUIRE(cc.n() == 2);
  CHECK(cc.x(0, 0) == 2);
  CHECK(cc.x(1, 0) == 4);
  CHECK(cc.y(0) == 2);
  CHECK(cc.y(1) == 4);

  inc.mask(1, 0) = 0;
  inc.mask(3, 1) = 0;  // one complete row left
  CHECK_THROWS_AS(complete_cases(inc), std::invalid_argument);
}

#include "bmilasso/dataset.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace bmilasso {

namespace {

constexpr double kStandardizeTolerance = 1e-12;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("dataset: " + message);
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 2) fail("need at least 2 rows, got " + std::to_string(x.rows()));
  if (x.cols() < 1) fail("need at least 1 covariate");
  if (y.size() != x.rows())
    fail("y length " + std::to_string(y.size()) + " does not match row count " +
         std::to_string(x.rows()));
  if (static_cast<Eigen::Index>(column_names.size()) != x.cols())
    fail("column_names size does not match covariate count");
  if (static_cast<Eigen::Index>(column_kinds.size()) != x.cols())
    fail("column_kinds size does not match covariate count");
  if (!x.allFinite()) fail("covariate matrix contains non-finite entries");
  if (!y.allFinite()) fail("response contains non-finite entries");
  std::set<std::string> seen;
  for (const auto& name : column_names) {
    if (name.empty()) fail("empty column name");
    if (!seen.insert(name).second) fail("duplicate column name '" + name + "'");
  }
}

std::vector<ColumnKind> infer_column_kinds(
    const Eigen::MatrixXd& x,
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>* mask) {
  std::vector<ColumnKind> kinds(static_cast<std::size_t>(x.cols()),
                                ColumnKind::Binary);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (mask != nullptr && (*mask)(i, j) == 0) continue;
      const double v = x(i, j);
      if (v != 0.0 && v != 1.0) {
        kinds[static_cast<std::size_t>(j)] = ColumnKind::Continuous;
        break;
      }
    }
  }
  return kinds;
}

int IncompleteDataset::observed_count(int col) const {
  int count = 0;
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    if (mask(i, col) != 0) ++count;
  return count;
}

void IncompleteDataset::validate() const {
  data.validate();
  if (mask.rows() != data.x.rows() || mask.cols() != data.x.cols())
    fail("mask shape does not match covariate matrix");
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j) > 1)
        fail("mask entries must be 0 or 1");
  for (int j = 0; j < p(); ++j) {
    if (observed_count(j) < 2)
      fail("column '" + data.column_names[static_cast<std::size_t>(j)] +
           "' has fewer than 2 observed values");
  }
}

void ImputedStack::validate() const {
  if (datasets.empty()) fail("stack must contain at least one dataset");
  datasets.front().validate();
  const auto& first = datasets.front();
  for (std::size_t d = 1; d < datasets.size(); ++d) {
    const auto& ds = datasets[d];
    ds.validate();
    if (ds.n() != first.n() || ds.p() != first.p())
      fail("dataset " + std::to_string(d + 1) + " shape differs from dataset 1");
    if (ds.column_names != first.column_names)
      fail("dataset " + std::to_string(d + 1) +
           " column names differ from dataset 1");
    if (ds.column_kinds != first.column_kinds)
      fail("dataset " + std::to_string(d + 1) +
           " column kinds differ from dataset 1");
  }
}

std::pair<ImputedStack, StandardizationState> standardize(
    const ImputedStack& stack) {
  stack.validate();
  ImputedStack out = stack;
  StandardizationState state;
  state.x_mean.reserve(stack.datasets.size());
  state.x_sd.reserve(stack.datasets.size());
  state.y_mean.reserve(stack.datasets.size());
  for (auto& ds : out.datasets) {
    const double n = static_cast<double>(ds.n());
    Eigen::VectorXd mean = ds.x.colwise().mean();
    Eigen::VectorXd sd(ds.p());
    for (int j = 0; j < ds.p(); ++j) {
      const double ss = (ds.x.col(j).array() - mean(j)).square().sum();
      sd(j) = std::sqrt(ss / (n - 1.0));
      if (sd(j) <= kStandardizeTolerance)
        fail("column '" + ds.column_names[static_cast<std::size_t>(j)] +
             "' has zero variance");
      ds.x.col(j) = (ds.x.col(j).array() - mean(j)) / sd(j);
    }
    const double ym = ds.y.mean();
    ds.y.array() -= ym;
    state.x_mean.push_back(std::move(mean));
    state.x_sd.push_back(std::move(sd));
    state.y_mean.push_back(ym);
  }
  return {std::move(out), std::move(state)};
}

Dataset complete_cases(const IncompleteDataset& incomplete) {
  incomplete.validate();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < incomplete.mask.rows(); ++i) {
    if (incomplete.mask.row(i).minCoeff() != 0) keep.push_back(i);
  }
  if (keep.size() < 2)
    fail("fewer than 2 complete cases (" + std::to_string(keep.size()) + ")");
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(keep.size()), incomplete.p());
  out.y.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = incomplete.data.x.row(keep[r]);
    out.y(static_cast<Eigen::Index>(r)) = incomplete.data.y(keep[r]);
  }
  out.column_names = incomplete.data.column_names;
  out.column_kinds = infer_column_kinds(out.x);
  return out;
}

OriginalScaleCoefficients destandardize_coefficients(
    const Eigen::MatrixXd& beta_std, const StandardizationState& state) {
  const Eigen::Index d_count = beta_std.rows();
  if (d_count != state.count())
    fail("coefficient rows do not match standardization state");
  OriginalScaleCoefficients out;
  out.beta.resize(beta_std.rows(), beta_std.cols());
  out.intercept.resize(d_count);
  for (Eigen::Index d = 0; d < d_count; ++d) {
    const auto& mean = state.x_mean[static_cast<std::size_t>(d)];
    const auto& sd = state.x_sd[static_cast<std::size_t>(d)];
    double intercept = state.y_mean[static_cast<std::size_t>(d)];
    for (Eigen::Index j = 0; j < beta_std.cols(); ++j) {
      out.beta(d, j) = beta_std(d, j) / sd(j);
      intercept -= out.beta(d, j) * mean(j);
    }
    out.intercept(d) = intercept;
  }
  return out;
}

}  // namespace bmilasso

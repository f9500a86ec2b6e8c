#include "bmilasso/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace bmilasso {

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end(), [](double a, double b) {
    const double aa = std::abs(a);
    const double ab = std::abs(b);
    if (aa != ab) return aa < ab;
    return a < b;
  });
  return compensated_sum(values);
}

double compensated_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return compensated_sum(values) / static_cast<double>(values.size());
}

double stable_norm(const std::vector<double>& values) {
  std::vector<double> squares(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    squares[i] = values[i] * values[i];
  }
  return std::sqrt(stable_sum(std::move(squares)));
}

}  // namespace bmilasso

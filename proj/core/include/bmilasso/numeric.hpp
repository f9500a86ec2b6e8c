#pragma once

#include <vector>

namespace bmilasso {

// Kahan-compensated sum taken in the given order.
double compensated_sum(const std::vector<double>& values);

// Magnitude-ordered compensated sum. The result depends only on the multiset
// of addends, never on their incoming order, which makes reductions over
// imputed datasets invariant to dataset order.
double stable_sum(std::vector<double> values);

double compensated_mean(const std::vector<double>& values);

// Euclidean norm via a stable_sum of squares; order-invariant like the sum.
double stable_norm(const std::vector<double>& values);

}  // namespace bmilasso

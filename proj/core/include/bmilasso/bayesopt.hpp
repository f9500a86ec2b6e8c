#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bmilasso {

// One tunable hyperparameter; log-scaled parameters are searched on the
// logarithm of [lower, upper].
struct ParameterSpec {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;
};

struct SearchSpace {
  std::vector<ParameterSpec> parameters;

  void validate() const;
  int dimension() const { return static_cast<int>(parameters.size()); }
  // Maps between the unit cube and natural parameter values.
  std::vector<double> to_natural(const std::vector<double>& unit) const;
};

// Published tuning ranges for the two spike models.
SearchSpace spike_normal_space();   // v0 in [0.01, 1000] log, p0 in [0.01, 0.99]
SearchSpace spike_laplace_space();  // lambda in [0.01, 100], a, b in [0.1, 1000], all log

struct BoPoint {
  std::vector<double> values;  // natural scale
  double objective = 0.0;
  bool failed = false;
};

struct BoTrace {
  std::vector<BoPoint> history;        // evaluation order
  std::vector<double> best_so_far;     // running minimum, one per evaluation
};

struct BoResult {
  std::vector<double> best;  // natural scale
  double best_objective = 0.0;
  BoTrace trace;
};

// Minimizes the evaluator over the search space: three quasi-random starts,
// then expected-improvement steps under a Matern-5/2 surrogate, maximized
// by multi-start pattern search. Evaluator exceptions and non-finite values
// are recorded as failed points and excluded from the surrogate. Requires
// budget >= 3; returns the best evaluated point. Deterministic given seed.
BoResult optimize(const SearchSpace& space,
                  const std::function<double(const std::vector<double>&)>& evaluator,
                  int budget, std::uint64_t seed);

// Radical-inverse sequence member used for the quasi-random starts.
double halton(std::uint64_t index, std::uint64_t base);

}  // namespace bmilasso

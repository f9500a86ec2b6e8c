#include "bmilasso/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "bmilasso/gp.hpp"
#include "bmilasso/rng.hpp"

namespace bmilasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const std::vector<std::uint64_t> kHaltonBases = {2, 3, 5, 7, 11, 13, 17, 19};

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("bayesopt: " + message);
}

std::vector<double> halton_point(std::uint64_t index, int dims) {
  std::vector<double> u(static_cast<std::size_t>(dims));
  for (int d = 0; d < dims; ++d) {
    u[static_cast<std::size_t>(d)] = halton(index, kHaltonBases[static_cast<std::size_t>(d)]);
  }
  return u;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Maximizes expected improvement from one starting point by coordinate
// pattern search with a halving step.
void pattern_search(const GpModel& model, double best_y,
                    std::vector<double>& point, double& value) {
  const int dims = static_cast<int>(point.size());
  const auto score = [&](const std::vector<double>& u) {
    const Eigen::Map<const Eigen::VectorXd> v(u.data(), dims);
    const GpPrediction pred = gp_predict(model, v);
    return expected_improvement(pred.mean, pred.sd, best_y);
  };
  value = score(point);
  double step = 0.25;
  std::vector<double> probe = point;
  for (int sweep = 0; sweep < 200 && step >= 1e-4; ++sweep) {
    bool improved = false;
    for (int d = 0; d < dims; ++d) {
      for (double sign : {1.0, -1.0}) {
        probe = point;
        probe[static_cast<std::size_t>(d)] =
            clamp01(point[static_cast<std::size_t>(d)] + sign * step);
        const double candidate = score(probe);
        if (candidate > value) {
          value = candidate;
          point = probe;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace

double halton(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double fraction = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += fraction * static_cast<double>(index % base);
    index /= base;
    fraction /= static_cast<double>(base);
  }
  return result;
}

void SearchSpace::validate() const {
  if (parameters.empty()) fail("search space has no parameters");
  if (parameters.size() > kHaltonBases.size()) {
    fail("search space supports at most " +
         std::to_string(kHaltonBases.size()) + " parameters");
  }
  for (const ParameterSpec& spec : parameters) {
    if (spec.name.empty()) fail("parameter without a name");
    if (!(spec.lower < spec.upper)) {
      fail("parameter " + spec.name + " needs lower < upper");
    }
    if (spec.log_scale && !(spec.lower > 0.0)) {
      fail("parameter " + spec.name + " is log-scaled and needs lower > 0");
    }
  }
}

std::vector<double> SearchSpace::to_natural(
    const std::vector<double>& unit) const {
  if (unit.size() != parameters.size()) {
    fail("unit point dimension mismatch");
  }
  std::vector<double> natural(unit.size());
  for (std::size_t d = 0; d < unit.size(); ++d) {
    const ParameterSpec& spec = parameters[d];
    const double u = clamp01(unit[d]);
    if (spec.log_scale) {
      const double lo = std::log(spec.lower);
      const double hi = std::log(spec.upper);
      natural[d] = std::exp(lo + u * (hi - lo));
    } else {
      natural[d] = spec.lower + u * (spec.upper - spec.lower);
    }
  }
  return natural;
}

SearchSpace spike_normal_space() {
  SearchSpace space;
  space.parameters = {{"v0", 0.01, 1000.0, true}, {"p0", 0.01, 0.99, false}};
  return space;
}

SearchSpace spike_laplace_space() {
  SearchSpace space;
  space.parameters = {{"lambda", 0.01, 100.0, true},
                      {"a", 0.1, 1000.0, true},
                      {"b", 0.1, 1000.0, true}};
  return space;
}

BoResult optimize(
    const SearchSpace& space,
    const std::function<double(const std::vector<double>&)>& evaluator,
    int budget, std::uint64_t seed) {
  space.validate();
  if (budget < 3) fail("budget must be at least 3");
  const int dims = space.dimension();

  BoResult out;
  out.best_objective = kInf;
  std::vector<std::vector<double>> usable_units;
  std::vector<double> usable_values;
  std::vector<double> best_unit;

  for (int round = 0; round < budget; ++round) {
    std::vector<double> unit;
    if (round < 3 || usable_values.size() < 2) {
      unit = halton_point(static_cast<std::uint64_t>(round) + 1, dims);
    } else {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(usable_units.size()), dims);
      Eigen::VectorXd y(static_cast<Eigen::Index>(usable_values.size()));
      for (std::size_t i = 0; i < usable_units.size(); ++i) {
        for (int d = 0; d < dims; ++d) {
          x(static_cast<Eigen::Index>(i), d) = usable_units[i][static_cast<std::size_t>(d)];
        }
        y[static_cast<Eigen::Index>(i)] = usable_values[i];
      }
      const GpModel model = gp_fit(x, y);
      const double best_y = y.minCoeff();

      Rng rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(round)));
      std::vector<std::vector<double>> starts;
      for (int s = 0; s < 16; ++s) {
        std::vector<double> u(static_cast<std::size_t>(dims));
        for (int d = 0; d < dims; ++d) u[static_cast<std::size_t>(d)] = rng.uniform();
        starts.push_back(std::move(u));
      }
      if (!best_unit.empty()) starts.push_back(best_unit);
      starts.push_back(std::vector<double>(static_cast<std::size_t>(dims), 0.5));

      double best_ei = -1.0;
      for (std::vector<double>& start : starts) {
        double value = 0.0;
        pattern_search(model, best_y, start, value);
        if (value > best_ei) {
          best_ei = value;
          unit = start;
        }
      }
    }

    const std::vector<double> natural = space.to_natural(unit);
    BoPoint point;
    point.values = natural;
    try {
      point.objective = evaluator(natural);
      if (!std::isfinite(point.objective)) {
        point.objective = kInf;
        point.failed = true;
      }
    } catch (const std::exception&) {
      point.objective = kInf;
      point.failed = true;
    }

    if (!point.failed) {
      usable_units.push_back(unit);
      usable_values.push_back(point.objective);
      if (point.objective < out.best_objective) {
        out.best_objective = point.objective;
        out.best = natural;
        best_unit = unit;
      }
    }
    out.trace.history.push_back(std::move(point));
    out.trace.best_so_far.push_back(out.best_objective);
  }

  if (out.best.empty()) {
    throw std::runtime_error("bayesopt: every evaluation failed");
  }
  return out;
}

}  // namespace bmilasso

// Microbenchmarks for the hot paths: one Gibbs sweep per model family, the
// heavy-tailed samplers, and the grouped coordinate descent solver.

#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "bmilasso/dataset.hpp"
#include "bmilasso/distributions.hpp"
#include "bmilasso/gibbs.hpp"
#include "bmilasso/group_lasso.hpp"
#include "bmilasso/rng.hpp"

namespace {

using namespace bmilasso;

// Synthetic standardized stack: n rows, p covariates, D datasets, three
// active covariates. Deterministic so timings are comparable across runs.
ImputedStack make_stack(int n, int p, int d_count) {
  Rng rng(42);
  ImputedStack stack;
  stack.provenance = StackProvenance::Simulated;
  for (int d = 0; d < d_count; ++d) {
    Dataset data;
    data.x.resize(n, p);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) data.x(i, j) = sample_normal(rng);
      data.y(i) = data.x(i, 0) - data.x(i, 1) + 0.5 * data.x(i, 2) +
                  sample_normal(rng);
    }
    for (int j = 0; j < p; ++j) {
      data.column_names.push_back("x" + std::to_string(j + 1));
      data.column_kinds.push_back(ColumnKind::Continuous);
    }
    stack.datasets.push_back(std::move(data));
  }
  return standardize(stack).first;
}

void bench_gibbs_sweep(benchmark::State& state, ModelKind kind) {
  const ImputedStack stack = make_stack(100, 20, 5);
  const GibbsProblem problem = GibbsProblem::from_stack(stack);
  const ModelSpec model = ModelSpec::defaults(kind);
  Rng rng(7);
  LatentState latent = initial_state(problem, model, rng);
  for (auto _ : state) {
    gibbs_sweep(latent, problem, model, rng);
    benchmark::DoNotOptimize(latent.sigma2);
  }
}

void bench_multilaplace(benchmark::State& state) {
  bench_gibbs_sweep(state, ModelKind::MultiLaplace);
}
void bench_horseshoe(benchmark::State& state) {
  bench_gibbs_sweep(state, ModelKind::Horseshoe);
}
void bench_ard(benchmark::State& state) {
  bench_gibbs_sweep(state, ModelKind::Ard);
}
void bench_spike_normal(benchmark::State& state) {
  bench_gibbs_sweep(state, ModelKind::SpikeNormal);
}
void bench_spike_laplace(benchmark::State& state) {
  bench_gibbs_sweep(state, ModelKind::SpikeLaplace);
}

void bench_gig(benchmark::State& state) {
  Rng rng(11);
  double acc = 0.0;
  for (auto _ : state) {
    acc += sample_gig(rng, 0.5, 2.0, 3.0);
  }
  benchmark::DoNotOptimize(acc);
}

void bench_inverse_gaussian(benchmark::State& state) {
  Rng rng(11);
  double acc = 0.0;
  for (auto _ : state) {
    acc += sample_inverse_gaussian(rng, 1.5, 2.0);
  }
  benchmark::DoNotOptimize(acc);
}

void bench_group_lasso(benchmark::State& state) {
  const ImputedStack stack = make_stack(100, 20, 5);
  const double lambda = 0.25 * milasso_lambda_max(stack);
  for (auto _ : state) {
    GroupLassoFit fit = fit_milasso(stack, lambda);
    benchmark::DoNotOptimize(fit.beta);
  }
}

BENCHMARK(bench_multilaplace);
BENCHMARK(bench_horseshoe);
BENCHMARK(bench_ard);
BENCHMARK(bench_spike_normal);
BENCHMARK(bench_spike_laplace);
BENCHMARK(bench_gig);
BENCHMARK(bench_inverse_gaussian);
BENCHMARK(bench_group_lasso);

}  // namespace

BENCHMARK_MAIN();

#include "bmilasso/gibbs.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <utility>

#include "bmilasso/distributions.hpp"

namespace bmilasso {

namespace {

// Variance-like latents are clamped to this range after every draw. The
// bounds only guard against overflow in the precision assembly; they are
// far outside the range reachable on standardized data.
constexpr double kVarFloor = 1e-12;
constexpr double kVarCeil = 1e14;
constexpr double kSigmaRateFloor = 1e-12;
constexpr double kArdRateFloor = 1e-10;

double clamp_var(double v) {
  return std::min(std::max(v, kVarFloor), kVarCeil);
}

[[noreturn]] void fail_spec(const std::string& message) {
  throw std::invalid_argument("model spec: " + message);
}

}  // namespace

bool is_spike_model(ModelKind kind) {
  return kind == ModelKind::SpikeNormal || kind == ModelKind::SpikeLaplace;
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::MultiLaplace: return "multi_laplace";
    case ModelKind::Horseshoe: return "horseshoe";
    case ModelKind::Ard: return "ard";
    case ModelKind::SpikeNormal: return "spike_normal";
    case ModelKind::SpikeLaplace: return "spike_laplace";
  }
  throw std::logic_error("unreachable model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "multi_laplace") return ModelKind::MultiLaplace;
  if (name == "horseshoe") return ModelKind::Horseshoe;
  if (name == "ard") return ModelKind::Ard;
  if (name == "spike_normal") return ModelKind::SpikeNormal;
  if (name == "spike_laplace") return ModelKind::SpikeLaplace;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

ModelSpec ModelSpec::defaults(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  return spec;
}

void ModelSpec::validate() const {
  switch (kind) {
    case ModelKind::MultiLaplace:
      if (!(r > 0.0) || !(s > 0.0)) fail_spec("multi_laplace requires r, s > 0");
      break;
    case ModelKind::SpikeNormal:
      if (!(p0 > 0.0) || !(p0 < 1.0)) fail_spec("spike_normal requires p0 in (0,1)");
      if (!(v0 > 0.0)) fail_spec("spike_normal requires v0 > 0");
      break;
    case ModelKind::SpikeLaplace:
      if (!(a > 0.0) || !(b > 0.0)) fail_spec("spike_laplace requires a, b > 0");
      if (!(lambda > 0.0)) fail_spec("spike_laplace requires lambda > 0");
      break;
    case ModelKind::Horseshoe:
    case ModelKind::Ard:
      break;  // no hyperparameters; rejection of supplied ones happens in config parsing
  }
}

GibbsProblem GibbsProblem::from_stack(const ImputedStack& standardized) {
  standardized.validate();
  GibbsProblem problem;
  problem.n = standardized.n();
  problem.p = standardized.p();
  problem.d_count = standardized.count();
  problem.xtx.reserve(standardized.datasets.size());
  problem.xty.reserve(standardized.datasets.size());
  problem.yty.reserve(standardized.datasets.size());
  for (const auto& ds : standardized.datasets) {
    problem.xtx.push_back(ds.x.transpose() * ds.x);
    problem.xty.push_back(ds.x.transpose() * ds.y);
    problem.yty.push_back(ds.y.squaredNorm());
  }
  return problem;
}

LatentState initial_state(const GibbsProblem& problem, const ModelSpec& model,
                          Rng& rng) {
  LatentState state;
  const int p = problem.p;
  const int d = problem.d_count;
  state.beta = Eigen::MatrixXd::Zero(d, p);

  double var_y = 0.0;
  for (const double v : problem.yty) var_y += v;
  var_y /= static_cast<double>(d) * std::max(1, problem.n - 1);
  state.sigma2 = clamp_var(var_y * std::exp(rng.uniform() - 0.5));

  state.lambda2.resize(p);
  for (int j = 0; j < p; ++j)
    state.lambda2(j) = std::exp(rng.uniform() - 0.5);
  state.rho = (model.r / model.s) * std::exp(rng.uniform() - 0.5);
  state.nu = Eigen::VectorXd::Ones(p);
  state.tau2_global = std::exp(rng.uniform() - 0.5);
  state.xi = 1.0;
  state.gamma.assign(static_cast<std::size_t>(p), 1);
  state.pi = Eigen::VectorXd::Constant(p, model.a / (model.a + model.b));
  const double slab_mean =
      model.gamma_convention == GammaConvention::Scale
          ? (static_cast<double>(d) + 1.0) / (static_cast<double>(d) * model.lambda)
          : (static_cast<double>(d) + 1.0) * static_cast<double>(d) *
                model.lambda / 4.0;
  state.tau2_slab.resize(p);
  for (int j = 0; j < p; ++j)
    state.tau2_slab(j) = clamp_var(slab_mean * std::exp(rng.uniform() - 0.5));
  return state;
}

namespace {

// Prior precision of one coordinate given the current scales.
double prior_precision(const LatentState& state, const ModelSpec& model, int j) {
  switch (model.kind) {
    case ModelKind::MultiLaplace:
      return 1.0 / state.lambda2(j);
    case ModelKind::Horseshoe:
      return 1.0 / (state.tau2_global * state.lambda2(j));
    case ModelKind::Ard:
      return state.lambda2(j);
    case ModelKind::SpikeNormal:
      return 1.0 / model.v0;
    case ModelKind::SpikeLaplace:
      return 1.0 / state.tau2_slab(j);
  }
  throw std::logic_error("unreachable model kind");
}

double group_sq_norm(const LatentState& state, int j) {
  return state.beta.col(j).squaredNorm();
}

}  // namespace

void update_beta(LatentState& state, const GibbsProblem& problem,
                 const ModelSpec& model, Rng& rng) {
  const int p = problem.p;
  if (!is_spike_model(model.kind)) {
    Eigen::MatrixXd precision(p, p);
    Eigen::VectorXd rhs(p);
    for (int d = 0; d < problem.d_count; ++d) {
      precision = problem.xtx[static_cast<std::size_t>(d)] / state.sigma2;
      for (int j = 0; j < p; ++j)
        precision(j, j) += prior_precision(state, model, j);
      rhs = problem.xty[static_cast<std::size_t>(d)] / state.sigma2;
      state.beta.row(d) = sample_mvn_precision(rng, rhs, precision).transpose();
    }
    return;
  }

  std::vector<int> active;
  active.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    if (state.gamma[static_cast<std::size_t>(j)] != 0) active.push_back(j);
  state.beta.setZero();
  if (active.empty()) return;

  const int k = static_cast<int>(active.size());
  Eigen::MatrixXd precision(k, k);
  Eigen::VectorXd rhs(k);
  for (int d = 0; d < problem.d_count; ++d) {
    const auto& xtx = problem.xtx[static_cast<std::size_t>(d)];
    const auto& xty = problem.xty[static_cast<std::size_t>(d)];
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b)
        precision(a, b) = xtx(active[static_cast<std::size_t>(a)],
                              active[static_cast<std::size_t>(b)]) /
                          state.sigma2;
      precision(a, a) += prior_precision(state, model, active[static_cast<std::size_t>(a)]);
      rhs(a) = xty(active[static_cast<std::size_t>(a)]) / state.sigma2;
    }
    const Eigen::VectorXd draw = sample_mvn_precision(rng, rhs, precision);
    for (int a = 0; a < k; ++a)
      state.beta(d, active[static_cast<std::size_t>(a)]) = draw(a);
  }
}

void update_multilaplace_locals(LatentState& state, const GibbsProblem& problem,
                                const ModelSpec& model, Rng& rng) {
  const double d = static_cast<double>(problem.d_count);
  const double p = static_cast<double>(problem.p);
  if (model.gamma_convention == GammaConvention::Scale) {
    // lambda_j^2 prior rate is D rho / 2, so the conditional is
    // GIG(1/2, D rho, S_j); rho stays Gamma-conjugate.
    const double a_gig = d * state.rho;
    for (int j = 0; j < problem.p; ++j)
      state.lambda2(j) =
          clamp_var(sample_gig_half(rng, a_gig, group_sq_norm(state, j)));
    const double shape = model.r + p * (d + 1.0) / 2.0;
    const double rate = model.s + 0.5 * d * state.lambda2.sum();
    state.rho = clamp_var(sample_gamma(rng, shape, rate));
  } else {
    // lambda_j^2 prior rate is 2 / (D rho); the rho conditional picks up
    // 1/rho terms and becomes a general-index GIG.
    const double a_gig = 4.0 / (d * state.rho);
    for (int j = 0; j < problem.p; ++j)
      state.lambda2(j) =
          clamp_var(sample_gig_half(rng, a_gig, group_sq_norm(state, j)));
    const double index = model.r - p * (d + 1.0) / 2.0;
    const double a_rho = 2.0 * model.s;
    const double b_rho = 4.0 * state.lambda2.sum() / d;
    state.rho = clamp_var(sample_gig(rng, index, a_rho, b_rho));
  }
}

void update_horseshoe_locals(LatentState& state, const GibbsProblem& problem,
                             Rng& rng) {
  const double d = static_cast<double>(problem.d_count);
  const double p = static_cast<double>(problem.p);
  double rate_tau = 1.0 / state.xi;
  for (int j = 0; j < problem.p; ++j) {
    const double sj = group_sq_norm(state, j);
    state.lambda2(j) = clamp_var(sample_inverse_gamma(
        rng, (d + 1.0) / 2.0, 1.0 / state.nu(j) + sj / (2.0 * state.tau2_global)));
    state.nu(j) =
        clamp_var(sample_inverse_gamma(rng, 1.0, 1.0 + 1.0 / state.lambda2(j)));
    rate_tau += sj / (2.0 * state.lambda2(j));
  }
  state.tau2_global =
      clamp_var(sample_inverse_gamma(rng, (p * d + 1.0) / 2.0, rate_tau));
  state.xi =
      clamp_var(sample_inverse_gamma(rng, 1.0, 1.0 + 1.0 / state.tau2_global));
}

void update_ard_locals(LatentState& state, const GibbsProblem& problem,
                       Rng& rng) {
  const double d = static_cast<double>(problem.d_count);
  for (int j = 0; j < problem.p; ++j) {
    const double rate = std::max(group_sq_norm(state, j), kArdRateFloor) / 2.0;
    state.lambda2(j) = clamp_var(sample_gamma(rng, d / 2.0, rate));
  }
}

namespace {

// Log Bayes factor of {group j active} vs {group j zero} for one dataset,
// with every other group's coefficients held fixed:
//   u = x_j' (partial residual),  q = x_j'x_j / sigma^2 + 1 / v,
//   log BF = -log(v q) / 2 + u^2 / (2 sigma^4 q).
struct GroupConditional {
  double q = 0.0;
  double mean = 0.0;
  double log_bf = 0.0;
};

GroupConditional group_conditional(double u, double xjj, double sigma2,
                                   double slab_var) {
  GroupConditional out;
  out.q = xjj / sigma2 + 1.0 / slab_var;
  out.mean = u / (sigma2 * out.q);
  out.log_bf = -0.5 * std::log(slab_var * out.q) +
               u * u / (2.0 * sigma2 * sigma2 * out.q);
  return out;
}

}  // namespace

void update_spike_indicators(LatentState& state, const GibbsProblem& problem,
                             const ModelSpec& model, Rng& rng) {
  const int p = problem.p;
  const int dc = problem.d_count;

  // t_d = X'X beta_d, maintained incrementally as coordinates change.
  std::vector<Eigen::VectorXd> t(static_cast<std::size_t>(dc));
  for (int d = 0; d < dc; ++d)
    t[static_cast<std::size_t>(d)] =
        problem.xtx[static_cast<std::size_t>(d)] *
        state.beta.row(d).transpose();

  std::vector<GroupConditional> cond(static_cast<std::size_t>(dc));
  for (int j = 0; j < p; ++j) {
    const double slab_var =
        model.kind == ModelKind::SpikeNormal ? model.v0 : state.tau2_slab(j);
    double log_bf_sum = 0.0;
    for (int d = 0; d < dc; ++d) {
      const auto& xtx = problem.xtx[static_cast<std::size_t>(d)];
      const double u = problem.xty[static_cast<std::size_t>(d)](j) -
                       t[static_cast<std::size_t>(d)](j) +
                       xtx(j, j) * state.beta(d, j);
      cond[static_cast<std::size_t>(d)] =
          group_conditional(u, xtx(j, j), state.sigma2, slab_var);
      log_bf_sum += cond[static_cast<std::size_t>(d)].log_bf;
    }
    const double prior =
        model.kind == ModelKind::SpikeNormal ? model.p0 : state.pi(j);
    const double log_odds =
        std::log(prior) - std::log1p(-prior) + log_bf_sum;
    const double incl_prob = logistic(log_odds);
    const std::uint8_t gamma_new = rng.uniform() < incl_prob ? 1 : 0;
    state.gamma[static_cast<std::size_t>(j)] = gamma_new;

    if (model.kind == ModelKind::SpikeLaplace) {
      state.pi(j) = sample_beta(rng, model.a + gamma_new,
                                model.b + 1.0 - gamma_new);
    }

    for (int d = 0; d < dc; ++d) {
      const double old = state.beta(d, j);
      double fresh = 0.0;
      if (gamma_new != 0) {
        const auto& c = cond[static_cast<std::size_t>(d)];
        fresh = c.mean + sample_normal(rng) / std::sqrt(c.q);
      }
      if (fresh != old) {
        t[static_cast<std::size_t>(d)] +=
            problem.xtx[static_cast<std::size_t>(d)].col(j) * (fresh - old);
        state.beta(d, j) = fresh;
      }
    }
  }
}

void update_spike_slabs(LatentState& state, const GibbsProblem& problem,
                        const ModelSpec& model, Rng& rng) {
  if (model.kind != ModelKind::SpikeLaplace) return;
  const double d = static_cast<double>(problem.d_count);
  const bool scale_reading = model.gamma_convention == GammaConvention::Scale;
  const double a_gig =
      scale_reading ? d * model.lambda : 4.0 / (d * model.lambda);
  const double prior_shape = (d + 1.0) / 2.0;
  const double prior_rate =
      scale_reading ? d * model.lambda / 2.0 : 2.0 / (d * model.lambda);
  for (int j = 0; j < problem.p; ++j) {
    if (state.gamma[static_cast<std::size_t>(j)] != 0) {
      state.tau2_slab(j) =
          clamp_var(sample_gig_half(rng, a_gig, group_sq_norm(state, j)));
    } else {
      state.tau2_slab(j) =
          clamp_var(sample_gamma(rng, prior_shape, prior_rate));
    }
  }
}

void update_sigma(LatentState& state, const GibbsProblem& problem, Rng& rng) {
  double ssr = 0.0;
  for (int d = 0; d < problem.d_count; ++d) {
    const Eigen::VectorXd bd = state.beta.row(d).transpose();
    ssr += problem.yty[static_cast<std::size_t>(d)] -
           2.0 * bd.dot(problem.xty[static_cast<std::size_t>(d)]) +
           bd.dot(problem.xtx[static_cast<std::size_t>(d)] * bd);
  }
  const double shape =
      static_cast<double>(problem.n) * static_cast<double>(problem.d_count) / 2.0;
  const double rate = std::max(ssr / 2.0, kSigmaRateFloor);
  state.sigma2 = std::max(sample_inverse_gamma(rng, shape, rate), 1e-300);
}

void gibbs_sweep(LatentState& state, const GibbsProblem& problem,
                 const ModelSpec& model, Rng& rng) {
  switch (model.kind) {
    case ModelKind::MultiLaplace:
      update_beta(state, problem, model, rng);
      update_multilaplace_locals(state, problem, model, rng);
      update_sigma(state, problem, rng);
      break;
    case ModelKind::Horseshoe:
      update_beta(state, problem, model, rng);
      update_horseshoe_locals(state, problem, rng);
      update_sigma(state, problem, rng);
      break;
    case ModelKind::Ard:
      update_beta(state, problem, model, rng);
      update_ard_locals(state, problem, rng);
      update_sigma(state, problem, rng);
      break;
    case ModelKind::SpikeNormal:
    case ModelKind::SpikeLaplace:
      update_spike_indicators(state, problem, model, rng);
      update_beta(state, problem, model, rng);
      update_spike_slabs(state, problem, model, rng);
      update_sigma(state, problem, rng);
      break;
  }
}

namespace {

void check_finite(const LatentState& state, int chain, int sweep) {
  const auto bad = [&](const char* family) {
    throw std::runtime_error("gibbs: non-finite " + std::string(family) +
                             " draw in chain " + std::to_string(chain) +
                             " at sweep " + std::to_string(sweep));
  };
  if (!state.beta.allFinite()) bad("beta");
  if (!std::isfinite(state.sigma2) || state.sigma2 <= 0.0) bad("sigma2");
  if (!state.lambda2.allFinite()) bad("lambda2");
  if (!std::isfinite(state.rho)) bad("rho");
  if (!std::isfinite(state.tau2_global)) bad("tau2");
}

ChainDraws run_single_chain(const ModelSpec& model, const GibbsProblem& problem,
                            const ChainConfig& cfg,
                            const StandardizationState& standardization,
                            int chain_index) {
  Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(chain_index));
  LatentState state = initial_state(problem, model, rng);

  const int retained = cfg.retained_per_chain();
  ChainDraws draws;
  draws.beta.reserve(static_cast<std::size_t>(retained));
  draws.beta_orig.reserve(static_cast<std::size_t>(retained));
  draws.intercept.reserve(static_cast<std::size_t>(retained));
  draws.sigma2.reserve(static_cast<std::size_t>(retained));

  for (int sweep = 0; sweep < cfg.burn_in; ++sweep)
    gibbs_sweep(state, problem, model, rng);

  for (int sweep = 0; sweep < cfg.kept; ++sweep) {
    gibbs_sweep(state, problem, model, rng);
    if ((sweep + 1) % cfg.thin != 0) continue;
    check_finite(state, chain_index, cfg.burn_in + sweep);

    draws.beta.push_back(state.beta);
    const OriginalScaleCoefficients orig =
        destandardize_coefficients(state.beta, standardization);
    draws.beta_orig.push_back(orig.beta);
    draws.intercept.push_back(orig.intercept);
    draws.sigma2.push_back(state.sigma2);
    switch (model.kind) {
      case ModelKind::MultiLaplace:
        draws.lambda2.push_back(state.lambda2);
        draws.rho.push_back(state.rho);
        break;
      case ModelKind::Horseshoe:
        draws.lambda2.push_back(state.lambda2);
        draws.tau2_global.push_back(state.tau2_global);
        break;
      case ModelKind::Ard:
        draws.lambda2.push_back(state.lambda2);
        break;
      case ModelKind::SpikeNormal:
        draws.gamma.push_back(state.gamma);
        break;
      case ModelKind::SpikeLaplace:
        draws.gamma.push_back(state.gamma);
        draws.tau2_slab.push_back(state.tau2_slab);
        draws.pi.push_back(state.pi);
        break;
    }
  }
  return draws;
}

void attach_rhat(PosteriorDraws& out) {
  const int retained = out.retained_per_chain();
  const std::size_t n_chains = out.chains.size();
  out.rhat_beta.resize(out.d_count, out.p);
  double max_rhat = 1.0;

  std::vector<std::vector<double>> series(
      n_chains, std::vector<double>(static_cast<std::size_t>(retained)));
  for (int d = 0; d < out.d_count; ++d) {
    for (int j = 0; j < out.p; ++j) {
      for (std::size_t c = 0; c < n_chains; ++c)
        for (int i = 0; i < retained; ++i)
          series[c][static_cast<std::size_t>(i)] =
              out.chains[c].beta[static_cast<std::size_t>(i)](d, j);
      const RhatResult r = split_rhat(series);
      out.rhat_beta(d, j) = r.value;
      max_rhat = std::max(max_rhat, r.value);
    }
  }
  for (std::size_t c = 0; c < n_chains; ++c)
    for (int i = 0; i < retained; ++i)
      series[c][static_cast<std::size_t>(i)] =
          out.chains[c].sigma2[static_cast<std::size_t>(i)];
  const RhatResult rs = split_rhat(series);
  out.rhat_sigma2 = rs.value;
  max_rhat = std::max(max_rhat, rs.value);

  out.max_rhat = max_rhat;
  out.converged = max_rhat <= out.config.rhat_threshold;
}

}  // namespace

PosteriorDraws run_chains(const ModelSpec& model,
                          const ImputedStack& standardized,
                          const ChainConfig& cfg, int n_threads) {
  model.validate();
  cfg.validate();
  const GibbsProblem problem = GibbsProblem::from_stack(standardized);

  // Identity standardization: run_chains reports the standardized scale as
  // the original one. fit() supplies the real mapping.
  StandardizationState identity;
  identity.x_mean.assign(static_cast<std::size_t>(problem.d_count),
                         Eigen::VectorXd::Zero(problem.p));
  identity.x_sd.assign(static_cast<std::size_t>(problem.d_count),
                       Eigen::VectorXd::Ones(problem.p));
  identity.y_mean.assign(static_cast<std::size_t>(problem.d_count), 0.0);

  return run_chains_with_state(model, standardized, cfg, identity, n_threads);
}

PosteriorDraws run_chains_with_state(const ModelSpec& model,
                                     const ImputedStack& standardized,
                                     const ChainConfig& cfg,
                                     const StandardizationState& state,
                                     int n_threads) {
  model.validate();
  cfg.validate();
  const GibbsProblem problem = GibbsProblem::from_stack(standardized);

  PosteriorDraws out;
  out.kind = model.kind;
  out.d_count = problem.d_count;
  out.p = problem.p;
  out.config = cfg;
  out.column_names = standardized.column_names();
  out.standardization = state;
  out.chains.resize(static_cast<std::size_t>(cfg.n_chains));

  const int workers =
      std::max(1, std::min(n_threads, cfg.n_chains));
  if (workers == 1) {
    for (int c = 0; c < cfg.n_chains; ++c)
      out.chains[static_cast<std::size_t>(c)] =
          run_single_chain(model, problem, cfg, state, c);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (;;) {
            const int c = next.fetch_add(1);
            if (c >= cfg.n_chains) break;
            out.chains[static_cast<std::size_t>(c)] =
                run_single_chain(model, problem, cfg, state, c);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  if (cfg.compute_rhat) attach_rhat(out);
  return out;
}

PosteriorDraws fit(const ModelSpec& model, const ImputedStack& stack,
                   const ChainConfig& cfg, int n_threads) {
  auto [standardized, state] = standardize(stack);
  return run_chains_with_state(model, standardized, cfg, state, n_threads);
}

}  // namespace bmilasso

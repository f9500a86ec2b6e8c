#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bmilasso/chains.hpp"
#include "bmilasso/dataset.hpp"
#include "bmilasso/rng.hpp"

namespace bmilasso {

enum class ModelKind { MultiLaplace, Horseshoe, Ard, SpikeNormal, SpikeLaplace };

bool is_spike_model(ModelKind kind);
std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// How the second argument of the Gamma priors on the Multi-Laplace local
// scales (and the Spike-Laplace slab scales) is read. Scale is the default:
// lambda_j^2 ~ Gamma((D+1)/2, scale 2/(D rho)), i.e. prior rate D rho / 2.
// Under Rate the same expression is a rate, and the rho full conditional
// leaves the Gamma family (general-index GIG).
enum class GammaConvention { Scale, Rate };

struct ModelSpec {
  ModelKind kind = ModelKind::MultiLaplace;

  double r = 2.0;   // MultiLaplace: rho ~ Gamma(r, rate s)
  double s = 15.0;
  double p0 = 0.5;  // SpikeNormal prior inclusion probability
  double v0 = 4.0;  // SpikeNormal slab variance
  double a = 1.0;   // SpikeLaplace: pi_j ~ Beta(a, b)
  double b = 1.0;
  double lambda = 6.0 / 11.0;  // SpikeLaplace penalty (fixed, never sampled)

  GammaConvention gamma_convention = GammaConvention::Scale;

  static ModelSpec defaults(ModelKind kind);
  void validate() const;
};

// All latent quantities of one Gibbs chain. Fields not used by the active
// model stay at their initial values and are ignored.
struct LatentState {
  Eigen::MatrixXd beta;        // D x p
  double sigma2 = 1.0;
  Eigen::VectorXd lambda2;     // local scales (MultiLaplace/Horseshoe) or
                               // inverse variances (ARD)
  double rho = 1.0;            // MultiLaplace global
  Eigen::VectorXd nu;          // Horseshoe auxiliaries
  double tau2_global = 1.0;    // Horseshoe global scale
  double xi = 1.0;             // Horseshoe auxiliary for tau2
  std::vector<std::uint8_t> gamma;  // spike inclusion indicators
  Eigen::VectorXd pi;          // SpikeLaplace mixture weights
  Eigen::VectorXd tau2_slab;   // SpikeLaplace slab scales
};

// Sufficient statistics of a standardized stack; X and y never change
// during sampling, so X'X, X'y and y'y are computed once per fit.
struct GibbsProblem {
  int n = 0;
  int p = 0;
  int d_count = 0;
  std::vector<Eigen::MatrixXd> xtx;
  std::vector<Eigen::VectorXd> xty;
  std::vector<double> yty;

  static GibbsProblem from_stack(const ImputedStack& standardized);
};

LatentState initial_state(const GibbsProblem& problem, const ModelSpec& model,
                          Rng& rng);

// Full-conditional updates. Each mutates the state in place; together they
// form one sweep in the fixed order documented at gibbs_sweep.
void update_beta(LatentState& state, const GibbsProblem& problem,
                 const ModelSpec& model, Rng& rng);
void update_multilaplace_locals(LatentState& state, const GibbsProblem& problem,
                                const ModelSpec& model, Rng& rng);
void update_horseshoe_locals(LatentState& state, const GibbsProblem& problem,
                             Rng& rng);
void update_ard_locals(LatentState& state, const GibbsProblem& problem,
                       Rng& rng);
void update_spike_indicators(LatentState& state, const GibbsProblem& problem,
                             const ModelSpec& model, Rng& rng);
void update_spike_slabs(LatentState& state, const GibbsProblem& problem,
                        const ModelSpec& model, Rng& rng);
void update_sigma(LatentState& state, const GibbsProblem& problem, Rng& rng);

// One sweep. Shrinkage models: beta -> local scales -> sigma.
// Spike models: indicators (collapsed, with per-group beta redraw) -> beta
// (joint refresh over the active set) -> slab scales -> sigma.
void gibbs_sweep(LatentState& state, const GibbsProblem& problem,
                 const ModelSpec& model, Rng& rng);

// Retained draws of one chain, in sweep order.
struct ChainDraws {
  std::vector<Eigen::MatrixXd> beta;       // standardized scale, D x p
  std::vector<Eigen::MatrixXd> beta_orig;  // original scale, D x p
  std::vector<Eigen::VectorXd> intercept;  // original scale, D
  std::vector<double> sigma2;
  std::vector<Eigen::VectorXd> lambda2;
  std::vector<double> rho;
  std::vector<double> tau2_global;
  std::vector<Eigen::VectorXd> tau2_slab;
  std::vector<Eigen::VectorXd> pi;
  std::vector<std::vector<std::uint8_t>> gamma;
};

struct PosteriorDraws {
  ModelKind kind = ModelKind::MultiLaplace;
  int d_count = 0;
  int p = 0;
  ChainConfig config;
  std::vector<std::string> column_names;
  StandardizationState standardization;
  std::vector<ChainDraws> chains;

  Eigen::MatrixXd rhat_beta;  // D x p (empty when R-hat not requested)
  double rhat_sigma2 = 1.0;
  double max_rhat = 1.0;
  bool converged = true;

  int retained_per_chain() const {
    return chains.empty() ? 0 : static_cast<int>(chains.front().sigma2.size());
  }
};

// Runs cfg.n_chains independent chains on an already standardized stack.
// Chain c draws from the substream seed XOR c; results are merged in chain
// order, so the thread count never changes the output. Throws on non-finite
// draws, naming the chain, sweep, and parameter family.
PosteriorDraws run_chains(const ModelSpec& model,
                          const ImputedStack& standardized,
                          const ChainConfig& cfg, int n_threads = 1);

// As run_chains, but with an explicit standardization state used to map the
// draws back to the original scale.
PosteriorDraws run_chains_with_state(const ModelSpec& model,
                                     const ImputedStack& standardized,
                                     const ChainConfig& cfg,
                                     const StandardizationState& state,
                                     int n_threads = 1);

// Standardizes the stack (a no-op on already standardized data), runs the
// chains, and attaches original-scale coefficient draws alongside the
// standardized ones.
PosteriorDraws fit(const ModelSpec& model, const ImputedStack& stack,
                   const ChainConfig& cfg, int n_threads = 1);

}  // namespace bmilasso

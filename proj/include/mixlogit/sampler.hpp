#ifndef MIXLOGIT_SAMPLER_HPP
#define MIXLOGIT_SAMPLER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlogit/choice_data.hpp"
#include "mixlogit/random.hpp"
#include "mixlogit/stats.hpp"
#include "mixlogit/utility.hpp"

namespace mixlogit {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class MixingKind { MVN, FMON, DPMON };

MixingKind mixing_kind_from_string(const std::string& name);
std::string to_string(MixingKind kind);

// Which heterogeneity distribution governs the semi-parametric block.
struct MixingSpec {
  MixingKind kind = MixingKind::MVN;
  int k = 1;                   // mixture components (truncation level for DPMON)
  double dirichlet_alpha = 1.0;  // FMON: symmetric Dirichlet prior parameter
  // DPMON: Gamma prior on the concentration, in the rate convention used by
  // the conjugate stick update.
  double dp_alpha_prior_shape = 2.0;
  double dp_alpha_prior_rate = 2.0;

  static MixingSpec mvn();
  static MixingSpec fmon(int k = 2);
  static MixingSpec dpmon(int k = 100);

  void check() const;
};

// Hyper-parameters of the normal/half-t population prior for one block:
// zeta ~ N(mu0, Sigma0), a_r ~ Gamma(1/2, rate 1/A_r^2),
// Omega | a ~ IW(nu + R - 1, 2 nu diag(a)), which gives sqrt(Omega_rr) a
// half-t(nu, A_r) marginal.
struct HyperPriors {
  Eigen::VectorXd mu0;
  Eigen::MatrixXd sigma0;
  double nu = 2.0;
  Eigen::VectorXd a_scale;  // A_r

  static HyperPriors isotropic(int dim, double mu0_value, double sigma0_scale,
                               double nu, double a_scale_value);
  void check() const;
};

struct MCMCConfig {
  int n_chains = 2;
  long n_iterations = 100000;
  long n_burnin = 50000;
  int thinning = 10;
  double rho0 = 0.1;
  double rho_increment = 0.001;
  double target_acceptance = 0.3;
  double rho_min = 1e-4;
  bool freeze_after_burnin = false;
  std::uint64_t seed = 1;

  long n_retained() const { return (n_iterations - n_burnin) / thinning; }
  void check() const;
};

struct MixtureComponent {
  Eigen::VectorXd zeta;
  CovMatrix omega;
  Eigen::VectorXd a;
};

// Population state of one heterogeneity block. Non-semi-parametric blocks are
// plain MVN (K = 1, every assignment 0).
struct BlockState {
  ParamBlock block;
  MixingSpec mixing;
  HyperPriors hyper;
  std::vector<MixtureComponent> comps;
  Eigen::VectorXd pi;       // K weights; exact simplex
  Eigen::VectorXd eta;      // K sticks (DPMON; eta[K-1] == 1)
  double alpha_dp = 1.0;    // DPMON concentration
  std::vector<int> assign;  // one component index per person

  int n_components() const { return static_cast<int>(comps.size()); }
};

// All latent quantities of one Markov chain.
struct SamplerState {
  std::vector<BlockState> blocks;
  Eigen::MatrixXd beta;     // N x total_dim person-level parameters
  Eigen::VectorXd loglik;   // cached per-person data log-likelihood
  double rho = 0.1;
  long iteration = 0;
  long n_nonfinite_rejects = 0;

  int n_persons() const { return static_cast<int>(beta.rows()); }
  int total_dim() const { return static_cast<int>(beta.cols()); }
};

// ---------------------------------------------------------------------------
// Gibbs updates. Each operates on one block given the current person-level
// parameters; the sweep order inside run_chain is: zeta, a, Omega for every
// component, then the weight model (Dirichlet or concentration + sticks),
// then assignments, then the person-level Metropolis step, then step-size
// adaptation.
// ---------------------------------------------------------------------------

std::vector<int> component_counts(const BlockState& block);

// zeta_k | rest ~ N(m, V), V = (Sigma0^-1 + c_k Omega_k^-1)^-1,
// m = V (Sigma0^-1 mu0 + Omega_k^-1 sum_{n: q_n=k} beta_n).
// Empty components (c_k = 0) reduce exactly to the prior N(mu0, Sigma0).
void update_zeta(BlockState& block, const Eigen::MatrixXd& beta,
                 RandomStream& rng);

// a_kr | rest ~ Gamma((nu + R)/2, rate 1/A_r^2 + nu (Omega_k^-1)_rr).
void update_a(BlockState& block, RandomStream& rng);

// Omega_k | rest ~ IW(nu + c_k + R - 1,
//                     2 nu diag(a_k) + sum_{n: q_n=k} (b_n - zeta_k)(..)^T).
void update_omega(BlockState& block, const Eigen::MatrixXd& beta,
                  RandomStream& rng);

// pi ~ Dirichlet(alpha + c) (FMON only). The last weight is closed so the
// simplex sums to 1 exactly.
void update_pi_finite(BlockState& block, RandomStream& rng);

// q_n ~ Categorical with p_k proportional to pi_k phi(beta_n | zeta_k,
// Omega_k), computed in log space with max subtraction. If every
// responsibility underflows, the max-log-responsibility component is assigned
// deterministically and the event is counted.
// Returns the number of underflow fallbacks.
long update_assignments(BlockState& block, const Eigen::MatrixXd& beta,
                        RandomStream& rng);

// alpha ~ Gamma(prior_shape + K - 1, prior_rate - sum_{k<K} ln(1 - eta_k)),
// sticks clamped to 1 - 1e-12 before the log (DPMON only).
void update_alpha_dp(BlockState& block, RandomStream& rng);

// eta_k ~ Beta(1 + c_k, alpha + sum_{j>k} c_j) for k < K, eta_K = 1;
// pi_k = eta_k prod_{l<k} (1 - eta_l) with the final weight closed so the
// simplex sums to 1 exactly (DPMON only).
void update_sticks(BlockState& block, RandomStream& rng);

// Joint random-walk Metropolis over the full person parameter vector:
// blockwise proposal beta~ = beta + sqrt(rho) chol(Omega_{q_n}) z, acceptance
// u <= min(1, r) with r the likelihood-times-prior ratio across all blocks.
// Non-finite proposals are auto-rejected and counted. Returns the number of
// accepted persons.
int update_beta_mh(SamplerState& state, const ChoiceDataset& data,
                   const UtilitySpec& spec, RandomStream& rng);

// rho +/- increment depending on the mean acceptance rate against the target;
// unchanged when exactly on target; floored at rho_min.
double adapt_step_size(double rho, double mean_acceptance,
                       const MCMCConfig& config);

// ---------------------------------------------------------------------------
// Chain orchestration.
// ---------------------------------------------------------------------------

struct ModelSpec {
  UtilitySpec utility;
  MixingSpec mixing;
  HyperPriors hyper;  // template for all blocks (per-block slicing applied)

  // Blocks with their effective mixing and hyper-priors; the DPMON base
  // measure constraint (component means ~ N(0, I)) is applied here.
  std::vector<BlockState> make_blocks(int n_persons) const;
};

SamplerState init_state(const ModelSpec& model, const ChoiceDataset& data,
                        const MCMCConfig& config, RandomStream& rng);

struct ChainDraws {
  RowMatrixXd retained;              // n_retained x n_columns (see draws.hpp)
  std::vector<double> loglik_trace;  // one entry per iteration
  double acceptance_rate = 0.0;      // mean over iterations
  long n_nonfinite_rejects = 0;
  long n_underflow_fallbacks = 0;
};

// One chain: full Metropolis-within-Gibbs run with burn-in, thinning and
// per-iteration step-size adaptation. Any update error aborts via
// ChainAbortError carrying the iteration index and a state snapshot path.
ChainDraws run_chain(const ModelSpec& model, const ChoiceDataset& data,
                     const MCMCConfig& config, RandomStream chain_rng);

}  // namespace mixlogit

#endif  // MIXLOGIT_SAMPLER_HPP

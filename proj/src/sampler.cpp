#include "mixlogit/sampler.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "mixlogit/draws.hpp"

namespace mixlogit {

MixingKind mixing_kind_from_string(const std::string& name) {
  if (name == "mvn") return MixingKind::MVN;
  if (name == "fmon") return MixingKind::FMON;
  if (name == "dpmon") return MixingKind::DPMON;
  throw ConfigError("unknown mixing kind '" + name +
                    "' (expected mvn, fmon or dpmon)");
}

std::string to_string(MixingKind kind) {
  switch (kind) {
    case MixingKind::MVN: return "mvn";
    case MixingKind::FMON: return "fmon";
    case MixingKind::DPMON: return "dpmon";
  }
  return "?";
}

MixingSpec MixingSpec::mvn() { return MixingSpec{MixingKind::MVN, 1}; }

MixingSpec MixingSpec::fmon(int k) {
  MixingSpec spec;
  spec.kind = MixingKind::FMON;
  spec.k = k;
  return spec;
}

MixingSpec MixingSpec::dpmon(int k) {
  MixingSpec spec;
  spec.kind = MixingKind::DPMON;
  spec.k = k;
  return spec;
}

void MixingSpec::check() const {
  if (k < 1) throw ConfigError("mixing spec requires k >= 1");
  if (kind != MixingKind::MVN && k < 2) {
    throw ConfigError("mixture mixing distributions require k >= 2");
  }
  if (kind == MixingKind::MVN && k != 1) {
    throw ConfigError("mvn mixing uses exactly one component");
  }
  if (kind == MixingKind::FMON && !(dirichlet_alpha > 0.0)) {
    throw ConfigError("fmon dirichlet_alpha must be positive");
  }
  if (kind == MixingKind::DPMON &&
      (!(dp_alpha_prior_shape > 0.0) || !(dp_alpha_prior_rate > 0.0))) {
    throw ConfigError("dpmon concentration prior parameters must be positive");
  }
}

HyperPriors HyperPriors::isotropic(int dim, double mu0_value,
                                   double sigma0_scale, double nu,
                                   double a_scale_value) {
  HyperPriors h;
  h.mu0 = Eigen::VectorXd::Constant(dim, mu0_value);
  h.sigma0 = sigma0_scale * Eigen::MatrixXd::Identity(dim, dim);
  h.nu = nu;
  h.a_scale = Eigen::VectorXd::Constant(dim, a_scale_value);
  return h;
}

void HyperPriors::check() const {
  if (mu0.size() == 0 || sigma0.rows() != mu0.size() ||
      sigma0.cols() != mu0.size() || a_scale.size() != mu0.size()) {
    throw ConfigError("hyper-prior dimensions are inconsistent");
  }
  if (!(nu > 0.0)) throw ConfigError("hyper-prior nu must be positive");
  if ((a_scale.array() <= 0.0).any()) {
    throw ConfigError("hyper-prior A_r must be positive");
  }
  CovMatrix check_pd(sigma0, "Sigma0");  // throws if not PD
}

void MCMCConfig::check() const {
  if (n_chains < 1) throw ConfigError("mcmc requires n_chains >= 1");
  if (n_iterations < 1) throw ConfigError("mcmc requires n_iterations >= 1");
  if (n_burnin < 0 || n_burnin >= n_iterations) {
    throw ConfigError("mcmc requires 0 <= n_burnin < n_iterations");
  }
  if (thinning < 1) throw ConfigError("mcmc requires thinning >= 1");
  if (!(rho0 > 0.0)) throw ConfigError("mcmc requires rho0 > 0");
  if (rho_increment < 0.0) throw ConfigError("mcmc requires rho_increment >= 0");
  if (!(target_acceptance >= 0.0 && target_acceptance <= 1.0)) {
    throw ConfigError("mcmc target_acceptance must lie in [0,1]");
  }
}

std::vector<int> component_counts(const BlockState& block) {
  std::vector<int> counts(block.n_components(), 0);
  for (const int q : block.assign) ++counts[q];
  return counts;
}

namespace {

std::vector<std::vector<int>> component_members(const BlockState& block) {
  std::vector<std::vector<int>> members(block.n_components());
  for (std::size_t n = 0; n < block.assign.size(); ++n) {
    members[block.assign[n]].push_back(static_cast<int>(n));
  }
  return members;
}

// Last simplex entry closed as one minus the left-to-right sum of the others,
// so std::accumulate over the weights gives exactly 1.
void close_simplex(Eigen::VectorXd& pi) {
  const Eigen::Index k = pi.size();
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < k; ++i) s += pi(i);
  if (s > 1.0) s = 1.0;
  pi(k - 1) = 1.0 - s;
}

}  // namespace

void update_zeta(BlockState& block, const Eigen::MatrixXd& beta,
                 RandomStream& rng) {
  const int dim = block.block.dim;
  const auto members = component_members(block);
  const auto beta_block = beta.middleCols(block.block.offset, dim);
  const CovMatrix sigma0(block.hyper.sigma0, "Sigma0");
  const Eigen::MatrixXd sigma0_inv = sigma0.inverse();
  const Eigen::VectorXd sigma0_inv_mu0 = sigma0_inv * block.hyper.mu0;

  for (int k = 0; k < block.n_components(); ++k) {
    auto& comp = block.comps[k];
    const auto& idx = members[k];
    const double c = static_cast<double>(idx.size());
    if (idx.empty()) {
      comp.zeta = sample_mvn(block.hyper.mu0, sigma0, rng);
      continue;
    }
    const Eigen::MatrixXd omega_inv = comp.omega.inverse();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    for (const int n : idx) sum += beta_block.row(n).transpose();
    const Eigen::MatrixXd precision = sigma0_inv + c * omega_inv;
    const CovMatrix v(CovMatrix(precision, "zeta precision").inverse(),
                      "zeta conditional covariance");
    const Eigen::VectorXd mean = v.matrix() * (sigma0_inv_mu0 + omega_inv * sum);
    comp.zeta = sample_mvn(mean, v, rng);
  }
}

void update_a(BlockState& block, RandomStream& rng) {
  const int dim = block.block.dim;
  const double nu = block.hyper.nu;
  const double shape = 0.5 * (nu + dim);
  for (auto& comp : block.comps) {
    const Eigen::MatrixXd omega_inv = comp.omega.inverse();
    for (int r = 0; r < dim; ++r) {
      const double rate =
          1.0 / (block.hyper.a_scale(r) * block.hyper.a_scale(r)) +
          nu * omega_inv(r, r);
      comp.a(r) = sample_gamma_rate(shape, rate, rng);
    }
  }
}

void update_omega(BlockState& block, const Eigen::MatrixXd& beta,
                  RandomStream& rng) {
  const int dim = block.block.dim;
  const double nu = block.hyper.nu;
  const auto members = component_members(block);
  const auto beta_block = beta.middleCols(block.block.offset, dim);

  for (int k = 0; k < block.n_components(); ++k) {
    auto& comp = block.comps[k];
    Eigen::MatrixXd scale =
        (2.0 * nu * comp.a.array()).matrix().asDiagonal();
    for (const int n : members[k]) {
      const Eigen::VectorXd d = beta_block.row(n).transpose() - comp.zeta;
      scale += d * d.transpose();
    }
    const double df = nu + static_cast<double>(members[k].size()) + dim - 1;
    comp.omega =
        sample_inverse_wishart(df, CovMatrix(scale, "Omega scale"), rng);
  }
}

void update_pi_finite(BlockState& block, RandomStream& rng) {
  const auto counts = component_counts(block);
  Eigen::VectorXd conc(block.n_components());
  for (int k = 0; k < block.n_components(); ++k) {
    conc(k) = block.mixing.dirichlet_alpha + counts[k];
  }
  block.pi = sample_dirichlet(conc, rng);
  close_simplex(block.pi);
}

long update_assignments(BlockState& block, const Eigen::MatrixXd& beta,
                        RandomStream& rng) {
  const int k_total = block.n_components();
  if (k_total == 1) {
    return 0;
  }
  const int dim = block.block.dim;
  const auto beta_block = beta.middleCols(block.block.offset, dim);

  Eigen::VectorXd log_pi(k_total);
  for (int k = 0; k < k_total; ++k) {
    log_pi(k) = block.pi(k) > 0.0 ? std::log(block.pi(k))
                                  : -std::numeric_limits<double>::infinity();
  }

  long fallbacks = 0;
  Eigen::VectorXd logresp(k_total);
  Eigen::VectorXd probs(k_total);
  for (std::size_t n = 0; n < block.assign.size(); ++n) {
    const Eigen::VectorXd b = beta_block.row(n).transpose();
    for (int k = 0; k < k_total; ++k) {
      logresp(k) =
          log_pi(k) + log_density_mvn(b, block.comps[k].zeta, block.comps[k].omega);
    }
    const double maxv = logresp.maxCoeff();
    if (!std::isfinite(maxv)) {
      // all responsibilities underflowed: deterministic argmax fallback
      Eigen::Index arg = 0;
      logresp.maxCoeff(&arg);
      block.assign[n] = static_cast<int>(arg);
      ++fallbacks;
      continue;
    }
    probs = (logresp.array() - maxv).exp();
    probs /= probs.sum();
    const double u = rng.uniform();
    double cum = 0.0;
    int pick = k_total - 1;
    for (int k = 0; k < k_total; ++k) {
      cum += probs(k);
      if (u <= cum) {
        pick = k;
        break;
      }
    }
    block.assign[n] = pick;
  }
  return fallbacks;
}

void update_alpha_dp(BlockState& block, RandomStream& rng) {
  const int k_total = block.n_components();
  const double shape = block.mixing.dp_alpha_prior_shape + k_total - 1;
  double rate = block.mixing.dp_alpha_prior_rate;
  for (int k = 0; k + 1 < k_total; ++k) {
    rate -= std::log1p(-std::min(block.eta(k), 1.0 - 1e-12));
  }
  block.alpha_dp = sample_gamma_rate(shape, rate, rng);
}

void update_sticks(BlockState& block, RandomStream& rng) {
  const int k_total = block.n_components();
  const auto counts = component_counts(block);
  std::vector<double> tail(k_total + 1, 0.0);
  for (int k = k_total - 1; k >= 0; --k) tail[k] = tail[k + 1] + counts[k];

  double rem = 1.0;
  for (int k = 0; k + 1 < k_total; ++k) {
    block.eta(k) = sample_beta(1.0 + counts[k], block.alpha_dp + tail[k + 1], rng);
    block.pi(k) = block.eta(k) * rem;
    rem *= 1.0 - block.eta(k);
  }
  block.eta(k_total - 1) = 1.0;
  close_simplex(block.pi);
}

int update_beta_mh(SamplerState& state, const ChoiceDataset& data,
                   const UtilitySpec& spec, RandomStream& rng) {
  const int n_persons = state.n_persons();
  const double sqrt_rho = std::sqrt(state.rho);
  int accepts = 0;
  Eigen::VectorXd proposal(state.total_dim());

  for (int n = 0; n < n_persons; ++n) {
    proposal = state.beta.row(n).transpose();
    for (const auto& block : state.blocks) {
      const int dim = block.block.dim;
      const auto& comp = block.comps[block.assign[n]];
      Eigen::VectorXd z(dim);
      for (int i = 0; i < dim; ++i) z(i) = sample_std_normal(rng);
      proposal.segment(block.block.offset, dim) +=
          sqrt_rho * (comp.omega.chol_lower() * z);
    }

    double log_prior_new = 0.0;
    double log_prior_old = 0.0;
    for (const auto& block : state.blocks) {
      const int dim = block.block.dim;
      const auto& comp = block.comps[block.assign[n]];
      log_prior_new += log_density_mvn(
          proposal.segment(block.block.offset, dim), comp.zeta, comp.omega);
      log_prior_old += log_density_mvn(
          state.beta.row(n).segment(block.block.offset, dim).transpose(),
          comp.zeta, comp.omega);
    }

    const double ll_new = person_log_likelihood(spec, proposal, data.persons[n]);
    if (!std::isfinite(ll_new) || !std::isfinite(log_prior_new)) {
      ++state.n_nonfinite_rejects;
      continue;
    }
    const double log_ratio =
        (ll_new + log_prior_new) - (state.loglik(n) + log_prior_old);
    if (std::log(rng.uniform()) <= std::min(0.0, log_ratio)) {
      state.beta.row(n) = proposal.transpose();
      state.loglik(n) = ll_new;
      ++accepts;
    }
  }
  return accepts;
}

double adapt_step_size(double rho, double mean_acceptance,
                       const MCMCConfig& config) {
  if (mean_acceptance < config.target_acceptance) {
    rho -= config.rho_increment;
  } else if (mean_acceptance > config.target_acceptance) {
    rho += config.rho_increment;
  } else {
    return rho;
  }
  return std::max(rho, config.rho_min);
}

std::vector<BlockState> ModelSpec::make_blocks(int n_persons) const {
  mixing.check();
  hyper.check();
  const ParamPartition partition = make_partition(utility);
  if (hyper.mu0.size() != partition.total_dim) {
    throw ConfigError("hyper-priors are " + std::to_string(hyper.mu0.size()) +
                      "-dimensional but the utility spec has " +
                      std::to_string(partition.total_dim) + " parameters");
  }

  std::vector<BlockState> blocks;
  for (const auto& pb : partition.blocks) {
    BlockState bs;
    bs.block = pb;
    bs.mixing = pb.semiparametric ? mixing : MixingSpec::mvn();

    HyperPriors h;
    h.mu0 = hyper.mu0.segment(pb.offset, pb.dim);
    h.sigma0 = hyper.sigma0.block(pb.offset, pb.offset, pb.dim, pb.dim);
    h.nu = hyper.nu;
    h.a_scale = hyper.a_scale.segment(pb.offset, pb.dim);
    if (pb.semiparametric && mixing.kind == MixingKind::DPMON) {
      // base measure fixed at N(0, I) for the component means
      h.mu0 = Eigen::VectorXd::Zero(pb.dim);
      h.sigma0 = Eigen::MatrixXd::Identity(pb.dim, pb.dim);
    }
    h.check();
    bs.hyper = std::move(h);

    const int k = bs.mixing.k;
    bs.pi = Eigen::VectorXd::Constant(k, 1.0 / k);
    close_simplex(bs.pi);
    bs.eta = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) bs.eta(i) = 1.0 / (k - i);
    bs.alpha_dp = 1.0;
    bs.assign.assign(n_persons, 0);
    blocks.push_back(std::move(bs));
  }
  return blocks;
}

SamplerState init_state(const ModelSpec& model, const ChoiceDataset& data,
                        const MCMCConfig& config, RandomStream& rng) {
  config.check();
  model.utility.check_against(data);
  const int n_persons = data.n_persons();
  if (n_persons < 1) throw ConfigError("dataset has no persons");

  SamplerState state;
  state.blocks = model.make_blocks(n_persons);
  state.rho = config.rho0;

  // zeta_k ~ N(0, 0.1 I), Omega_k = I, a = 1, q_n uniform, beta_n = zeta_{q_n}
  for (auto& block : state.blocks) {
    const int dim = block.block.dim;
    const CovMatrix init_cov(0.1 * Eigen::MatrixXd::Identity(dim, dim));
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < block.n_components(); ++k) {
      block.comps.push_back(MixtureComponent{
          sample_mvn(zero, init_cov, rng), CovMatrix::identity(dim),
          Eigen::VectorXd::Ones(dim)});
    }
    for (int n = 0; n < n_persons; ++n) {
      block.assign[n] = static_cast<int>(
          rng.next_u64() % static_cast<std::uint64_t>(block.n_components()));
    }
  }

  int total_dim = 0;
  for (const auto& block : state.blocks) total_dim += block.block.dim;
  state.beta.resize(n_persons, total_dim);
  for (int n = 0; n < n_persons; ++n) {
    for (const auto& block : state.blocks) {
      state.beta.row(n).segment(block.block.offset, block.block.dim) =
          block.comps[block.assign[n]].zeta.transpose();
    }
  }

  state.loglik.resize(n_persons);
  for (int n = 0; n < n_persons; ++n) {
    state.loglik(n) = person_log_likelihood(
        model.utility, state.beta.row(n).transpose(), data.persons[n]);
  }
  return state;
}

namespace {

std::string write_abort_snapshot(const SamplerState& state,
                                 std::uint64_t chain_seed) {
  nlohmann::json j;
  j["iteration"] = state.iteration;
  j["rho"] = state.rho;
  j["chain_seed"] = chain_seed;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& block : state.blocks) {
    nlohmann::json jb;
    jb["name"] = block.block.name;
    jb["alpha_dp"] = block.alpha_dp;
    jb["pi"] = std::vector<double>(block.pi.data(), block.pi.data() + block.pi.size());
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& comp : block.comps) {
      nlohmann::json jc;
      jc["zeta"] = std::vector<double>(comp.zeta.data(),
                                       comp.zeta.data() + comp.zeta.size());
      std::vector<double> om(comp.omega.matrix().size());
      Eigen::Map<Eigen::MatrixXd>(om.data(), comp.omega.dim(), comp.omega.dim()) =
          comp.omega.matrix();
      jc["omega_col_major"] = om;
      comps.push_back(std::move(jc));
    }
    jb["components"] = std::move(comps);
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);

  const auto path = std::filesystem::temp_directory_path() /
                    ("mixlogit_abort_" + std::to_string(chain_seed) + ".json");
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  return path.string();
}

}  // namespace

ChainDraws run_chain(const ModelSpec& model, const ChoiceDataset& data,
                     const MCMCConfig& config, RandomStream chain_rng) {
  SamplerState state = init_state(model, data, config, chain_rng);
  const DrawsLayout layout(block_infos(state.blocks), state.n_persons(),
                           state.total_dim());

  ChainDraws out;
  out.retained.resize(config.n_retained(), layout.n_columns());
  out.loglik_trace.resize(config.n_iterations);

  const double inv_n = 1.0 / state.n_persons();
  double acceptance_sum = 0.0;
  long retained = 0;
  long underflow_fallbacks = 0;

  for (long it = 1; it <= config.n_iterations; ++it) {
    state.iteration = it;
    try {
      for (auto& block : state.blocks) {
        update_zeta(block, state.beta, chain_rng);
        update_a(block, chain_rng);
        update_omega(block, state.beta, chain_rng);
        if (block.mixing.kind == MixingKind::FMON) {
          update_pi_finite(block, chain_rng);
        } else if (block.mixing.kind == MixingKind::DPMON) {
          update_alpha_dp(block, chain_rng);
          update_sticks(block, chain_rng);
        }
      }
      for (auto& block : state.blocks) {
        underflow_fallbacks += update_assignments(block, state.beta, chain_rng);
      }
      const int accepts = update_beta_mh(state, data, model.utility, chain_rng);
      const double acceptance = accepts * inv_n;
      acceptance_sum += acceptance;
      if (!(config.freeze_after_burnin && it > config.n_burnin)) {
        state.rho = adapt_step_size(state.rho, acceptance, config);
      }
    } catch (const std::exception& e) {
      const std::string snapshot = write_abort_snapshot(state, chain_rng.seed());
      throw ChainAbortError(
          it, "chain aborted at iteration " + std::to_string(it) + ": " +
              e.what() + " (state snapshot: " + snapshot + ")");
    }

    out.loglik_trace[it - 1] = state.loglik.sum();
    if (it > config.n_burnin && (it - config.n_burnin) % config.thinning == 0 &&
        retained < out.retained.rows()) {
      out.retained.row(retained++) = layout.project(state).transpose();
    }
  }

  out.acceptance_rate = acceptance_sum / config.n_iterations;
  out.n_nonfinite_rejects = state.n_nonfinite_rejects;
  out.n_underflow_fallbacks = underflow_fallbacks;
  return out;
}

}  // namespace mixlogit

#ifndef MIXLOGIT_DRAWS_HPP
#define MIXLOGIT_DRAWS_HPP

#include <string>
#include <vector>

#include "mixlogit/sampler.hpp"

namespace mixlogit {

// Structural description of one heterogeneity block, enough to interpret the
// retained-draw columns without the sampler state.
struct BlockInfo {
  std::string name;
  int offset = 0;
  int dim = 0;
  MixingKind kind = MixingKind::MVN;
  int k = 1;
};

std::vector<BlockInfo> block_infos(const std::vector<BlockState>& blocks);

// Fixed column layout of a retained draw row:
//   per block: per component (zeta, row-major omega, a), then pi, then the
//   DP concentration when applicable; then person parameters (person-major);
//   then the total log-likelihood.
class DrawsLayout {
 public:
  DrawsLayout(std::vector<BlockInfo> blocks, int n_persons, int total_dim);

  int n_columns() const { return n_columns_; }
  int n_blocks() const { return static_cast<int>(blocks_.size()); }
  const BlockInfo& block(int b) const { return blocks_[b]; }

  int zeta_col(int b, int comp) const;
  int omega_col(int b, int comp) const;
  int a_col(int b, int comp) const;
  int pi_col(int b) const;
  int dp_alpha_col(int b) const;  // -1 when the block is not DPMON
  int beta_col(int person) const;
  int loglik_col() const { return loglik_col_; }

  std::vector<std::string> column_names(
      const std::vector<std::string>& person_ids) const;

  Eigen::VectorXd project(const SamplerState& state) const;

 private:
  std::vector<BlockInfo> blocks_;
  std::vector<int> block_col0_;
  int n_persons_;
  int total_dim_;
  int beta_col0_;
  int loglik_col_;
  int n_columns_;
};

struct DrawsMeta {
  std::vector<BlockInfo> blocks;
  int n_persons = 0;
  int total_dim = 0;
  std::vector<std::string> person_ids;
  std::vector<std::string> attribute_names;
  UtilitySpec utility;
  MixingSpec mixing;
  HyperPriors hyper;
  MCMCConfig mcmc;
  std::string dataset_hash;

  DrawsLayout layout() const {
    return DrawsLayout(blocks, n_persons, total_dim);
  }
};

// Thinned post-burn-in draws of all chains plus the metadata needed to
// re-interpret them.
struct PosteriorDraws {
  DrawsMeta meta;
  std::vector<ChainDraws> chains;

  long total_retained() const;
};

// Multi-chain estimation with per-chain forked random streams. Chains run on
// threads when jobs > 1; results are identical either way.
PosteriorDraws run_estimation(const ModelSpec& model, const ChoiceDataset& data,
                              const MCMCConfig& config,
                              const std::string& dataset_hash = "",
                              int jobs = 1);

// Draws directory format: meta.json, columns.txt, one little-endian float64
// binary matrix per chain (row per retained draw) and one per-iteration
// log-likelihood trace per chain. Writing is atomic (temporary directory,
// then rename) and byte-deterministic under a fixed seed.
void save_draws(const PosteriorDraws& draws, const std::string& dir);
PosteriorDraws load_draws(const std::string& dir);

std::string fnv1a_hex(const void* data, std::size_t size);
std::string hash_file(const std::string& path);

}  // namespace mixlogit

#endif  // MIXLOGIT_DRAWS_HPP

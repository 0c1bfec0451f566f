#ifndef MIXLOGIT_EVAL_HPP
#define MIXLOGIT_EVAL_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlogit/choice_data.hpp"
#include "mixlogit/draws.hpp"

namespace mixlogit {

// Per-validation-task choice probabilities integrated over both posterior
// uncertainty and the mixing distribution. Tasks are enumerated person-major
// in dataset order.
struct PredictiveChoiceDistribution {
  std::vector<Eigen::VectorXd> task_probs;
  long n_posterior_draws = 0;
  int n_taste_draws_per_posterior_draw = 0;
};

// Population mixture implied by one retained draw for one block.
struct BlockMixture {
  std::vector<Eigen::VectorXd> zeta;
  std::vector<CovMatrix> omega;
  Eigen::VectorXd pi;
};

BlockMixture block_mixture_at(const PosteriorDraws& draws,
                              const DrawsLayout& layout,
                              const Eigen::VectorXd& row, int block);

// One taste vector simulated from the population law of a retained draw
// (component draw, then normal draw, per block).
Eigen::VectorXd simulate_taste(const std::vector<BlockMixture>& blocks,
                               const std::vector<BlockInfo>& infos,
                               int total_dim, RandomStream& rng);

// Posterior predictive choice distribution over the validation tasks.
// n_taste_draws is the total simulation budget: each retained posterior draw
// contributes ceil(n_taste_draws / n_retained) taste draws (at least one).
// Throws SpecMismatchError when the supplied specs disagree with the draws
// metadata.
PredictiveChoiceDistribution predictive_choice_distribution(
    const PosteriorDraws& draws, const MixingSpec& mixing,
    const UtilitySpec& utility, const ChoiceDataset& validation,
    int n_taste_draws, RandomStream& rng);

// Total variation distance, half the L1 distance between two probability
// vectors over the same alternative set.
double tvd(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

double tvd_mean(const std::vector<Eigen::VectorXd>& p,
                const std::vector<Eigen::VectorXd>& q);

// Training log pointwise predictive density: per task, the log of the mean
// over retained draws of the chosen-alternative probability at the
// person-level parameters, computed with log-sum-exp.
double lppd_train(const PosteriorDraws& draws, const ChoiceDataset& data);

// Validation LPPD: sum of log predictive probabilities of the observed
// choices. Throws CoverageError when the predictive distribution does not
// cover the dataset's tasks.
double lppd_validation(const PredictiveChoiceDistribution& predictive,
                       const ChoiceDataset& validation);

struct WaicResult {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
};

// WAIC = -2 (LPPD - p_WAIC) with p_WAIC the summed unbiased posterior
// variance of the pointwise log-likelihood. Requires >= 2 retained draws.
WaicResult waic(const PosteriorDraws& draws, const ChoiceDataset& data);

// Posterior summary of the mixture density evaluated on a grid of
// parameter-space points; invariant to component relabelling by construction.
struct DensityGridSummary {
  Eigen::MatrixXd points;    // P x dim
  Eigen::VectorXd mean;      // posterior mean density per point
  Eigen::VectorXd lower;     // 5% quantile over draws
  Eigen::VectorXd upper;     // 95% quantile over draws
};

DensityGridSummary mixture_density_grid(const PosteriorDraws& draws,
                                        const Eigen::MatrixXd& points);

// Percentile table of the posterior predictive taste distribution.
struct HeterogeneitySummary {
  std::vector<std::string> param_names;
  Eigen::MatrixXd percentiles;   // n_params x 5 (10/25/50/75/90)
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_std_err;  // std of per-draw means across retained draws
};

// Simulation-based heterogeneity summary for WTP-space fits (alpha, the
// price-sensitivity log-scale, and each WTP coefficient).
HeterogeneitySummary wtp_summary(const PosteriorDraws& draws,
                                 const MixingSpec& mixing,
                                 const UtilitySpec& utility, int n_taste_draws,
                                 RandomStream& rng);

void write_density_grid_csv(const DensityGridSummary& grid,
                            const std::string& path);

// Empirical CDF curves of the simulated posterior predictive taste
// distribution, one block of rows per parameter.
void write_taste_cdf_csv(const PosteriorDraws& draws, int n_taste_draws,
                         int n_grid, RandomStream& rng,
                         const std::string& path);

}  // namespace mixlogit

#endif  // MIXLOGIT_EVAL_HPP

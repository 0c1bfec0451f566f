#ifndef MIXLOGIT_SYNTHETIC_HPP
#define MIXLOGIT_SYNTHETIC_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlogit/choice_data.hpp"
#include "mixlogit/random.hpp"

namespace mixlogit {

enum class Scenario { Skewed, MultiModalSkewed };

struct SnlParams {
  double mu = 0.0;
  double sigma = 1.0;
  double lambda = 0.0;
};

// One population segment of the true taste law: a share of decision-makers
// whose two taste coordinates are independent skew-normal-logistic draws.
struct ScenarioSegment {
  double share = 1.0;
  SnlParams beta1;
  SnlParams beta2;
};

// Skewed: a single segment with both coordinates SNL(0, 1, 50).
// MultiModalSkewed: 25% (SNL(1,1,40), SNL(-2,1,80)), 25% (SNL(-2,1,70) twice),
//                   50% (SNL(1,1,-50) twice).
std::vector<ScenarioSegment> scenario_segments(Scenario scenario);

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario scenario);

struct ScenarioSpec {
  Scenario scenario = Scenario::Skewed;
  int n_persons = 1000;
  int n_tasks = 8;
  int n_alternatives = 5;
  double attr_lo = -5.0;
  double attr_hi = 5.0;
  std::uint64_t seed = 0;

  void check() const;
};

struct TrueTasteTable {
  std::vector<std::string> person_ids;
  Eigen::MatrixXd beta;      // N x 2
  std::vector<int> segment;  // generating segment index per person
};

// Segment sizes are exact block counts: floor(share * N) per listed segment
// with the remainder assigned to the last (majority) segment. Assignment is
// by deterministic blocks after a seeded shuffle of person indices.
TrueTasteTable generate_tastes(const ScenarioSpec& spec);

// Attributes i.i.d. Uniform(attr_lo, attr_hi); utilities X * beta_n plus
// Gumbel(0,1) noise; the chosen alternative is the utility argmax. The
// with_noise=false variant drops the Gumbel term (diagnostic only).
ChoiceDataset generate_dataset(const ScenarioSpec& spec,
                               const TrueTasteTable& tastes,
                               bool with_noise = true);

// Draws one taste vector from the scenario's population law (segment by
// share, then the segment's SNL coordinates).
Eigen::Vector2d sample_scenario_taste(Scenario scenario, RandomStream& rng);

using TasteSampler = std::function<Eigen::VectorXd(RandomStream&)>;

// Monte-Carlo average of MNL probabilities over draws from the true taste
// distribution: the brute-force predictive-truth oracle. Output sums to 1
// within 1e-12.
Eigen::VectorXd true_predictive_distribution(
    const Eigen::MatrixXd& task_attributes, const TasteSampler& taste_sampler,
    int n_draws, RandomStream& rng);

// Sidecar of realized true tastes (person_id, beta1, beta2, segment).
void write_tastes_csv(const TrueTasteTable& tastes, const std::string& path);
TrueTasteTable load_tastes_csv(const std::string& path);

}  // namespace mixlogit

#endif  // MIXLOGIT_SYNTHETIC_HPP

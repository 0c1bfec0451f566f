#ifndef MIXLOGIT_UTILITY_HPP
#define MIXLOGIT_UTILITY_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlogit/choice_data.hpp"
#include "mixlogit/errors.hpp"

namespace mixlogit {

enum class UtilityVariant { LinearPreference, WTPSpace };

// Representative utility specification over dataset attribute columns.
//
// LinearPreference: V = sum_i attrs[attribute_indices[i]] * params[i].
// WTPSpace:         V = alpha * d + exp(beta) * (-p + X gamma)
// with params laid out as [alpha, beta, gamma...], d the mobility-on-demand
// constant dummy, p the total price column, and X the non-price attributes.
struct UtilitySpec {
  UtilityVariant variant = UtilityVariant::LinearPreference;
  std::vector<int> attribute_indices;  // LinearPreference
  int mod_dummy_index = -1;            // WTPSpace
  int price_index = -1;                // WTPSpace
  std::vector<int> non_price_indices;  // WTPSpace

  int n_params() const {
    return variant == UtilityVariant::LinearPreference
               ? static_cast<int>(attribute_indices.size())
               : 2 + static_cast<int>(non_price_indices.size());
  }

  static UtilitySpec linear(std::vector<int> attribute_indices);
  static UtilitySpec wtp_space(int mod_dummy_index, int price_index,
                               std::vector<int> non_price_indices);

  // All referenced columns exist; price distinct from non-price columns.
  void check_against(const ChoiceDataset& ds) const;

  // Human-readable parameter names ("alpha", "log_price_sens", attribute
  // names) used in summaries and draw manifests.
  std::vector<std::string> param_names(
      const std::vector<std::string>& attribute_names) const;
};

// Heterogeneity block layout of the person-level parameter vector. Blocks are
// disjoint and cover all parameters. Exactly one block is the semi-parametric
// target of the configured mixing distribution; the others are univariate
// normals, which is how the WTP-space restriction of zero correlation between
// the constant and the price sensitivity is realised.
struct ParamBlock {
  std::string name;
  int offset = 0;
  int dim = 0;
  bool semiparametric = false;
};

struct ParamPartition {
  std::vector<ParamBlock> blocks;
  int total_dim = 0;

  int semiparametric_index() const;
};

ParamPartition make_partition(const UtilitySpec& spec);

double representative_utility(const UtilitySpec& spec,
                              const Eigen::VectorXd& params,
                              const Eigen::RowVectorXd& attributes);

// Softmax over available alternatives with max subtraction; unavailable
// alternatives get probability zero. Sums to 1 within 1e-12.
Eigen::VectorXd mnl_probabilities(const UtilitySpec& spec,
                                  const Eigen::VectorXd& params,
                                  const ChoiceTask& task);

// Sum over tasks of the log chosen-alternative probability, with
// probabilities floored at 1e-300 so the result stays finite.
double person_log_likelihood(const UtilitySpec& spec,
                             const Eigen::VectorXd& params,
                             const PersonRecord& person);

}  // namespace mixlogit

#endif  // MIXLOGIT_UTILITY_HPP

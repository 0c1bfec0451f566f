#include "mixlogit/utility.hpp"

#include <algorithm>
#include <cmath>

namespace mixlogit {

UtilitySpec UtilitySpec::linear(std::vector<int> attribute_indices) {
  UtilitySpec spec;
  spec.variant = UtilityVariant::LinearPreference;
  spec.attribute_indices = std::move(attribute_indices);
  return spec;
}

UtilitySpec UtilitySpec::wtp_space(int mod_dummy_index, int price_index,
                                   std::vector<int> non_price_indices) {
  UtilitySpec spec;
  spec.variant = UtilityVariant::WTPSpace;
  spec.mod_dummy_index = mod_dummy_index;
  spec.price_index = price_index;
  spec.non_price_indices = std::move(non_price_indices);
  return spec;
}

void UtilitySpec::check_against(const ChoiceDataset& ds) const {
  const int n_attrs = static_cast<int>(ds.attribute_names.size());
  auto check = [&](int idx, const char* what) {
    if (idx < 0 || idx >= n_attrs) {
      throw ShapeError(std::string("utility spec ") + what + " index " +
                       std::to_string(idx) + " outside [0," +
                       std::to_string(n_attrs) + ")");
    }
  };
  if (variant == UtilityVariant::LinearPreference) {
    if (attribute_indices.empty()) {
      throw ShapeError("linear utility spec references no attributes");
    }
    for (const int i : attribute_indices) check(i, "attribute");
  } else {
    check(mod_dummy_index, "mod dummy");
    check(price_index, "price");
    if (non_price_indices.empty()) {
      throw ShapeError("WTP-space utility spec has no non-price attributes");
    }
    for (const int i : non_price_indices) {
      check(i, "non-price attribute");
      if (i == price_index) {
        throw ShapeError("price column also listed as a non-price attribute");
      }
    }
  }
}

std::vector<std::string> UtilitySpec::param_names(
    const std::vector<std::string>& attribute_names) const {
  std::vector<std::string> names;
  if (variant == UtilityVariant::LinearPreference) {
    for (const int i : attribute_indices) names.push_back(attribute_names.at(i));
  } else {
    names.push_back("alpha");
    names.push_back("log_price_sens");
    for (const int i : non_price_indices) names.push_back(attribute_names.at(i));
  }
  return names;
}

int ParamPartition::semiparametric_index() const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].semiparametric) return static_cast<int>(b);
  }
  return -1;
}

ParamPartition make_partition(const UtilitySpec& spec) {
  ParamPartition partition;
  if (spec.variant == UtilityVariant::LinearPreference) {
    partition.blocks.push_back(
        ParamBlock{"taste", 0, spec.n_params(), true});
  } else {
    partition.blocks.push_back(ParamBlock{"asc", 0, 1, false});
    partition.blocks.push_back(ParamBlock{"log_price_sens", 1, 1, false});
    partition.blocks.push_back(ParamBlock{
        "wtp", 2, static_cast<int>(spec.non_price_indices.size()), true});
  }
  partition.total_dim = spec.n_params();
  return partition;
}

double representative_utility(const UtilitySpec& spec,
                              const Eigen::VectorXd& params,
                              const Eigen::RowVectorXd& attributes) {
  if (params.size() != spec.n_params()) {
    throw ShapeError("parameter vector has length " +
                     std::to_string(params.size()) + ", spec expects " +
                     std::to_string(spec.n_params()));
  }
  if (spec.variant == UtilityVariant::LinearPreference) {
    double v = 0.0;
    for (std::size_t i = 0; i < spec.attribute_indices.size(); ++i) {
      v += attributes(spec.attribute_indices[i]) *
           params(static_cast<Eigen::Index>(i));
    }
    return v;
  }
  double xg = -attributes(spec.price_index);
  for (std::size_t i = 0; i < spec.non_price_indices.size(); ++i) {
    xg += attributes(spec.non_price_indices[i]) *
          params(2 + static_cast<Eigen::Index>(i));
  }
  return params(0) * attributes(spec.mod_dummy_index) + std::exp(params(1)) * xg;
}

Eigen::VectorXd mnl_probabilities(const UtilitySpec& spec,
                                  const Eigen::VectorXd& params,
                                  const ChoiceTask& task) {
  const int j = task.n_alternatives();
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(j);
  double vmax = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd v(j);
  for (int r = 0; r < j; ++r) {
    if (!task.available[r]) continue;
    v(r) = representative_utility(spec, params, task.attributes.row(r));
    vmax = std::max(vmax, v(r));
  }
  double denom = 0.0;
  for (int r = 0; r < j; ++r) {
    if (!task.available[r]) continue;
    probs(r) = std::exp(v(r) - vmax);
    denom += probs(r);
  }
  probs /= denom;
  return probs;
}

double person_log_likelihood(const UtilitySpec& spec,
                             const Eigen::VectorXd& params,
                             const PersonRecord& person) {
  double ll = 0.0;
  for (const auto& task : person.tasks) {
    const Eigen::VectorXd probs = mnl_probabilities(spec, params, task);
    ll += std::log(std::max(probs(task.chosen), 1e-300));
  }
  return ll;
}

}  // namespace mixlogit

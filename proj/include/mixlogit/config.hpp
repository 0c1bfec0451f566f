#ifndef MIXLOGIT_CONFIG_HPP
#define MIXLOGIT_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "mixlogit/sampler.hpp"
#include "mixlogit/synthetic.hpp"

namespace mixlogit {

// Sectioned plain-text run configuration:
//   [section]
//   key = value        # full-line comments start with '#' or ';'
// Unknown sections or keys are rejected. One file describes a whole run; each
// command consumes the sections it needs.

struct ScenarioConfig {
  ScenarioSpec base;
  int replications = 20;
  int validation_persons = 25;
  int validation_tasks = 1;
};

struct UtilityConfig {
  UtilityVariant variant = UtilityVariant::LinearPreference;
  std::vector<std::string> attributes;  // linear
  std::string mod_dummy;                // wtp_space
  std::string price;                    // wtp_space
  std::vector<std::string> non_price;   // wtp_space

  // Resolve column names against the dataset header.
  UtilitySpec resolve(const std::vector<std::string>& attribute_names) const;
};

struct MixingConfig {
  MixingKind kind = MixingKind::MVN;
  std::optional<int> k;  // defaults: mvn 1, fmon 2, dpmon 100
  double dirichlet_alpha = 1.0;

  MixingSpec resolve() const;
};

struct HyperConfig {
  double mu0 = 0.0;
  double sigma0_scale = 100.0;
  double nu = 2.0;
  double a_scale = 1000.0;

  HyperPriors resolve(int dim) const {
    return HyperPriors::isotropic(dim, mu0, sigma0_scale, nu, a_scale);
  }
};

struct EvalConfig {
  int n_taste_draws = 2000;
  int truth_draws = 10000;
  std::uint64_t seed = 1;
  int replication = 0;
  std::optional<std::string> method;
  bool density_grid = false;
  double grid_lo = -4.0;
  double grid_hi = 4.0;
  int grid_points = 40;
};

struct PathsConfig {
  std::optional<std::string> output_dir;
  std::optional<std::string> train_csv;
  std::optional<std::string> validation_csv;
  std::optional<std::string> data_dir;
  std::optional<std::string> draws_dir;
  std::optional<std::string> metrics_csv;
  std::optional<std::string> metrics_dir;
  std::optional<std::string> report_csv;
  std::optional<std::string> wtp_draws_dir;
  std::optional<std::string> wtp_table_csv;
  std::optional<std::string> wtp_cdf_csv;
  std::optional<std::string> density_grid_csv;
};

struct RunConfig {
  std::optional<ScenarioConfig> scenario;
  std::optional<UtilityConfig> utility;
  std::optional<MixingConfig> mixing;
  HyperConfig hyperpriors;  // defaults apply when the section is absent
  std::optional<MCMCConfig> mcmc;
  EvalConfig eval;
  PathsConfig paths;

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& origin);
};

// Relative paths are resolved against $MIXLOGIT_OUTPUT_ROOT when it is set.
std::string resolve_path(const std::string& path);

}  // namespace mixlogit

#endif  // MIXLOGIT_CONFIG_HPP

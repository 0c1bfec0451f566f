#include "mixlogit/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixlogit/stats.hpp"
#include "mixlogit/utility.hpp"

namespace mixlogit {

std::vector<ScenarioSegment> scenario_segments(Scenario scenario) {
  if (scenario == Scenario::Skewed) {
    return {ScenarioSegment{1.0, {0.0, 1.0, 50.0}, {0.0, 1.0, 50.0}}};
  }
  return {
      ScenarioSegment{0.25, {1.0, 1.0, 40.0}, {-2.0, 1.0, 80.0}},
      ScenarioSegment{0.25, {-2.0, 1.0, 70.0}, {-2.0, 1.0, 70.0}},
      ScenarioSegment{0.50, {1.0, 1.0, -50.0}, {1.0, 1.0, -50.0}},
  };
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "skewed") return Scenario::Skewed;
  if (name == "multimodal_skewed") return Scenario::MultiModalSkewed;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected 'skewed' or 'multimodal_skewed')");
}

std::string to_string(Scenario scenario) {
  return scenario == Scenario::Skewed ? "skewed" : "multimodal_skewed";
}

void ScenarioSpec::check() const {
  if (n_persons < 1 || n_tasks < 1 || n_alternatives < 1) {
    throw ConfigError("scenario requires n_persons, n_tasks, n_alternatives >= 1");
  }
  if (!(attr_lo < attr_hi)) {
    throw ConfigError("scenario attribute range must satisfy lo < hi");
  }
}

namespace {

std::string person_label(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%05d", index + 1);
  return buf;
}

}  // namespace

TrueTasteTable generate_tastes(const ScenarioSpec& spec) {
  spec.check();
  const auto segments = scenario_segments(spec.scenario);
  const int n = spec.n_persons;
  RandomStream base(spec.seed);

  // exact block counts: floor(share * N) per segment, remainder to the last
  std::vector<int> counts(segments.size());
  int assigned = 0;
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    counts[s] = static_cast<int>(std::floor(segments[s].share * n + 1e-9));
    assigned += counts[s];
  }
  counts[segments.size() - 1] = n - assigned;

  RandomStream shuffle_rng = base.fork(1);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng.next_u64() %
                                   static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  TrueTasteTable table;
  table.person_ids.resize(n);
  table.beta.resize(n, 2);
  table.segment.resize(n);
  int pos = 0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (int c = 0; c < counts[s]; ++c) table.segment[order[pos++]] = static_cast<int>(s);
  }

  RandomStream taste_rng = base.fork(2);
  for (int i = 0; i < n; ++i) {
    table.person_ids[i] = person_label(i);
    const auto& seg = segments[table.segment[i]];
    table.beta(i, 0) =
        sample_snl(seg.beta1.mu, seg.beta1.sigma, seg.beta1.lambda, taste_rng);
    table.beta(i, 1) =
        sample_snl(seg.beta2.mu, seg.beta2.sigma, seg.beta2.lambda, taste_rng);
  }
  return table;
}

ChoiceDataset generate_dataset(const ScenarioSpec& spec,
                               const TrueTasteTable& tastes,
                               bool with_noise) {
  spec.check();
  if (static_cast<int>(tastes.person_ids.size()) != spec.n_persons) {
    throw ShapeError("taste table has " +
                     std::to_string(tastes.person_ids.size()) +
                     " rows, scenario expects " + std::to_string(spec.n_persons));
  }
  RandomStream base(spec.seed);
  RandomStream design_rng = base.fork(3);
  RandomStream noise_rng = base.fork(4);

  ChoiceDataset ds;
  ds.attribute_names = {"x1", "x2"};
  ds.persons.reserve(spec.n_persons);
  for (int i = 0; i < spec.n_persons; ++i) {
    PersonRecord person;
    person.person_id = tastes.person_ids[i];
    const Eigen::Vector2d beta = tastes.beta.row(i);
    for (int t = 0; t < spec.n_tasks; ++t) {
      ChoiceTask task;
      task.task_id = "t" + std::to_string(t + 1);
      const int j = spec.n_alternatives;
      task.attributes.resize(j, 2);
      task.available.assign(j, 1);
      for (int r = 0; r < j; ++r) {
        task.alt_ids.push_back(std::to_string(r + 1));
        task.attributes(r, 0) = design_rng.uniform(spec.attr_lo, spec.attr_hi);
        task.attributes(r, 1) = design_rng.uniform(spec.attr_lo, spec.attr_hi);
      }
      Eigen::VectorXd utility = task.attributes * beta;
      if (with_noise) {
        for (int r = 0; r < j; ++r) utility(r) += sample_gumbel(noise_rng);
      }
      utility.maxCoeff(&task.chosen);
      person.tasks.push_back(std::move(task));
    }
    ds.persons.push_back(std::move(person));
  }
  require_valid(ds);
  return ds;
}

Eigen::Vector2d sample_scenario_taste(Scenario scenario, RandomStream& rng) {
  const auto segments = scenario_segments(scenario);
  int seg = 0;
  if (segments.size() > 1) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      cum += segments[s].share;
      if (u <= cum) {
        seg = static_cast<int>(s);
        break;
      }
      seg = static_cast<int>(s);
    }
  }
  const auto& s = segments[seg];
  Eigen::Vector2d beta;
  beta(0) = sample_snl(s.beta1.mu, s.beta1.sigma, s.beta1.lambda, rng);
  beta(1) = sample_snl(s.beta2.mu, s.beta2.sigma, s.beta2.lambda, rng);
  return beta;
}

Eigen::VectorXd true_predictive_distribution(
    const Eigen::MatrixXd& task_attributes, const TasteSampler& taste_sampler,
    int n_draws, RandomStream& rng) {
  if (n_draws < 1) throw DomainError("true_predictive_distribution: n_draws >= 1");
  const int j = static_cast<int>(task_attributes.rows());
  std::vector<int> all_cols(task_attributes.cols());
  for (std::size_t i = 0; i < all_cols.size(); ++i) all_cols[i] = static_cast<int>(i);
  const UtilitySpec spec = UtilitySpec::linear(all_cols);

  ChoiceTask task;
  task.attributes = task_attributes;
  task.available.assign(j, 1);
  task.alt_ids.assign(j, "");
  task.chosen = 0;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(j);
  for (int d = 0; d < n_draws; ++d) {
    mean += mnl_probabilities(spec, taste_sampler(rng), task);
  }
  mean /= static_cast<double>(n_draws);
  // close the simplex exactly against accumulated rounding
  mean(j - 1) = std::max(0.0, 1.0 - (mean.sum() - mean(j - 1)));
  return mean;
}

void write_tastes_csv(const TrueTasteTable& tastes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "person_id,beta1,beta2,segment\n";
  char buf[40];
  for (std::size_t i = 0; i < tastes.person_ids.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", tastes.beta(static_cast<Eigen::Index>(i), 0));
    out << tastes.person_ids[i] << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", tastes.beta(static_cast<Eigen::Index>(i), 1));
    out << "," << buf << "," << tastes.segment[i] << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

TrueTasteTable load_tastes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");

  std::vector<std::array<double, 2>> betas;
  std::vector<std::string> ids;
  std::vector<int> segments;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    std::string id, b1, b2, seg;
    std::getline(is, id, ',');
    std::getline(is, b1, ',');
    std::getline(is, b2, ',');
    std::getline(is, seg, ',');
    auto to_d = [&](const std::string& s) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) {
        throw IntegrityError("bad number '" + s + "' in " + path);
      }
      return v;
    };
    ids.push_back(id);
    betas.push_back({to_d(b1), to_d(b2)});
    segments.push_back(static_cast<int>(to_d(seg)));
  }
  TrueTasteTable table;
  table.person_ids = std::move(ids);
  table.segment = std::move(segments);
  table.beta.resize(static_cast<Eigen::Index>(betas.size()), 2);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    table.beta(static_cast<Eigen::Index>(i), 0) = betas[i][0];
    table.beta(static_cast<Eigen::Index>(i), 1) = betas[i][1];
  }
  return table;
}

}  // namespace mixlogit

#ifndef MIXLOGIT_CHOICE_DATA_HPP
#define MIXLOGIT_CHOICE_DATA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixlogit/errors.hpp"
#include "mixlogit/random.hpp"

namespace mixlogit {

// One choice occasion: J alternatives with their attribute rows, an
// availability mask and the observed choice (0-based row index).
struct ChoiceTask {
  std::string task_id;
  std::vector<std::string> alt_ids;
  Eigen::MatrixXd attributes;          // J x n_attributes
  std::vector<std::uint8_t> available; // J entries of 0/1
  int chosen = -1;

  int n_alternatives() const { return static_cast<int>(attributes.rows()); }
};

struct PersonRecord {
  std::string person_id;
  std::vector<ChoiceTask> tasks;
};

// Immutable-by-convention panel dataset. Construct through load_csv or a
// generator and treat as read-only afterwards; safe to share across
// concurrent readers.
struct ChoiceDataset {
  std::vector<PersonRecord> persons;
  std::vector<std::string> attribute_names;
  std::optional<std::vector<std::string>> alternative_labels;

  int n_persons() const { return static_cast<int>(persons.size()); }
  long n_tasks() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Structural checks: >= 2 alternatives per task, chosen indexes an available
// alternative, attribute rows match |attribute_names|, T_n >= 1, unique
// person ids. Report-based; never throws.
ValidationReport validate(const ChoiceDataset& ds);

// Throws IntegrityError listing the violations when the report is non-empty.
void require_valid(const ChoiceDataset& ds);

// Column mapping for the long-format CSV (one row per alternative per task).
// Empty attribute_cols means every column not otherwise claimed is an
// attribute, in header order.
struct CsvSchema {
  std::string person_col = "person_id";
  std::string task_col = "task_id";
  std::string alt_col = "alt_id";
  std::string chosen_col = "chosen";
  std::string available_col = "available";
  std::vector<std::string> attribute_cols;
};

ChoiceDataset load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const ChoiceDataset& ds, const std::string& path);

struct SplitSpec {
  double train_fraction = 0.8;
  int validation_tasks_per_person = 1;
  std::uint64_t seed = 0;
};

// Person-level split: floor(train_fraction * N) persons keep all their tasks,
// the remainder become validation persons contributing exactly
// validation_tasks_per_person tasks each (their other tasks are dropped).
// Deterministic under a fixed seed.
std::pair<ChoiceDataset, ChoiceDataset> split_train_validation(
    const ChoiceDataset& ds, const SplitSpec& spec);

}  // namespace mixlogit

#endif  // MIXLOGIT_CHOICE_DATA_HPP

#include "mixlogit/choice_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mixlogit {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding whitespace and stray CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw IntegrityError("could not parse number '" + s + "' in " + context);
  }
  return v;
}

int parse_01(const std::string& s, const std::string& context) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw IntegrityError("expected 0 or 1, got '" + s + "' in " + context);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

long ChoiceDataset::n_tasks() const {
  long total = 0;
  for (const auto& p : persons) total += static_cast<long>(p.tasks.size());
  return total;
}

ValidationReport validate(const ChoiceDataset& ds) {
  ValidationReport report;
  const auto nattrs = static_cast<Eigen::Index>(ds.attribute_names.size());
  std::map<std::string, int> seen_person;
  for (const auto& person : ds.persons) {
    if (++seen_person[person.person_id] == 2) {
      report.violations.push_back("duplicate person_id '" + person.person_id + "'");
    }
    if (person.tasks.empty()) {
      report.violations.push_back("person '" + person.person_id + "' has no tasks");
    }
    for (const auto& task : person.tasks) {
      const std::string where =
          "(person " + person.person_id + ", task " + task.task_id + ")";
      const int j = task.n_alternatives();
      if (j < 2) {
        report.violations.push_back("fewer than 2 alternatives " + where);
      }
      if (task.attributes.cols() != nattrs) {
        report.violations.push_back(
            "attribute row width " + std::to_string(task.attributes.cols()) +
            " != " + std::to_string(nattrs) + " " + where);
      }
      if (static_cast<int>(task.available.size()) != j ||
          static_cast<int>(task.alt_ids.size()) != j) {
        report.violations.push_back("availability/label length mismatch " + where);
      }
      if (task.chosen < 0 || task.chosen >= j) {
        report.violations.push_back(
            "chosen index " + std::to_string(task.chosen) + " out of range " + where);
      } else if (task.chosen < static_cast<int>(task.available.size()) &&
                 !task.available[task.chosen]) {
        report.violations.push_back("chosen alternative unavailable " + where);
      }
    }
  }
  return report;
}

void require_valid(const ChoiceDataset& ds) {
  const auto report = validate(ds);
  if (report.ok()) return;
  std::string msg = "dataset violates invariants:";
  const std::size_t shown = std::min<std::size_t>(report.violations.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + report.violations[i];
  if (shown < report.violations.size()) {
    msg += "\n  ... and " +
           std::to_string(report.violations.size() - shown) + " more";
  }
  throw IntegrityError(msg);
}

ChoiceDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  const auto header = split_fields(line);

  auto col_index = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  auto required = [&](const std::string& name) -> int {
    const int idx = col_index(name);
    if (idx < 0) throw SchemaError("missing column '" + name + "' in " + path);
    return idx;
  };

  const int person_idx = required(schema.person_col);
  const int task_idx = required(schema.task_col);
  const int alt_idx = required(schema.alt_col);
  const int chosen_idx = required(schema.chosen_col);
  const int avail_idx = col_index(schema.available_col);

  std::vector<int> attr_idx;
  std::vector<std::string> attr_names;
  if (schema.attribute_cols.empty()) {
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
      if (i == person_idx || i == task_idx || i == alt_idx ||
          i == chosen_idx || i == avail_idx)
        continue;
      attr_idx.push_back(i);
      attr_names.push_back(header[i]);
    }
  } else {
    for (const auto& name : schema.attribute_cols) {
      attr_idx.push_back(required(name));
      attr_names.push_back(name);
    }
  }

  struct RawTask {
    std::string task_id;
    std::vector<std::string> alt_ids;
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<std::uint8_t> avail;
    std::vector<int> chosen_flags;
  };
  struct RawPerson {
    std::string person_id;
    std::vector<RawTask> tasks;
    std::map<std::string, int> task_lookup;
  };
  std::vector<RawPerson> raw;
  std::map<std::string, int> person_lookup;

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw IntegrityError("line " + std::to_string(line_no) + " of " + path +
                           " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(header.size()));
    }
    const std::string where = "line " + std::to_string(line_no) + " of " + path;

    const auto& pid = fields[person_idx];
    auto [pit, pnew] = person_lookup.try_emplace(pid, static_cast<int>(raw.size()));
    if (pnew) raw.push_back(RawPerson{pid, {}, {}});
    RawPerson& person = raw[pit->second];

    const auto& tid = fields[task_idx];
    auto [tit, tnew] =
        person.task_lookup.try_emplace(tid, static_cast<int>(person.tasks.size()));
    if (tnew) person.tasks.push_back(RawTask{tid, {}, {}, {}, {}});
    RawTask& task = person.tasks[tit->second];

    task.alt_ids.push_back(fields[alt_idx]);
    Eigen::RowVectorXd row(attr_idx.size());
    for (std::size_t a = 0; a < attr_idx.size(); ++a) {
      row(static_cast<Eigen::Index>(a)) = parse_double(fields[attr_idx[a]], where);
    }
    task.rows.push_back(std::move(row));
    task.avail.push_back(static_cast<std::uint8_t>(
        avail_idx < 0 ? 1 : parse_01(fields[avail_idx], where)));
    task.chosen_flags.push_back(parse_01(fields[chosen_idx], where));
  }

  ChoiceDataset ds;
  ds.attribute_names = attr_names;
  for (auto& rp : raw) {
    PersonRecord person;
    person.person_id = rp.person_id;
    for (auto& rt : rp.tasks) {
      ChoiceTask task;
      task.task_id = rt.task_id;
      task.alt_ids = rt.alt_ids;
      task.available = rt.avail;
      const int j = static_cast<int>(rt.rows.size());
      task.attributes.resize(j, static_cast<Eigen::Index>(attr_idx.size()));
      for (int r = 0; r < j; ++r) task.attributes.row(r) = rt.rows[r];
      int n_chosen = 0;
      for (int r = 0; r < j; ++r) {
        if (rt.chosen_flags[r]) {
          task.chosen = r;
          ++n_chosen;
        }
      }
      if (n_chosen != 1) {
        throw IntegrityError("person " + rp.person_id + ", task " + rt.task_id +
                             " has " + std::to_string(n_chosen) +
                             " chosen rows (expected exactly 1)");
      }
      person.tasks.push_back(std::move(task));
    }
    ds.persons.push_back(std::move(person));
  }

  // Labelled design: every task presents the same alternative sequence.
  if (!ds.persons.empty() && !ds.persons[0].tasks.empty()) {
    const auto& labels = ds.persons[0].tasks[0].alt_ids;
    bool labelled = true;
    for (const auto& p : ds.persons) {
      for (const auto& t : p.tasks) {
        if (t.alt_ids != labels) {
          labelled = false;
          break;
        }
      }
      if (!labelled) break;
    }
    if (labelled) ds.alternative_labels = labels;
  }

  require_valid(ds);
  return ds;
}

void write_csv(const ChoiceDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  bool any_unavailable = false;
  for (const auto& p : ds.persons) {
    for (const auto& t : p.tasks) {
      for (const auto a : t.available) {
        if (!a) any_unavailable = true;
      }
    }
  }

  out << "person_id,task_id,alt_id,chosen";
  if (any_unavailable) out << ",available";
  for (const auto& name : ds.attribute_names) out << "," << name;
  out << "\n";

  for (const auto& p : ds.persons) {
    for (const auto& t : p.tasks) {
      for (int j = 0; j < t.n_alternatives(); ++j) {
        out << p.person_id << "," << t.task_id << "," << t.alt_ids[j] << ","
            << (t.chosen == j ? 1 : 0);
        if (any_unavailable) out << "," << static_cast<int>(t.available[j]);
        for (Eigen::Index a = 0; a < t.attributes.cols(); ++a) {
          out << "," << format_double(t.attributes(j, a));
        }
        out << "\n";
      }
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::pair<ChoiceDataset, ChoiceDataset> split_train_validation(
    const ChoiceDataset& ds, const SplitSpec& spec) {
  const int n = ds.n_persons();
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1), got " +
                      std::to_string(spec.train_fraction));
  }
  if (spec.validation_tasks_per_person < 1) {
    throw ConfigError("validation_tasks_per_person must be >= 1");
  }
  // floor convention, with a small epsilon so exact fractions like 1207/1507
  // are not knocked down by floating-point noise
  const int n_train =
      static_cast<int>(std::floor(spec.train_fraction * n + 1e-9));
  const int n_val = n - n_train;
  if (n_train < 1) {
    throw ConfigError("split leaves no training persons (N=" +
                      std::to_string(n) + ")");
  }
  if (n_val < 1) {
    throw ConfigError("split leaves no validation persons (N=" +
                      std::to_string(n) + ", train_fraction=" +
                      std::to_string(spec.train_fraction) + ")");
  }

  RandomStream rng(spec.seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> val_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  ChoiceDataset train;
  train.attribute_names = ds.attribute_names;
  train.alternative_labels = ds.alternative_labels;
  for (const int i : train_idx) train.persons.push_back(ds.persons[i]);

  ChoiceDataset validation;
  validation.attribute_names = ds.attribute_names;
  validation.alternative_labels = ds.alternative_labels;
  for (const int i : val_idx) {
    const auto& person = ds.persons[i];
    const int t = static_cast<int>(person.tasks.size());
    if (t < spec.validation_tasks_per_person) {
      throw ConfigError("person '" + person.person_id + "' has only " +
                        std::to_string(t) + " tasks, need " +
                        std::to_string(spec.validation_tasks_per_person));
    }
    std::vector<int> task_order(t);
    for (int k = 0; k < t; ++k) task_order[k] = k;
    for (int k = t - 1; k > 0; --k) {
      const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(k + 1));
      std::swap(task_order[k], task_order[j]);
    }
    std::vector<int> keep(task_order.begin(),
                          task_order.begin() + spec.validation_tasks_per_person);
    std::sort(keep.begin(), keep.end());
    PersonRecord vp;
    vp.person_id = person.person_id;
    for (const int k : keep) vp.tasks.push_back(person.tasks[k]);
    validation.persons.push_back(std::move(vp));
  }
  return {std::move(train), std::move(validation)};
}

}  // namespace mixlogit

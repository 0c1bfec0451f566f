#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mixlogit/choice_data.hpp"

using namespace mixlogit;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChoiceDataset toy_dataset(int n_persons, int n_tasks, int n_alts) {
  ChoiceDataset ds;
  ds.attribute_names = {"x1", "x2"};
  for (int p = 0; p < n_persons; ++p) {
    PersonRecord person;
    person.person_id = "p" + std::to_string(p + 1);
    for (int t = 0; t < n_tasks; ++t) {
      ChoiceTask task;
      task.task_id = "t" + std::to_string(t + 1);
      task.attributes.resize(n_alts, 2);
      for (int j = 0; j < n_alts; ++j) {
        task.alt_ids.push_back(std::to_string(j + 1));
        task.attributes(j, 0) = 0.1 * (p + 1) + j;
        task.attributes(j, 1) = -0.5 * j + 0.25 * t;
      }
      task.available.assign(n_alts, 1);
      task.chosen = (p + t) % n_alts;
      person.tasks.push_back(std::move(task));
    }
    ds.persons.push_back(std::move(person));
  }
  return ds;
}

}  // namespace

TEST_CASE("load_csv parses a minimal long-format file") {
  const std::string path = write_temp("mixlogit_min.csv",
      "person_id,task_id,alt_id,chosen,x1,x2\n"
      "a,1,1,0,1.5,2.0\n"
      "a,1,2,1,-0.25,0.125\n"
      "a,1,3,0,3.0,4.0\n");
  const ChoiceDataset ds = load_csv(path);
  CHECK(ds.n_persons() == 1);
  REQUIRE(ds.persons[0].tasks.size() == 1);
  const ChoiceTask& task = ds.persons[0].tasks[0];
  CHECK(task.n_alternatives() == 3);
  CHECK(task.chosen == 1);
  CHECK(ds.attribute_names == std::vector<std::string>{"x1", "x2"});
  CHECK(task.attributes(1, 0) == -0.25);
  REQUIRE(ds.alternative_labels.has_value());
  CHECK(*ds.alternative_labels == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("load_csv rejects structural problems") {
  SUBCASE("double chosen flag names the task") {
    const std::string path = write_temp("mixlogit_dbl.csv",
        "person_id,task_id,alt_id,chosen,x1\n"
        "a,7,1,1,1.0\n"
        "a,7,2,1,2.0\n");
    try {
      load_csv(path);
      FAIL("expected IntegrityError");
    } catch (const IntegrityError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("a") != std::string::npos);
      CHECK(msg.find("7") != std::string::npos);
    }
  }

  SUBCASE("no chosen flag") {
    const std::string path = write_temp("mixlogit_none.csv",
        "person_id,task_id,alt_id,chosen,x1\n"
        "a,1,1,0,1.0\n"
        "a,1,2,0,2.0\n");
    CHECK_THROWS_AS(load_csv(path), IntegrityError);
  }

  SUBCASE("missing required column is named") {
    const std::string path = write_temp("mixlogit_nochosen.csv",
        "person_id,task_id,alt_id,x1\n"
        "a,1,1,1.0\n");
    try {
      load_csv(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("chosen") != std::string::npos);
    }
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nowhere.csv"), IoError);
  }
}

TEST_CASE("csv round-trip is the identity on the in-memory model") {
  const ChoiceDataset ds = toy_dataset(4, 3, 3);
  const auto p1 = (fs::temp_directory_path() / "mixlogit_rt1.csv").string();
  const auto p2 = (fs::temp_directory_path() / "mixlogit_rt2.csv").string();
  write_csv(ds, p1);
  const ChoiceDataset loaded = load_csv(p1);
  write_csv(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));

  CHECK(loaded.n_persons() == ds.n_persons());
  CHECK(loaded.attribute_names == ds.attribute_names);
  for (int p = 0; p < ds.n_persons(); ++p) {
    CHECK(loaded.persons[p].person_id == ds.persons[p].person_id);
    REQUIRE(loaded.persons[p].tasks.size() == ds.persons[p].tasks.size());
    for (std::size_t t = 0; t < ds.persons[p].tasks.size(); ++t) {
      CHECK(loaded.persons[p].tasks[t].chosen == ds.persons[p].tasks[t].chosen);
      CHECK(loaded.persons[p].tasks[t].attributes ==
            ds.persons[p].tasks[t].attributes);
    }
  }
}

TEST_CASE("availability column round-trips and gates validation") {
  const std::string path = write_temp("mixlogit_avail.csv",
      "person_id,task_id,alt_id,chosen,available,x1\n"
      "a,1,1,0,0,1.0\n"
      "a,1,2,1,1,2.0\n"
      "a,1,3,0,1,3.0\n");
  const ChoiceDataset ds = load_csv(path);
  CHECK(ds.persons[0].tasks[0].available == std::vector<std::uint8_t>{0, 1, 1});

  ChoiceDataset bad = ds;
  bad.persons[0].tasks[0].chosen = 0;  // unavailable alternative
  const auto report = validate(bad);
  CHECK(report.violations.size() == 1);
  CHECK(report.violations[0].find("unavailable") != std::string::npos);
}

TEST_CASE("validate reports violations without throwing") {
  CHECK(validate(toy_dataset(3, 2, 3)).ok());

  SUBCASE("chosen index out of range") {
    ChoiceDataset ds = toy_dataset(1, 1, 3);
    ds.persons[0].tasks[0].chosen = 5;
    const auto report = validate(ds);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("out of range") != std::string::npos);
  }

  SUBCASE("attribute row of wrong width") {
    ChoiceDataset ds = toy_dataset(1, 1, 3);
    ds.persons[0].tasks[0].attributes.resize(3, 1);
    ds.persons[0].tasks[0].attributes.setZero();
    const auto report = validate(ds);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("width") != std::string::npos);
  }

  SUBCASE("single-alternative task") {
    ChoiceDataset ds = toy_dataset(1, 1, 3);
    ChoiceTask degenerate;
    degenerate.task_id = "d";
    degenerate.attributes.resize(1, 2);
    degenerate.attributes.setZero();
    degenerate.alt_ids = {"1"};
    degenerate.available = {1};
    degenerate.chosen = 0;
    ds.persons[0].tasks.push_back(degenerate);
    CHECK(!validate(ds).ok());
  }
}

TEST_CASE("split_train_validation") {
  SUBCASE("N=10 at 0.8 gives 8 train and 2 single-task validation persons") {
    const ChoiceDataset ds = toy_dataset(10, 4, 3);
    const auto [train, validation] =
        split_train_validation(ds, SplitSpec{0.8, 1, 123});
    CHECK(train.n_persons() == 8);
    CHECK(validation.n_persons() == 2);
    for (const auto& p : validation.persons) CHECK(p.tasks.size() == 1);
    for (const auto& p : train.persons) CHECK(p.tasks.size() == 4);
  }

  SUBCASE("same seed gives the identical split") {
    const ChoiceDataset ds = toy_dataset(17, 3, 3);
    const auto [t1, v1] = split_train_validation(ds, SplitSpec{0.7, 2, 9});
    const auto [t2, v2] = split_train_validation(ds, SplitSpec{0.7, 2, 9});
    REQUIRE(t1.n_persons() == t2.n_persons());
    for (int p = 0; p < t1.n_persons(); ++p) {
      CHECK(t1.persons[p].person_id == t2.persons[p].person_id);
    }
    for (int p = 0; p < v1.n_persons(); ++p) {
      CHECK(v1.persons[p].person_id == v2.persons[p].person_id);
      REQUIRE(v1.persons[p].tasks.size() == v2.persons[p].tasks.size());
      for (std::size_t t = 0; t < v1.persons[p].tasks.size(); ++t) {
        CHECK(v1.persons[p].tasks[t].task_id == v2.persons[p].tasks[t].task_id);
      }
    }
  }

  SUBCASE("floor convention with fp-safe exact fractions") {
    const ChoiceDataset small = toy_dataset(10, 1, 2);
    CHECK(split_train_validation(small, SplitSpec{0.8, 1, 1}).first.n_persons() == 8);
    // the case-study 1207/300 split of 1507 persons comes out of its exact fraction
    const double f = 1207.0 / 1507.0;
    CHECK(static_cast<int>(std::floor(f * 1507 + 1e-9)) == 1207);
  }

  SUBCASE("person sets are disjoint and cover everyone, no task duplication") {
    const ChoiceDataset ds = toy_dataset(23, 5, 3);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto [train, validation] =
          split_train_validation(ds, SplitSpec{0.6, 2, seed});
      std::set<std::string> seen;
      for (const auto& p : train.persons) seen.insert(p.person_id);
      CHECK(seen.size() == static_cast<std::size_t>(train.n_persons()));
      for (const auto& p : validation.persons) {
        CHECK(seen.insert(p.person_id).second);
        std::set<std::string> tasks;
        for (const auto& t : p.tasks) CHECK(tasks.insert(t.task_id).second);
      }
      CHECK(seen.size() == 23);
    }
  }

  SUBCASE("degenerate fractions are rejected") {
    const ChoiceDataset ds = toy_dataset(3, 2, 3);
    // a fraction this close to 1 leaves zero validation persons
    CHECK_THROWS_AS(split_train_validation(ds, SplitSpec{1.0 - 1e-13, 1, 1}),
                    ConfigError);
    CHECK_THROWS_AS(split_train_validation(ds, SplitSpec{1.2, 1, 1}),
                    ConfigError);
    CHECK_THROWS_AS(split_train_validation(ds, SplitSpec{0.5, 5, 1}),
                    ConfigError);
  }
}

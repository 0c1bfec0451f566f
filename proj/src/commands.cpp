#include "mixlogit/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "mixlogit/draws.hpp"
#include "mixlogit/eval.hpp"
#include "mixlogit/stats.hpp"

namespace mixlogit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string rep_dir_name(int replication) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep_%03d", replication);
  return buf;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp(path + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::remove(target, ec);
  fs::rename(tmp, target);
}

const ScenarioConfig& require_scenario(const RunConfig& cfg) {
  if (!cfg.scenario) throw ConfigError("this command needs a [scenario] section");
  return *cfg.scenario;
}

std::string require_path(const std::optional<std::string>& p, const char* key) {
  if (!p) {
    throw ConfigError(std::string("this command needs [paths] ") + key);
  }
  return resolve_path(*p);
}

void simulate_one_replication(const ScenarioConfig& sc, int replication,
                              std::uint64_t base_seed,
                              const fs::path& out_dir) {
  ScenarioSpec train_spec = sc.base;
  train_spec.seed = base_seed + static_cast<std::uint64_t>(replication);

  ScenarioSpec val_spec = train_spec;
  val_spec.n_persons = sc.validation_persons;
  val_spec.n_tasks = sc.validation_tasks;
  val_spec.seed = RandomStream(train_spec.seed).fork(7).seed();

  const TrueTasteTable train_tastes = generate_tastes(train_spec);
  const ChoiceDataset train = generate_dataset(train_spec, train_tastes);
  const TrueTasteTable val_tastes = generate_tastes(val_spec);
  const ChoiceDataset validation = generate_dataset(val_spec, val_tastes);

  const fs::path tmp(out_dir.string() + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);

  write_csv(train, (tmp / "train.csv").string());
  write_csv(validation, (tmp / "validation.csv").string());
  write_tastes_csv(train_tastes, (tmp / "tastes_train.csv").string());
  write_tastes_csv(val_tastes, (tmp / "tastes_validation.csv").string());

  json meta;
  meta["scenario"] = to_string(sc.base.scenario);
  meta["n_persons"] = sc.base.n_persons;
  meta["n_tasks"] = sc.base.n_tasks;
  meta["n_alternatives"] = sc.base.n_alternatives;
  meta["attr_lo"] = sc.base.attr_lo;
  meta["attr_hi"] = sc.base.attr_hi;
  meta["validation_persons"] = sc.validation_persons;
  meta["validation_tasks"] = sc.validation_tasks;
  meta["replication"] = replication;
  meta["seed"] = train_spec.seed;
  {
    std::ofstream out(tmp / "meta.json");
    out << meta.dump(2) << "\n";
    if (!out) throw IoError("cannot write scenario metadata in '" +
                            out_dir.string() + "'");
  }

  fs::remove_all(out_dir, ec);
  fs::rename(tmp, out_dir);
}

}  // namespace

void cmd_simulate(const RunConfig& cfg, const CommandOptions& opts) {
  const ScenarioConfig& sc = require_scenario(cfg);
  const fs::path out_root(require_path(cfg.paths.output_dir, "output_dir"));
  const std::uint64_t base_seed = opts.seed.value_or(sc.base.seed);
  fs::create_directories(out_root);

  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1 || sc.replications == 1) {
    for (int r = 0; r < sc.replications; ++r) {
      simulate_one_replication(sc, r, base_seed, out_root / rep_dir_name(r));
    }
    return;
  }
  std::vector<std::exception_ptr> errors(sc.replications);
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  for (int w = 0; w < std::min(jobs, sc.replications); ++w) {
    workers.emplace_back([&]() {
      for (int r = next.fetch_add(1); r < sc.replications; r = next.fetch_add(1)) {
        try {
          simulate_one_replication(sc, r, base_seed, out_root / rep_dir_name(r));
        } catch (...) {
          errors[r] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void cmd_fit(const RunConfig& cfg, const CommandOptions& opts) {
  if (!cfg.utility) throw ConfigError("fit needs a [utility] section");
  if (!cfg.mixing) throw ConfigError("fit needs a [mixing] section");
  if (!cfg.mcmc) throw ConfigError("fit needs an [mcmc] section");

  std::string train_path;
  if (cfg.paths.train_csv) {
    train_path = resolve_path(*cfg.paths.train_csv);
  } else if (cfg.paths.data_dir) {
    train_path = (fs::path(resolve_path(*cfg.paths.data_dir)) / "train.csv").string();
  } else {
    throw ConfigError("fit needs [paths] train_csv or data_dir");
  }
  const std::string draws_dir = require_path(cfg.paths.draws_dir, "draws_dir");

  const ChoiceDataset data = load_csv(train_path);

  ModelSpec model;
  model.utility = cfg.utility->resolve(data.attribute_names);
  model.utility.check_against(data);
  model.mixing = cfg.mixing->resolve();
  model.hyper = cfg.hyperpriors.resolve(model.utility.n_params());

  MCMCConfig mcmc = *cfg.mcmc;
  if (opts.seed) mcmc.seed = *opts.seed;

  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorDraws draws = run_estimation(model, data, mcmc,
                                              hash_file(train_path), opts.jobs);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_draws(draws, draws_dir);

  // informational sidecar; not part of the deterministic draws payload
  json timing;
  timing["fit_seconds"] = seconds;
  atomic_write_text((fs::path(draws_dir) / "timing.json").string(),
                    timing.dump(2) + "\n");
}

namespace {

struct MetricRow {
  std::string metric;
  double value;
};

TasteSampler scenario_sampler_from_meta(const json& meta) {
  const Scenario scenario =
      scenario_from_string(meta.at("scenario").get<std::string>());
  return [scenario](RandomStream& rng) -> Eigen::VectorXd {
    return sample_scenario_taste(scenario, rng);
  };
}

}  // namespace

void cmd_evaluate(const RunConfig& cfg, const CommandOptions& opts) {
  (void)opts;
  const std::string draws_dir = require_path(cfg.paths.draws_dir, "draws_dir");
  const std::string metrics_path =
      require_path(cfg.paths.metrics_csv, "metrics_csv");

  std::string train_path, validation_path;
  std::optional<std::string> data_dir;
  if (cfg.paths.data_dir) {
    data_dir = resolve_path(*cfg.paths.data_dir);
    train_path = (fs::path(*data_dir) / "train.csv").string();
    validation_path = (fs::path(*data_dir) / "validation.csv").string();
  }
  if (cfg.paths.train_csv) train_path = resolve_path(*cfg.paths.train_csv);
  if (cfg.paths.validation_csv) {
    validation_path = resolve_path(*cfg.paths.validation_csv);
  }
  if (train_path.empty() || validation_path.empty()) {
    throw ConfigError("evaluate needs [paths] data_dir or train_csv + validation_csv");
  }

  const PosteriorDraws draws = load_draws(draws_dir);
  const ChoiceDataset train = load_csv(train_path);
  const ChoiceDataset validation = load_csv(validation_path);

  const UtilitySpec utility = cfg.utility
                                  ? cfg.utility->resolve(train.attribute_names)
                                  : draws.meta.utility;
  const MixingSpec mixing =
      cfg.mixing ? cfg.mixing->resolve() : draws.meta.mixing;

  RandomStream eval_rng(cfg.eval.seed);
  std::vector<MetricRow> rows;

  RandomStream pred_rng = eval_rng.fork(2);
  const PredictiveChoiceDistribution predictive = predictive_choice_distribution(
      draws, mixing, utility, validation, cfg.eval.n_taste_draws, pred_rng);

  // TVD against the simulated-truth oracle, when the sidecar is available
  if (data_dir && fs::exists(fs::path(*data_dir) / "tastes_validation.csv") &&
      fs::exists(fs::path(*data_dir) / "meta.json")) {
    std::ifstream in(fs::path(*data_dir) / "meta.json");
    const json meta = json::parse(in);
    const TasteSampler sampler = scenario_sampler_from_meta(meta);

    std::vector<Eigen::VectorXd> truth;
    RandomStream truth_rng = eval_rng.fork(1);
    int task_index = 0;
    for (const auto& person : validation.persons) {
      for (const auto& task : person.tasks) {
        RandomStream task_rng = truth_rng.fork(task_index++);
        truth.push_back(true_predictive_distribution(
            task.attributes, sampler, cfg.eval.truth_draws, task_rng));
      }
    }
    rows.push_back({"tvd_mean", tvd_mean(truth, predictive.task_probs)});
  } else {
    std::cerr << "warning: no true-taste sidecar; TVD omitted\n";
  }

  const WaicResult w = waic(draws, train);
  rows.push_back({"lppd_train", w.lppd});
  rows.push_back({"lppd_validation", lppd_validation(predictive, validation)});
  rows.push_back({"p_waic", w.p_waic});
  rows.push_back({"waic", w.waic});

  const fs::path timing_path = fs::path(draws_dir) / "timing.json";
  if (fs::exists(timing_path)) {
    std::ifstream in(timing_path);
    const json timing = json::parse(in);
    rows.push_back({"runtime_s", timing.at("fit_seconds").get<double>()});
  }

  if (cfg.eval.density_grid) {
    const std::string grid_path =
        cfg.paths.density_grid_csv
            ? resolve_path(*cfg.paths.density_grid_csv)
            : (fs::path(draws_dir) / "density_grid.csv").string();
    int dim = 0;
    for (const auto& b : draws.meta.blocks) {
      if (b.kind == draws.meta.mixing.kind && b.k == draws.meta.mixing.k) {
        dim = b.dim;
      }
    }
    const int g = cfg.eval.grid_points;
    Eigen::MatrixXd points;
    if (dim == 1) {
      points.resize(g, 1);
      for (int i = 0; i < g; ++i) {
        points(i, 0) = cfg.eval.grid_lo +
                       (cfg.eval.grid_hi - cfg.eval.grid_lo) * i / (g - 1.0);
      }
    } else if (dim == 2) {
      points.resize(g * g, 2);
      for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
          points(i * g + j, 0) = cfg.eval.grid_lo +
                                 (cfg.eval.grid_hi - cfg.eval.grid_lo) * i / (g - 1.0);
          points(i * g + j, 1) = cfg.eval.grid_lo +
                                 (cfg.eval.grid_hi - cfg.eval.grid_lo) * j / (g - 1.0);
        }
      }
    } else {
      throw ConfigError("density_grid emission supports 1-D and 2-D mixture blocks");
    }
    write_density_grid_csv(mixture_density_grid(draws, points), grid_path);
  }

  const std::string method = cfg.eval.method.value_or(to_string(mixing.kind));
  std::string csv = "method,replication,metric,value\n";
  for (const auto& row : rows) {
    csv += method + "," + std::to_string(cfg.eval.replication) + "," +
           row.metric + "," + format_value(row.value) + "\n";
  }
  atomic_write_text(metrics_path, csv);
}

void cmd_report(const RunConfig& cfg, const CommandOptions& opts) {
  (void)opts;
  const std::string metrics_dir =
      require_path(cfg.paths.metrics_dir, "metrics_dir");
  const std::string report_path =
      require_path(cfg.paths.report_csv, "report_csv");

  std::vector<fs::path> files;
  if (fs::is_directory(metrics_dir)) {
    for (const auto& entry : fs::directory_iterator(metrics_dir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("no metrics CSV files found in '" + metrics_dir + "'");
  }

  // (method, metric) -> values across replications
  std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open '" + file.string() + "'");
    std::string line;
    if (!std::getline(in, line)) continue;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      std::string method, replication, metric, value;
      std::getline(is, method, ',');
      std::getline(is, replication, ',');
      std::getline(is, metric, ',');
      std::getline(is, value, ',');
      cells[{method, metric}].push_back(std::stod(value));
    }
  }

  std::string csv = "method,metric,mean,std_err,n_replications\n";
  for (const auto& [key, values] : cells) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= n;
    std::string stderr_field;
    if (values.size() > 1) {
      double ss = 0.0;
      for (const double v : values) ss += (v - mean) * (v - mean);
      stderr_field = format_value(std::sqrt(ss / (n - 1.0) / n));
    }
    csv += key.first + "," + key.second + "," + format_value(mean) + "," +
           stderr_field + "," + std::to_string(values.size()) + "\n";
  }
  atomic_write_text(report_path, csv);

  if (cfg.paths.wtp_draws_dir) {
    const PosteriorDraws draws =
        load_draws(resolve_path(*cfg.paths.wtp_draws_dir));
    RandomStream rng(cfg.eval.seed);
    RandomStream table_rng = rng.fork(10);
    const HeterogeneitySummary summary =
        wtp_summary(draws, draws.meta.mixing, draws.meta.utility,
                    cfg.eval.n_taste_draws, table_rng);
    std::string table = "parameter,p10,p25,p50,p75,p90,mean,std_err\n";
    for (std::size_t p = 0; p < summary.param_names.size(); ++p) {
      table += summary.param_names[p];
      for (int q = 0; q < 5; ++q) {
        table += "," + format_value(summary.percentiles(static_cast<int>(p), q));
      }
      table += "," + format_value(summary.mean(static_cast<int>(p)));
      table += "," + format_value(summary.mean_std_err(static_cast<int>(p)));
      table += "\n";
    }
    const std::string table_path =
        cfg.paths.wtp_table_csv
            ? resolve_path(*cfg.paths.wtp_table_csv)
            : (fs::path(report_path).parent_path() / "wtp_percentiles.csv").string();
    atomic_write_text(table_path, table);

    if (cfg.paths.wtp_cdf_csv) {
      RandomStream cdf_rng = rng.fork(11);
      write_taste_cdf_csv(draws, cfg.eval.n_taste_draws, 101, cdf_rng,
                          resolve_path(*cfg.paths.wtp_cdf_csv));
    }
  }
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts) {
  try {
    const RunConfig cfg = RunConfig::load(config_path);
    if (command == "simulate") {
      cmd_simulate(cfg, opts);
    } else if (command == "fit") {
      cmd_fit(cfg, opts);
    } else if (command == "evaluate") {
      cmd_evaluate(cfg, opts);
    } else if (command == "report") {
      cmd_report(cfg, opts);
    } else {
      std::cerr << "error: unknown command '" << command << "'\n";
      return 2;
    }
    return 0;
  } catch (const ChainAbortError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SpecMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace mixlogit

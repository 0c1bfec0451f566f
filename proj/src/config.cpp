#include "mixlogit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mixlogit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Section = std::map<std::string, std::string>;
using Parsed = std::map<std::string, Section>;

Parsed parse_ini(const std::string& text, const std::string& origin) {
  Parsed parsed;
  std::istringstream in(text);
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw ConfigError("malformed section header at " + where);
      }
      section = trim(t.substr(1, t.size() - 2));
      parsed.try_emplace(section);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at " + where);
    }
    if (section.empty()) {
      throw ConfigError("key outside any [section] at " + where);
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at " + where);
    if (!parsed[section].emplace(key, value).second) {
      throw ConfigError("duplicate key '" + key + "' at " + where);
    }
  }
  return parsed;
}

// Typed access with schema enforcement: every key read is crossed off, and
// leftovers are rejected at the end of each section.
class SectionReader {
 public:
  SectionReader(const Parsed& parsed, const std::string& name)
      : name_(name) {
    const auto it = parsed.find(name);
    if (it != parsed.end()) {
      section_ = &it->second;
      present_ = true;
    }
  }

  bool present() const { return present_; }

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (!section_) return std::nullopt;
    const auto it = section_->find(key);
    if (it == section_->end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = get(key);
    if (!v) {
      throw ConfigError("[" + name_ + "] is missing required key '" + key + "'");
    }
    return *v;
  }

  double get_double(const std::string& key, double fallback) {
    const auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
  }

  long get_long(const std::string& key, long fallback) {
    const auto v = get(key);
    return v ? parse_long(*v, key) : fallback;
  }

  int get_int(const std::string& key, int fallback) {
    return static_cast<int>(get_long(key, fallback));
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    const auto v = get(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size()) {
      throw ConfigError("[" + name_ + "] " + key + ": expected an unsigned integer, got '" + *v + "'");
    }
    return out;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true/false, got '" + *v + "'");
  }

  std::vector<std::string> get_list(const std::string& key) {
    const auto v = get(key);
    std::vector<std::string> out;
    if (!v) return out;
    std::istringstream is(*v);
    std::string item;
    while (std::getline(is, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  double parse_double(const std::string& v, const std::string& key) const {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a number, got '" + v + "'");
    }
    return out;
  }

  long parse_long(const std::string& v, const std::string& key) const {
    long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError("[" + name_ + "] " + key + ": expected an integer, got '" + v + "'");
    }
    return out;
  }

  std::string name_;
  const Section* section_ = nullptr;
  bool present_ = false;
  std::set<std::string> seen_;
};

}  // namespace

UtilitySpec UtilityConfig::resolve(
    const std::vector<std::string>& attribute_names) const {
  auto index_of = [&](const std::string& name) {
    const auto it =
        std::find(attribute_names.begin(), attribute_names.end(), name);
    if (it == attribute_names.end()) {
      throw ConfigError("utility references attribute '" + name +
                        "' which is not a dataset column");
    }
    return static_cast<int>(it - attribute_names.begin());
  };
  if (variant == UtilityVariant::LinearPreference) {
    std::vector<int> idx;
    for (const auto& name : attributes) idx.push_back(index_of(name));
    return UtilitySpec::linear(std::move(idx));
  }
  std::vector<int> idx;
  for (const auto& name : non_price) idx.push_back(index_of(name));
  return UtilitySpec::wtp_space(index_of(mod_dummy), index_of(price),
                                std::move(idx));
}

MixingSpec MixingConfig::resolve() const {
  MixingSpec spec;
  spec.kind = kind;
  spec.dirichlet_alpha = dirichlet_alpha;
  switch (kind) {
    case MixingKind::MVN: spec.k = 1; break;
    case MixingKind::FMON: spec.k = k.value_or(2); break;
    case MixingKind::DPMON: spec.k = k.value_or(100); break;
  }
  if (kind == MixingKind::MVN && k && *k != 1) {
    throw ConfigError("mvn mixing does not accept k != 1");
  }
  spec.check();
  return spec;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse(text, path);
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  const Parsed parsed = parse_ini(text, origin);

  static const std::set<std::string> known_sections = {
      "scenario", "utility", "mixing", "hyperpriors", "mcmc", "eval", "paths"};
  for (const auto& [name, section] : parsed) {
    if (!known_sections.count(name)) {
      throw ConfigError("unknown section [" + name + "] in " + origin);
    }
  }

  RunConfig cfg;

  {
    SectionReader r(parsed, "scenario");
    if (r.present()) {
      ScenarioConfig sc;
      sc.base.scenario = scenario_from_string(r.require("name"));
      sc.base.n_persons = r.get_int("n_persons", 1000);
      sc.base.n_tasks = r.get_int("n_tasks", 8);
      sc.base.n_alternatives = r.get_int("n_alternatives", 5);
      sc.base.attr_lo = r.get_double("attr_lo", -5.0);
      sc.base.attr_hi = r.get_double("attr_hi", 5.0);
      sc.base.seed = r.get_u64("seed", 1);
      sc.replications = r.get_int("replications", 20);
      sc.validation_persons = r.get_int("validation_persons", 25);
      sc.validation_tasks = r.get_int("validation_tasks", 1);
      if (sc.replications < 1) {
        throw ConfigError("[scenario] replications must be >= 1");
      }
      sc.base.check();
      cfg.scenario = std::move(sc);
    }
    r.finish();
  }

  {
    SectionReader r(parsed, "utility");
    if (r.present()) {
      UtilityConfig uc;
      const std::string variant = r.require("variant");
      if (variant == "linear") {
        uc.variant = UtilityVariant::LinearPreference;
        uc.attributes = r.get_list("attributes");
        if (uc.attributes.empty()) {
          throw ConfigError("[utility] linear variant needs 'attributes'");
        }
      } else if (variant == "wtp_space") {
        uc.variant = UtilityVariant::WTPSpace;
        uc.mod_dummy = r.require("mod_dummy");
        uc.price = r.require("price");
        uc.non_price = r.get_list("non_price");
        if (uc.non_price.empty()) {
          throw ConfigError("[utility] wtp_space variant needs 'non_price'");
        }
      } else {
        throw ConfigError("[utility] variant must be 'linear' or 'wtp_space', got '" +
                          variant + "'");
      }
      cfg.utility = std::move(uc);
    }
    r.finish();
  }

  {
    SectionReader r(parsed, "mixing");
    if (r.present()) {
      MixingConfig mc;
      mc.kind = mixing_kind_from_string(r.require("kind"));
      if (const auto k = r.get("k")) {
        mc.k = static_cast<int>(std::stol(*k));
      }
      mc.dirichlet_alpha = r.get_double("dirichlet_alpha", 1.0);
      cfg.mixing = std::move(mc);
    }
    r.finish();
  }

  {
    SectionReader r(parsed, "hyperpriors");
    cfg.hyperpriors.mu0 = r.get_double("mu0", 0.0);
    cfg.hyperpriors.sigma0_scale = r.get_double("sigma0_scale", 100.0);
    cfg.hyperpriors.nu = r.get_double("nu", 2.0);
    cfg.hyperpriors.a_scale = r.get_double("a_scale", 1000.0);
    r.finish();
  }

  {
    SectionReader r(parsed, "mcmc");
    if (r.present()) {
      MCMCConfig mc;
      mc.n_chains = r.get_int("chains", 2);
      mc.n_iterations = r.get_long("iterations", 100000);
      mc.n_burnin = r.get_long("burnin", 50000);
      mc.thinning = r.get_int("thinning", 10);
      mc.rho0 = r.get_double("rho0", 0.1);
      mc.rho_increment = r.get_double("rho_increment", 0.001);
      mc.target_acceptance = r.get_double("target_acceptance", 0.3);
      mc.rho_min = r.get_double("rho_min", 1e-4);
      mc.freeze_after_burnin = r.get_bool("freeze_after_burnin", false);
      mc.seed = r.get_u64("seed", 1);
      mc.check();
      cfg.mcmc = mc;
    }
    r.finish();
  }

  {
    SectionReader r(parsed, "eval");
    cfg.eval.n_taste_draws = r.get_int("n_taste_draws", 2000);
    cfg.eval.truth_draws = r.get_int("truth_draws", 10000);
    cfg.eval.seed = r.get_u64("seed", 1);
    cfg.eval.replication = r.get_int("replication", 0);
    if (const auto m = r.get("method")) cfg.eval.method = *m;
    cfg.eval.density_grid = r.get_bool("density_grid", false);
    cfg.eval.grid_lo = r.get_double("grid_lo", -4.0);
    cfg.eval.grid_hi = r.get_double("grid_hi", 4.0);
    cfg.eval.grid_points = r.get_int("grid_points", 40);
    r.finish();
  }

  {
    SectionReader r(parsed, "paths");
    auto opt = [&](const char* key) { return r.get(key); };
    cfg.paths.output_dir = opt("output_dir");
    cfg.paths.train_csv = opt("train_csv");
    cfg.paths.validation_csv = opt("validation_csv");
    cfg.paths.data_dir = opt("data_dir");
    cfg.paths.draws_dir = opt("draws_dir");
    cfg.paths.metrics_csv = opt("metrics_csv");
    cfg.paths.metrics_dir = opt("metrics_dir");
    cfg.paths.report_csv = opt("report_csv");
    cfg.paths.wtp_draws_dir = opt("wtp_draws_dir");
    cfg.paths.wtp_table_csv = opt("wtp_table_csv");
    cfg.paths.wtp_cdf_csv = opt("wtp_cdf_csv");
    cfg.paths.density_grid_csv = opt("density_grid_csv");
    r.finish();
  }

  return cfg;
}

std::string resolve_path(const std::string& path) {
  const char* root = std::getenv("MIXLOGIT_OUTPUT_ROOT");
  if (!root || !*root) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(root) / p).string();
}

}  // namespace mixlogit

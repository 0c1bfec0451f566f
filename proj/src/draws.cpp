#include "mixlogit/draws.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace mixlogit {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<BlockInfo> block_infos(const std::vector<BlockState>& blocks) {
  std::vector<BlockInfo> infos;
  for (const auto& b : blocks) {
    infos.push_back(BlockInfo{b.block.name, b.block.offset, b.block.dim,
                              b.mixing.kind, b.mixing.k});
  }
  return infos;
}

DrawsLayout::DrawsLayout(std::vector<BlockInfo> blocks, int n_persons,
                         int total_dim)
    : blocks_(std::move(blocks)), n_persons_(n_persons), total_dim_(total_dim) {
  int col = 0;
  for (const auto& b : blocks_) {
    block_col0_.push_back(col);
    const int comp_stride = b.dim + b.dim * b.dim + b.dim;
    col += b.k * comp_stride + b.k;          // components then pi
    if (b.kind == MixingKind::DPMON) ++col;  // concentration
  }
  beta_col0_ = col;
  loglik_col_ = beta_col0_ + n_persons_ * total_dim_;
  n_columns_ = loglik_col_ + 1;
}

int DrawsLayout::zeta_col(int b, int comp) const {
  const int stride = blocks_[b].dim + blocks_[b].dim * blocks_[b].dim + blocks_[b].dim;
  return block_col0_[b] + comp * stride;
}

int DrawsLayout::omega_col(int b, int comp) const {
  return zeta_col(b, comp) + blocks_[b].dim;
}

int DrawsLayout::a_col(int b, int comp) const {
  return omega_col(b, comp) + blocks_[b].dim * blocks_[b].dim;
}

int DrawsLayout::pi_col(int b) const {
  const int stride = blocks_[b].dim + blocks_[b].dim * blocks_[b].dim + blocks_[b].dim;
  return block_col0_[b] + blocks_[b].k * stride;
}

int DrawsLayout::dp_alpha_col(int b) const {
  return blocks_[b].kind == MixingKind::DPMON ? pi_col(b) + blocks_[b].k : -1;
}

int DrawsLayout::beta_col(int person) const {
  return beta_col0_ + person * total_dim_;
}

std::vector<std::string> DrawsLayout::column_names(
    const std::vector<std::string>& person_ids) const {
  std::vector<std::string> names(n_columns_);
  for (int b = 0; b < n_blocks(); ++b) {
    const auto& info = blocks_[b];
    for (int k = 0; k < info.k; ++k) {
      const std::string prefix = info.name + ".k" + std::to_string(k) + ".";
      for (int r = 0; r < info.dim; ++r) {
        names[zeta_col(b, k) + r] = prefix + "zeta" + std::to_string(r);
      }
      for (int r = 0; r < info.dim; ++r) {
        for (int c = 0; c < info.dim; ++c) {
          names[omega_col(b, k) + r * info.dim + c] =
              prefix + "omega" + std::to_string(r) + "_" + std::to_string(c);
        }
      }
      for (int r = 0; r < info.dim; ++r) {
        names[a_col(b, k) + r] = prefix + "a" + std::to_string(r);
      }
    }
    for (int k = 0; k < info.k; ++k) {
      names[pi_col(b) + k] = info.name + ".pi" + std::to_string(k);
    }
    if (info.kind == MixingKind::DPMON) {
      names[dp_alpha_col(b)] = info.name + ".dp_alpha";
    }
  }
  for (int n = 0; n < n_persons_; ++n) {
    for (int r = 0; r < total_dim_; ++r) {
      names[beta_col(n) + r] =
          "beta." + person_ids.at(n) + "." + std::to_string(r);
    }
  }
  names[loglik_col_] = "loglik";
  return names;
}

Eigen::VectorXd DrawsLayout::project(const SamplerState& state) const {
  Eigen::VectorXd row(n_columns_);
  for (int b = 0; b < n_blocks(); ++b) {
    const auto& block = state.blocks[b];
    const int dim = block.block.dim;
    for (int k = 0; k < block.n_components(); ++k) {
      const auto& comp = block.comps[k];
      row.segment(zeta_col(b, k), dim) = comp.zeta;
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
          row(omega_col(b, k) + r * dim + c) = comp.omega.matrix()(r, c);
        }
      }
      row.segment(a_col(b, k), dim) = comp.a;
    }
    row.segment(pi_col(b), block.n_components()) = block.pi;
    if (dp_alpha_col(b) >= 0) row(dp_alpha_col(b)) = block.alpha_dp;
  }
  for (int n = 0; n < n_persons_; ++n) {
    row.segment(beta_col(n), total_dim_) = state.beta.row(n).transpose();
  }
  row(loglik_col_) = state.loglik.sum();
  return row;
}

long PosteriorDraws::total_retained() const {
  long total = 0;
  for (const auto& c : chains) total += c.retained.rows();
  return total;
}

PosteriorDraws run_estimation(const ModelSpec& model, const ChoiceDataset& data,
                              const MCMCConfig& config,
                              const std::string& dataset_hash, int jobs) {
  config.check();
  PosteriorDraws draws;
  draws.chains.resize(config.n_chains);

  RandomStream master(config.seed);
  if (jobs > 1 && config.n_chains > 1) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(config.n_chains);
    for (int c = 0; c < config.n_chains; ++c) {
      threads.emplace_back([&, c]() {
        try {
          draws.chains[c] = run_chain(model, data, config, master.fork(c));
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (int c = 0; c < config.n_chains; ++c) {
      draws.chains[c] = run_chain(model, data, config, master.fork(c));
    }
  }

  DrawsMeta meta;
  meta.blocks = block_infos(model.make_blocks(data.n_persons()));
  meta.n_persons = data.n_persons();
  meta.total_dim = model.utility.n_params();
  for (const auto& p : data.persons) meta.person_ids.push_back(p.person_id);
  meta.attribute_names = data.attribute_names;
  meta.utility = model.utility;
  meta.mixing = model.mixing;
  meta.hyper = model.hyper;
  meta.mcmc = config;
  meta.dataset_hash = dataset_hash;
  draws.meta = std::move(meta);
  return draws;
}

// --- json round-trip helpers -------------------------------------------------

namespace {

json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

json to_json(const UtilitySpec& spec) {
  json j;
  j["variant"] = spec.variant == UtilityVariant::LinearPreference
                     ? "linear" : "wtp_space";
  j["attribute_indices"] = spec.attribute_indices;
  j["mod_dummy_index"] = spec.mod_dummy_index;
  j["price_index"] = spec.price_index;
  j["non_price_indices"] = spec.non_price_indices;
  return j;
}

UtilitySpec utility_from_json(const json& j) {
  UtilitySpec spec;
  spec.variant = j.at("variant").get<std::string>() == "linear"
                     ? UtilityVariant::LinearPreference : UtilityVariant::WTPSpace;
  spec.attribute_indices = j.at("attribute_indices").get<std::vector<int>>();
  spec.mod_dummy_index = j.at("mod_dummy_index").get<int>();
  spec.price_index = j.at("price_index").get<int>();
  spec.non_price_indices = j.at("non_price_indices").get<std::vector<int>>();
  return spec;
}

json to_json(const MixingSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["k"] = spec.k;
  j["dirichlet_alpha"] = spec.dirichlet_alpha;
  j["dp_alpha_prior_shape"] = spec.dp_alpha_prior_shape;
  j["dp_alpha_prior_rate"] = spec.dp_alpha_prior_rate;
  return j;
}

MixingSpec mixing_from_json(const json& j) {
  MixingSpec spec;
  spec.kind = mixing_kind_from_string(j.at("kind").get<std::string>());
  spec.k = j.at("k").get<int>();
  spec.dirichlet_alpha = j.at("dirichlet_alpha").get<double>();
  spec.dp_alpha_prior_shape = j.at("dp_alpha_prior_shape").get<double>();
  spec.dp_alpha_prior_rate = j.at("dp_alpha_prior_rate").get<double>();
  return spec;
}

json to_json(const HyperPriors& h) {
  json j;
  j["mu0"] = to_json(h.mu0);
  j["sigma0"] = to_json(h.sigma0);
  j["nu"] = h.nu;
  j["a_scale"] = to_json(h.a_scale);
  return j;
}

HyperPriors hyper_from_json(const json& j) {
  HyperPriors h;
  h.mu0 = vector_from_json(j.at("mu0"));
  h.sigma0 = matrix_from_json(j.at("sigma0"));
  h.nu = j.at("nu").get<double>();
  h.a_scale = vector_from_json(j.at("a_scale"));
  return h;
}

json to_json(const MCMCConfig& c) {
  json j;
  j["n_chains"] = c.n_chains;
  j["n_iterations"] = c.n_iterations;
  j["n_burnin"] = c.n_burnin;
  j["thinning"] = c.thinning;
  j["rho0"] = c.rho0;
  j["rho_increment"] = c.rho_increment;
  j["target_acceptance"] = c.target_acceptance;
  j["rho_min"] = c.rho_min;
  j["freeze_after_burnin"] = c.freeze_after_burnin;
  j["seed"] = c.seed;
  return j;
}

MCMCConfig mcmc_from_json(const json& j) {
  MCMCConfig c;
  c.n_chains = j.at("n_chains").get<int>();
  c.n_iterations = j.at("n_iterations").get<long>();
  c.n_burnin = j.at("n_burnin").get<long>();
  c.thinning = j.at("thinning").get<int>();
  c.rho0 = j.at("rho0").get<double>();
  c.rho_increment = j.at("rho_increment").get<double>();
  c.target_acceptance = j.at("target_acceptance").get<double>();
  c.rho_min = j.at("rho_min").get<double>();
  c.freeze_after_burnin = j.at("freeze_after_burnin").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void write_matrix_binary(const RowMatrixXd& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RowMatrixXd read_matrix_binary(const fs::path& path, long rows, long cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  RowMatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * m.size())) {
    throw IoError("'" + path.string() + "' is truncated");
  }
  return m;
}

}  // namespace

void save_draws(const PosteriorDraws& draws, const std::string& dir) {
  const fs::path target(dir);
  const fs::path tmp(dir + ".tmp");
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);

  json meta;
  meta["format"] = "mixlogit-draws-v1";
  json blocks = json::array();
  for (const auto& b : draws.meta.blocks) {
    json jb;
    jb["name"] = b.name;
    jb["offset"] = b.offset;
    jb["dim"] = b.dim;
    jb["kind"] = to_string(b.kind);
    jb["k"] = b.k;
    blocks.push_back(std::move(jb));
  }
  meta["blocks"] = std::move(blocks);
  meta["n_persons"] = draws.meta.n_persons;
  meta["total_dim"] = draws.meta.total_dim;
  meta["person_ids"] = draws.meta.person_ids;
  meta["attribute_names"] = draws.meta.attribute_names;
  meta["utility"] = to_json(draws.meta.utility);
  meta["mixing"] = to_json(draws.meta.mixing);
  meta["hyperpriors"] = to_json(draws.meta.hyper);
  meta["mcmc"] = to_json(draws.meta.mcmc);
  meta["dataset_hash"] = draws.meta.dataset_hash;
  meta["n_chains"] = static_cast<int>(draws.chains.size());
  json retained = json::array();
  json iterations = json::array();
  for (const auto& c : draws.chains) {
    retained.push_back(c.retained.rows());
    iterations.push_back(c.loglik_trace.size());
  }
  meta["n_retained_per_chain"] = std::move(retained);
  meta["n_loglik_per_chain"] = std::move(iterations);
  meta["n_columns"] = draws.meta.layout().n_columns();
  meta["columns_file"] = "columns.txt";

  {
    std::ofstream out(tmp / "meta.json");
    if (!out) throw IoError("cannot write draws metadata in '" + dir + "'");
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(tmp / "columns.txt");
    for (const auto& name :
         draws.meta.layout().column_names(draws.meta.person_ids)) {
      out << name << "\n";
    }
    if (!out) throw IoError("cannot write column manifest in '" + dir + "'");
  }
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    write_matrix_binary(draws.chains[c].retained,
                        tmp / ("chain_" + std::to_string(c) + ".bin"));
    const auto& trace = draws.chains[c].loglik_trace;
    std::ofstream out(tmp / ("loglik_chain_" + std::to_string(c) + ".bin"),
                      std::ios::binary);
    out.write(reinterpret_cast<const char*>(trace.data()),
              static_cast<std::streamsize>(sizeof(double) * trace.size()));
    if (!out) throw IoError("cannot write log-likelihood trace in '" + dir + "'");
  }

  fs::remove_all(target, ec);
  fs::rename(tmp, target);
}

PosteriorDraws load_draws(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "meta.json");
  if (!in) throw IoError("cannot open draws metadata in '" + dir + "'");
  json meta = json::parse(in);
  if (meta.at("format").get<std::string>() != "mixlogit-draws-v1") {
    throw IoError("'" + dir + "' is not a mixlogit draws directory");
  }

  PosteriorDraws draws;
  for (const auto& jb : meta.at("blocks")) {
    draws.meta.blocks.push_back(BlockInfo{
        jb.at("name").get<std::string>(), jb.at("offset").get<int>(),
        jb.at("dim").get<int>(),
        mixing_kind_from_string(jb.at("kind").get<std::string>()),
        jb.at("k").get<int>()});
  }
  draws.meta.n_persons = meta.at("n_persons").get<int>();
  draws.meta.total_dim = meta.at("total_dim").get<int>();
  draws.meta.person_ids = meta.at("person_ids").get<std::vector<std::string>>();
  draws.meta.attribute_names =
      meta.at("attribute_names").get<std::vector<std::string>>();
  draws.meta.utility = utility_from_json(meta.at("utility"));
  draws.meta.mixing = mixing_from_json(meta.at("mixing"));
  draws.meta.hyper = hyper_from_json(meta.at("hyperpriors"));
  draws.meta.mcmc = mcmc_from_json(meta.at("mcmc"));
  draws.meta.dataset_hash = meta.at("dataset_hash").get<std::string>();

  const auto n_retained = meta.at("n_retained_per_chain").get<std::vector<long>>();
  const auto n_iters = meta.at("n_loglik_per_chain").get<std::vector<long>>();
  const long n_cols = meta.at("n_columns").get<long>();
  for (std::size_t c = 0; c < n_retained.size(); ++c) {
    ChainDraws chain;
    chain.retained = read_matrix_binary(
        root / ("chain_" + std::to_string(c) + ".bin"), n_retained[c], n_cols);
    chain.loglik_trace.resize(n_iters[c]);
    std::ifstream tin(root / ("loglik_chain_" + std::to_string(c) + ".bin"),
                      std::ios::binary);
    if (!tin) throw IoError("missing log-likelihood trace in '" + dir + "'");
    tin.read(reinterpret_cast<char*>(chain.loglik_trace.data()),
             static_cast<std::streamsize>(sizeof(double) * n_iters[c]));
    if (tin.gcount() !=
        static_cast<std::streamsize>(sizeof(double) * n_iters[c])) {
      throw IoError("log-likelihood trace truncated in '" + dir + "'");
    }
    draws.chains.push_back(std::move(chain));
  }
  return draws;
}

std::string fnv1a_hex(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a:") + buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes.data(), bytes.size());
}

}  // namespace mixlogit

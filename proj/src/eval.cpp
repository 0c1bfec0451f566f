#include "mixlogit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mixlogit/stats.hpp"
#include "mixlogit/utility.hpp"

namespace mixlogit {

namespace {

bool same_utility(const UtilitySpec& a, const UtilitySpec& b) {
  return a.variant == b.variant && a.attribute_indices == b.attribute_indices &&
         a.mod_dummy_index == b.mod_dummy_index &&
         a.price_index == b.price_index &&
         a.non_price_indices == b.non_price_indices;
}

bool same_mixing(const MixingSpec& a, const MixingSpec& b) {
  return a.kind == b.kind && a.k == b.k;
}

std::vector<const ChoiceTask*> enumerate_tasks(const ChoiceDataset& ds) {
  std::vector<const ChoiceTask*> tasks;
  for (const auto& p : ds.persons) {
    for (const auto& t : p.tasks) tasks.push_back(&t);
  }
  return tasks;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

BlockMixture block_mixture_at(const PosteriorDraws& draws,
                              const DrawsLayout& layout,
                              const Eigen::VectorXd& row, int block) {
  const BlockInfo& info = draws.meta.blocks[block];
  BlockMixture mix;
  for (int k = 0; k < info.k; ++k) {
    mix.zeta.push_back(row.segment(layout.zeta_col(block, k), info.dim));
    Eigen::MatrixXd omega(info.dim, info.dim);
    for (int r = 0; r < info.dim; ++r) {
      for (int c = 0; c < info.dim; ++c) {
        omega(r, c) = row(layout.omega_col(block, k) + r * info.dim + c);
      }
    }
    mix.omega.emplace_back(omega, "stored Omega");
  }
  mix.pi = row.segment(layout.pi_col(block), info.k);
  return mix;
}

Eigen::VectorXd simulate_taste(const std::vector<BlockMixture>& blocks,
                               const std::vector<BlockInfo>& infos,
                               int total_dim, RandomStream& rng) {
  Eigen::VectorXd taste(total_dim);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    int comp = 0;
    if (infos[b].k > 1) {
      const double u = rng.uniform();
      double cum = 0.0;
      comp = infos[b].k - 1;
      for (int k = 0; k < infos[b].k; ++k) {
        cum += blocks[b].pi(k);
        if (u <= cum) {
          comp = k;
          break;
        }
      }
    }
    taste.segment(infos[b].offset, infos[b].dim) =
        sample_mvn(blocks[b].zeta[comp], blocks[b].omega[comp], rng);
  }
  return taste;
}

PredictiveChoiceDistribution predictive_choice_distribution(
    const PosteriorDraws& draws, const MixingSpec& mixing,
    const UtilitySpec& utility, const ChoiceDataset& validation,
    int n_taste_draws, RandomStream& rng) {
  if (draws.total_retained() == 0) {
    throw InsufficientDrawsError("no retained draws");
  }
  if (!same_utility(utility, draws.meta.utility)) {
    throw SpecMismatchError("utility spec differs from the draws metadata");
  }
  if (!same_mixing(mixing, draws.meta.mixing)) {
    throw SpecMismatchError("mixing spec differs from the draws metadata");
  }
  if (n_taste_draws < 1) throw DomainError("n_taste_draws must be >= 1");

  const DrawsLayout layout = draws.meta.layout();
  const auto tasks = enumerate_tasks(validation);
  const long s_total = draws.total_retained();
  const int per_draw = static_cast<int>((n_taste_draws + s_total - 1) / s_total);

  std::vector<Eigen::VectorXd> acc(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    acc[t] = Eigen::VectorXd::Zero(tasks[t]->n_alternatives());
  }

  long n_sim = 0;
  for (const auto& chain : draws.chains) {
    for (Eigen::Index s = 0; s < chain.retained.rows(); ++s) {
      const Eigen::VectorXd row = chain.retained.row(s).transpose();
      std::vector<BlockMixture> mixtures;
      for (std::size_t b = 0; b < draws.meta.blocks.size(); ++b) {
        mixtures.push_back(
            block_mixture_at(draws, layout, row, static_cast<int>(b)));
      }
      for (int m = 0; m < per_draw; ++m) {
        const Eigen::VectorXd taste = simulate_taste(
            mixtures, draws.meta.blocks, draws.meta.total_dim, rng);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          acc[t] += mnl_probabilities(utility, taste, *tasks[t]);
        }
        ++n_sim;
      }
    }
  }

  PredictiveChoiceDistribution out;
  out.n_posterior_draws = s_total;
  out.n_taste_draws_per_posterior_draw = per_draw;
  for (auto& probs : acc) {
    probs /= static_cast<double>(n_sim);
    const Eigen::Index j = probs.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < j; ++i) s += probs(i);
    probs(j - 1) = std::max(0.0, 1.0 - std::min(s, 1.0));
    out.task_probs.push_back(std::move(probs));
  }
  return out;
}

double tvd(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw ShapeError("tvd: simplices have sizes " + std::to_string(p.size()) +
                     " and " + std::to_string(q.size()));
  }
  return 0.5 * (p - q).cwiseAbs().sum();
}

double tvd_mean(const std::vector<Eigen::VectorXd>& p,
                const std::vector<Eigen::VectorXd>& q) {
  if (p.size() != q.size() || p.empty()) {
    throw ShapeError("tvd_mean: need matching non-empty task lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += tvd(p[i], q[i]);
  return total / static_cast<double>(p.size());
}

namespace {

// Pointwise log-likelihood over retained draws for one (person, task):
// visits every chain row and evaluates the stored person parameters.
template <typename F>
void for_each_pointwise(const PosteriorDraws& draws, const ChoiceDataset& data,
                        F&& consume) {
  const DrawsLayout layout = draws.meta.layout();
  const long s_total = draws.total_retained();
  Eigen::VectorXd values(s_total);
  for (int n = 0; n < data.n_persons(); ++n) {
    for (const auto& task : data.persons[n].tasks) {
      long s = 0;
      for (const auto& chain : draws.chains) {
        for (Eigen::Index r = 0; r < chain.retained.rows(); ++r) {
          const Eigen::VectorXd params =
              chain.retained.row(r)
                  .segment(layout.beta_col(n), draws.meta.total_dim)
                  .transpose();
          const Eigen::VectorXd probs =
              mnl_probabilities(draws.meta.utility, params, task);
          values(s++) = std::log(std::max(probs(task.chosen), 1e-300));
        }
      }
      consume(values);
    }
  }
}

}  // namespace

double lppd_train(const PosteriorDraws& draws, const ChoiceDataset& data) {
  if (draws.total_retained() < 1) {
    throw InsufficientDrawsError("lppd_train needs at least one retained draw");
  }
  if (data.n_persons() != draws.meta.n_persons) {
    throw SpecMismatchError("dataset person count differs from draws metadata");
  }
  const double log_s = std::log(static_cast<double>(draws.total_retained()));
  double total = 0.0;
  for_each_pointwise(draws, data, [&](const Eigen::VectorXd& values) {
    total += log_sum_exp(values) - log_s;
  });
  return total;
}

double lppd_validation(const PredictiveChoiceDistribution& predictive,
                       const ChoiceDataset& validation) {
  const auto tasks = enumerate_tasks(validation);
  if (tasks.size() != predictive.task_probs.size()) {
    throw CoverageError("predictive distribution covers " +
                        std::to_string(predictive.task_probs.size()) +
                        " tasks, dataset has " + std::to_string(tasks.size()));
  }
  double total = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (predictive.task_probs[t].size() != tasks[t]->n_alternatives()) {
      throw CoverageError("task " + std::to_string(t) +
                          " has a mismatched alternative count");
    }
    total += std::log(
        std::max(predictive.task_probs[t](tasks[t]->chosen), 1e-300));
  }
  return total;
}

WaicResult waic(const PosteriorDraws& draws, const ChoiceDataset& data) {
  const long s_total = draws.total_retained();
  if (s_total < 2) {
    throw InsufficientDrawsError("waic needs at least 2 retained draws, have " +
                                 std::to_string(s_total));
  }
  if (data.n_persons() != draws.meta.n_persons) {
    throw SpecMismatchError("dataset person count differs from draws metadata");
  }
  const double log_s = std::log(static_cast<double>(s_total));
  WaicResult out;
  for_each_pointwise(draws, data, [&](const Eigen::VectorXd& values) {
    out.lppd += log_sum_exp(values) - log_s;
    const double mean = values.mean();
    out.p_waic += (values.array() - mean).square().sum() /
                  (static_cast<double>(s_total) - 1.0);
  });
  out.waic = -2.0 * (out.lppd - out.p_waic);
  return out;
}

DensityGridSummary mixture_density_grid(const PosteriorDraws& draws,
                                        const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw ShapeError("mixture_density_grid: empty grid");
  const DrawsLayout layout = draws.meta.layout();
  // the semi-parametric block is the one carrying the configured mixing
  int block = 0;
  for (std::size_t b = 0; b < draws.meta.blocks.size(); ++b) {
    if (draws.meta.blocks[b].kind == draws.meta.mixing.kind &&
        draws.meta.blocks[b].k == draws.meta.mixing.k) {
      block = static_cast<int>(b);
      break;
    }
  }
  const BlockInfo& info = draws.meta.blocks[block];
  if (points.cols() != info.dim) {
    throw ShapeError("grid points are " + std::to_string(points.cols()) +
                     "-dimensional, block '" + info.name + "' is " +
                     std::to_string(info.dim) + "-dimensional");
  }

  const long s_total = draws.total_retained();
  Eigen::MatrixXd density(points.rows(), s_total);
  long s = 0;
  for (const auto& chain : draws.chains) {
    for (Eigen::Index r = 0; r < chain.retained.rows(); ++r) {
      const Eigen::VectorXd row = chain.retained.row(r).transpose();
      const BlockMixture mix = block_mixture_at(draws, layout, row, block);
      for (Eigen::Index p = 0; p < points.rows(); ++p) {
        double f = 0.0;
        for (int k = 0; k < info.k; ++k) {
          if (mix.pi(k) <= 0.0) continue;
          f += mix.pi(k) * std::exp(log_density_mvn(points.row(p).transpose(),
                                                    mix.zeta[k], mix.omega[k]));
        }
        density(p, s) = f;
      }
      ++s;
    }
  }

  DensityGridSummary out;
  out.points = points;
  out.mean = density.rowwise().mean();
  out.lower.resize(points.rows());
  out.upper.resize(points.rows());
  std::vector<double> buffer(s_total);
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    for (long i = 0; i < s_total; ++i) buffer[i] = density(p, i);
    std::sort(buffer.begin(), buffer.end());
    out.lower(p) = quantile_sorted(buffer, 0.05);
    out.upper(p) = quantile_sorted(buffer, 0.95);
  }
  return out;
}

namespace {

// Pooled simulated tastes plus per-posterior-draw means, shared by
// wtp_summary and the CDF writer.
struct SimulatedTastes {
  Eigen::MatrixXd pooled;     // n_sim x total_dim
  Eigen::MatrixXd draw_mean;  // s_total x total_dim
};

SimulatedTastes simulate_tastes(const PosteriorDraws& draws, int n_taste_draws,
                                RandomStream& rng) {
  const DrawsLayout layout = draws.meta.layout();
  const long s_total = draws.total_retained();
  if (s_total == 0) throw InsufficientDrawsError("no retained draws");
  const int per_draw =
      std::max(1, static_cast<int>((n_taste_draws + s_total - 1) / s_total));

  SimulatedTastes out;
  out.pooled.resize(s_total * per_draw, draws.meta.total_dim);
  out.draw_mean.resize(s_total, draws.meta.total_dim);
  long row_idx = 0, s = 0;
  for (const auto& chain : draws.chains) {
    for (Eigen::Index r = 0; r < chain.retained.rows(); ++r) {
      const Eigen::VectorXd row = chain.retained.row(r).transpose();
      std::vector<BlockMixture> mixtures;
      for (std::size_t b = 0; b < draws.meta.blocks.size(); ++b) {
        mixtures.push_back(
            block_mixture_at(draws, layout, row, static_cast<int>(b)));
      }
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(draws.meta.total_dim);
      for (int m = 0; m < per_draw; ++m) {
        const Eigen::VectorXd taste = simulate_taste(
            mixtures, draws.meta.blocks, draws.meta.total_dim, rng);
        out.pooled.row(row_idx++) = taste.transpose();
        mean += taste;
      }
      out.draw_mean.row(s++) = (mean / per_draw).transpose();
    }
  }
  return out;
}

}  // namespace

HeterogeneitySummary wtp_summary(const PosteriorDraws& draws,
                                 const MixingSpec& mixing,
                                 const UtilitySpec& utility, int n_taste_draws,
                                 RandomStream& rng) {
  if (utility.variant != UtilityVariant::WTPSpace ||
      draws.meta.utility.variant != UtilityVariant::WTPSpace) {
    throw SpecMismatchError("wtp_summary requires a WTP-space fit");
  }
  if (!same_mixing(mixing, draws.meta.mixing)) {
    throw SpecMismatchError("mixing spec differs from the draws metadata");
  }

  const SimulatedTastes sim = simulate_tastes(draws, n_taste_draws, rng);
  const int n_params = draws.meta.total_dim;
  const double qs[5] = {0.10, 0.25, 0.50, 0.75, 0.90};

  HeterogeneitySummary out;
  out.param_names = utility.param_names(draws.meta.attribute_names);
  out.percentiles.resize(n_params, 5);
  out.mean.resize(n_params);
  out.mean_std_err.resize(n_params);
  std::vector<double> column(sim.pooled.rows());
  for (int p = 0; p < n_params; ++p) {
    for (Eigen::Index i = 0; i < sim.pooled.rows(); ++i) {
      column[i] = sim.pooled(i, p);
    }
    std::sort(column.begin(), column.end());
    for (int q = 0; q < 5; ++q) {
      out.percentiles(p, q) = quantile_sorted(column, qs[q]);
    }
    out.mean(p) = sim.pooled.col(p).mean();
    const Eigen::VectorXd means = sim.draw_mean.col(p);
    const double m = means.mean();
    const long s_total = means.size();
    out.mean_std_err(p) =
        s_total > 1 ? std::sqrt((means.array() - m).square().sum() /
                                (static_cast<double>(s_total) - 1.0))
                    : 0.0;
  }
  return out;
}

void write_density_grid_csv(const DensityGridSummary& grid,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (Eigen::Index c = 0; c < grid.points.cols(); ++c) {
    out << "x" << (c + 1) << ",";
  }
  out << "density_mean,density_q05,density_q95\n";
  char buf[40];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    out << buf << sep;
  };
  for (Eigen::Index p = 0; p < grid.points.rows(); ++p) {
    for (Eigen::Index c = 0; c < grid.points.cols(); ++c) {
      put(grid.points(p, c), ',');
    }
    put(grid.mean(p), ',');
    put(grid.lower(p), ',');
    std::snprintf(buf, sizeof(buf), "%.10g", grid.upper(p));
    out << buf << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_taste_cdf_csv(const PosteriorDraws& draws, int n_taste_draws,
                         int n_grid, RandomStream& rng,
                         const std::string& path) {
  const SimulatedTastes sim = simulate_tastes(draws, n_taste_draws, rng);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "parameter,value,cdf\n";

  std::vector<std::string> names(draws.meta.total_dim);
  const auto labels =
      draws.meta.utility.param_names(draws.meta.attribute_names);
  for (int p = 0; p < draws.meta.total_dim; ++p) names[p] = labels.at(p);

  std::vector<double> column(sim.pooled.rows());
  char buf[40];
  for (int p = 0; p < draws.meta.total_dim; ++p) {
    for (Eigen::Index i = 0; i < sim.pooled.rows(); ++i) {
      column[i] = sim.pooled(i, p);
    }
    std::sort(column.begin(), column.end());
    for (int g = 0; g < n_grid; ++g) {
      const double q = (g + 0.5) / n_grid;
      const double v = quantile_sorted(column, q);
      out << names[p] << ",";
      std::snprintf(buf, sizeof(buf), "%.10g", v);
      out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.6g", q);
      out << buf << "\n";
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace mixlogit

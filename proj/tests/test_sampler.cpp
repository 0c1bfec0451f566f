#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "mixlogit/draws.hpp"
#include "mixlogit/sampler.hpp"
#include "mixlogit/synthetic.hpp"
#include "oracles.hpp"

using namespace mixlogit;

namespace {

HyperPriors iso_hyper(int dim, double sigma0 = 100.0, double nu = 2.0,
                      double a_scale = 1.0) {
  return HyperPriors::isotropic(dim, 0.0, sigma0, nu, a_scale);
}

BlockState make_block(int dim, const MixingSpec& mixing,
                      const HyperPriors& hyper, int n_persons) {
  BlockState block;
  block.block = ParamBlock{"taste", 0, dim, true};
  block.mixing = mixing;
  block.hyper = hyper;
  for (int k = 0; k < mixing.k; ++k) {
    block.comps.push_back(MixtureComponent{Eigen::VectorXd::Zero(dim),
                                           CovMatrix::identity(dim),
                                           Eigen::VectorXd::Ones(dim)});
  }
  block.pi = Eigen::VectorXd::Constant(mixing.k, 1.0 / mixing.k);
  block.eta = Eigen::VectorXd::Zero(mixing.k);
  for (int i = 0; i < mixing.k; ++i) block.eta(i) = 1.0 / (mixing.k - i);
  block.alpha_dp = 1.0;
  block.assign.assign(n_persons, 0);
  return block;
}

// dataset whose attributes are all zero: every choice probability is uniform
// regardless of the parameters, so the likelihood term of the MH ratio drops
ChoiceDataset flat_dataset(int n_persons, int n_tasks, int n_alts, int n_attrs) {
  ChoiceDataset ds;
  for (int a = 0; a < n_attrs; ++a) {
    ds.attribute_names.push_back("x" + std::to_string(a + 1));
  }
  for (int p = 0; p < n_persons; ++p) {
    PersonRecord person;
    person.person_id = "p" + std::to_string(p + 1);
    for (int t = 0; t < n_tasks; ++t) {
      ChoiceTask task;
      task.task_id = "t" + std::to_string(t + 1);
      task.attributes = Eigen::MatrixXd::Zero(n_alts, n_attrs);
      task.available.assign(n_alts, 1);
      for (int j = 0; j < n_alts; ++j) task.alt_ids.push_back(std::to_string(j));
      task.chosen = 0;
      person.tasks.push_back(std::move(task));
    }
    ds.persons.push_back(std::move(person));
  }
  return ds;
}

double exact_simplex_sum(const Eigen::VectorXd& pi) {
  return std::accumulate(pi.data(), pi.data() + pi.size(), 0.0);
}

}  // namespace

TEST_CASE("update_zeta") {
  RandomStream rng(101);

  SUBCASE("empty component draws from the prior") {
    HyperPriors h = iso_hyper(1, 2.0);
    h.mu0(0) = 0.3;
    BlockState block = make_block(1, MixingSpec::fmon(2), h, 10);
    // everyone in component 0; component 1 stays empty
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(10, 1);
    std::vector<double> draws;
    for (int s = 0; s < 30000; ++s) {
      update_zeta(block, beta, rng);
      draws.push_back(block.comps[1].zeta(0));
    }
    CHECK(oracles::ks_statistic(draws, [&](double x) {
            return oracles::normal_cdf(x, 0.3, std::sqrt(2.0));
          }) < oracles::ks_critical(0.01, draws.size()));
  }

  SUBCASE("diffuse prior: posterior mean equals the sample mean of beta") {
    BlockState block = make_block(1, MixingSpec::mvn(), iso_hyper(1, 1e6), 1000);
    Eigen::MatrixXd beta(1000, 1);
    RandomStream gen(5);
    for (int n = 0; n < 1000; ++n) beta(n, 0) = gen.uniform(-2.0, 4.0);
    const double target = beta.col(0).mean();
    double acc = 0.0;
    const int s_total = 10000;
    for (int s = 0; s < s_total; ++s) {
      update_zeta(block, beta, rng);
      acc += block.comps[0].zeta(0);
    }
    CHECK(std::abs(acc / s_total - target) < 0.002);
  }

  SUBCASE("1-D conditional matches the grid-normalized density") {
    HyperPriors h = iso_hyper(1, 2.0);
    h.mu0(0) = 0.3;
    BlockState block = make_block(1, MixingSpec::mvn(), h, 5);
    Eigen::MatrixXd beta(5, 1);
    beta << 0.9, 1.4, -0.2, 0.7, 1.1;
    block.comps[0].omega = CovMatrix(0.6 * Eigen::MatrixXd::Identity(1, 1));

    auto log_cond = [&](double z) {
      double v = -0.5 * (z - 0.3) * (z - 0.3) / 2.0;
      for (int n = 0; n < 5; ++n) {
        v += -0.5 * (beta(n, 0) - z) * (beta(n, 0) - z) / 0.6;
      }
      return v;
    };
    const double lo = -1.5, hi = 3.0;
    const int bins = 40;
    const double z_norm = oracles::integrate(
        [&](double z) { return std::exp(log_cond(z)); }, lo - 2.0, hi + 2.0, 20000);
    std::vector<double> expected(bins);
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * (hi - lo) / bins;
      expected[b] = oracles::integrate(
          [&](double z) { return std::exp(log_cond(z)); }, a,
          a + (hi - lo) / bins, 64) / z_norm;
    }
    const int s_total = 100000;
    std::vector<double> observed(bins, 0.0);
    int inside = 0;
    for (int s = 0; s < s_total; ++s) {
      update_zeta(block, beta, rng);
      const double z = block.comps[0].zeta(0);
      if (z >= lo && z < hi) {
        observed[static_cast<int>((z - lo) / (hi - lo) * bins)] += 1.0;
        ++inside;
      }
    }
    CHECK(inside > s_total * 0.999);
    CHECK(oracles::chi2_gof_pvalue(observed, expected, s_total) > 0.01);
  }
}

TEST_CASE("update_a matches the stated Gamma conditional") {
  RandomStream rng(111);
  BlockState block = make_block(1, MixingSpec::mvn(), iso_hyper(1, 100.0, 2.0, 1.0), 1);
  // Omega = [[1]]: a | rest ~ Gamma((nu+R)/2 = 1.5, rate 1/A^2 + nu = 3)
  std::vector<double> draws;
  double acc = 0.0;
  for (int s = 0; s < 100000; ++s) {
    update_a(block, rng);
    draws.push_back(block.comps[0].a(0));
    acc += draws.back();
  }
  CHECK(std::abs(acc / draws.size() - 0.5) < 0.01);
  boost::math::gamma_distribution<double> g(1.5, 1.0 / 3.0);
  CHECK(oracles::ks_statistic(draws, [&](double x) {
          return boost::math::cdf(g, x);
        }) < oracles::ks_critical(0.01, draws.size()));
}

TEST_CASE("update_omega") {
  RandomStream rng(121);

  SUBCASE("empty component draws from the half-t prior's IW stage") {
    // c=0, R=1, nu=2, a=1: Omega ~ IW(2, 4), so 1/Omega ~ Gamma(1, rate 2)
    BlockState block = make_block(1, MixingSpec::fmon(2), iso_hyper(1), 4);
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(4, 1);
    std::vector<double> inv_draws;
    for (int s = 0; s < 50000; ++s) {
      update_omega(block, beta, rng);
      inv_draws.push_back(1.0 / block.comps[1].omega.matrix()(0, 0));
    }
    boost::math::gamma_distribution<double> g(1.0, 0.5);
    CHECK(oracles::ks_statistic(inv_draws, [&](double x) {
            return boost::math::cdf(g, x);
          }) < oracles::ks_critical(0.01, inv_draws.size()));
  }

  SUBCASE("populated component matches the analytic IW mean within 5%") {
    const int c = 20;
    BlockState block = make_block(1, MixingSpec::mvn(), iso_hyper(1), c);
    Eigen::MatrixXd beta(c, 1);
    RandomStream gen(9);
    for (int n = 0; n < c; ++n) beta(n, 0) = 0.4 + gen.uniform(-1.0, 1.0);
    block.comps[0].zeta(0) = 0.4;
    block.comps[0].a(0) = 0.7;

    double scatter = 0.0;
    for (int n = 0; n < c; ++n) {
      scatter += (beta(n, 0) - 0.4) * (beta(n, 0) - 0.4);
    }
    const double scale = 2.0 * 2.0 * 0.7 + scatter;
    const double df = 2.0 + c + 1 - 1;  // nu + c + R - 1
    const double analytic_mean = scale / (df - 1.0 - 1.0);

    double acc = 0.0;
    const int s_total = 100000;
    for (int s = 0; s < s_total; ++s) {
      // pin a so only the omega draw varies
      block.comps[0].a(0) = 0.7;
      update_omega(block, beta, rng);
      acc += block.comps[0].omega.matrix()(0, 0);
    }
    CHECK(std::abs(acc / s_total - analytic_mean) < 0.05 * analytic_mean);
  }
}

TEST_CASE("update_pi_finite") {
  RandomStream rng(131);

  SUBCASE("no data and alpha=1 gives the uniform Dirichlet") {
    BlockState block = make_block(1, MixingSpec::fmon(3), iso_hyper(1), 3);
    block.assign = {0, 1, 2};  // c = (1,1,1) -> Dirichlet(2,2,2)? keep c=0 instead
    BlockState empty = make_block(1, MixingSpec::fmon(3), iso_hyper(1), 0);
    std::vector<double> first;
    for (int s = 0; s < 50000; ++s) {
      update_pi_finite(empty, rng);
      first.push_back(empty.pi(0));
      CHECK(exact_simplex_sum(empty.pi) == 1.0);
    }
    // pi_1 ~ Beta(1, K-1) under Dirichlet(1,1,1)
    CHECK(oracles::ks_statistic(first, [](double x) {
            return oracles::beta_1_alpha_cdf(x, 2.0);
          }) < oracles::ks_critical(0.01, first.size()));
  }

  SUBCASE("counts shift the mean to (alpha + c_k) / (K alpha + N)") {
    BlockState block = make_block(1, MixingSpec::fmon(2), iso_hyper(1), 100);
    block.assign.assign(100, 0);  // c = (100, 0)
    double acc = 0.0;
    const int s_total = 100000;
    for (int s = 0; s < s_total; ++s) {
      update_pi_finite(block, rng);
      acc += block.pi(0);
    }
    CHECK(std::abs(acc / s_total - 101.0 / 102.0) < 0.002);
  }
}

TEST_CASE("update_assignments") {
  RandomStream rng(141);

  SUBCASE("identical components: responsibilities equal the weights") {
    const int n = 100000;
    BlockState block = make_block(1, MixingSpec::fmon(2), iso_hyper(1), n);
    block.pi << 0.3, 0.7;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(n, 1, 0.5);
    update_assignments(block, beta, rng);
    const auto counts = component_counts(block);
    CHECK(std::abs(counts[1] / static_cast<double>(n) - 0.7) < 0.005);
  }

  SUBCASE("well-separated components grab their own points") {
    const int n = 20000;
    BlockState block = make_block(1, MixingSpec::fmon(2), iso_hyper(1), n);
    block.comps[0].zeta(0) = 0.0;
    block.comps[1].zeta(0) = 10.0;
    block.pi << 0.5, 0.5;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(n, 1);  // all at zeta_0
    update_assignments(block, beta, rng);
    const auto counts = component_counts(block);
    CHECK(counts[0] >= static_cast<int>(0.999 * n));
  }

  SUBCASE("label permutation permutes assignment fractions") {
    const int n = 50000;
    Eigen::MatrixXd beta(n, 1);
    RandomStream gen(3);
    for (int i = 0; i < n; ++i) {
      beta(i, 0) = (i % 2 == 0) ? gen.uniform(-0.5, 0.5) : gen.uniform(2.5, 3.5);
    }
    auto run = [&](bool swapped) {
      BlockState block = make_block(1, MixingSpec::fmon(2), iso_hyper(1), n);
      const double mu[2] = {0.0, 3.0};
      for (int k = 0; k < 2; ++k) {
        block.comps[k].zeta(0) = mu[swapped ? 1 - k : k];
      }
      block.pi << (swapped ? 0.6 : 0.4), (swapped ? 0.4 : 0.6);
      RandomStream local(77);
      update_assignments(block, beta, local);
      return component_counts(block);
    };
    const auto base = run(false);
    const auto perm = run(true);
    CHECK(std::abs(base[0] - perm[1]) < 0.01 * n);
    CHECK(std::abs(base[1] - perm[0]) < 0.01 * n);
  }
}

TEST_CASE("update_alpha_dp") {
  RandomStream rng(151);

  SUBCASE("vanishing sticks: Gamma(2 + K - 1, 2), mean (K+1)/2") {
    BlockState block = make_block(1, MixingSpec::dpmon(100), iso_hyper(1), 1);
    block.eta.setConstant(1e-18);
    double acc = 0.0;
    const int s_total = 10000;
    for (int s = 0; s < s_total; ++s) {
      update_alpha_dp(block, rng);
      acc += block.alpha_dp;
    }
    CHECK(std::abs(acc / s_total - 50.5) < 0.3);
  }

  SUBCASE("self-consistency: sticks from Beta(1,2) concentrate alpha near 2") {
    BlockState block = make_block(1, MixingSpec::dpmon(100), iso_hyper(1), 1);
    double acc = 0.0;
    const int s_total = 20000;
    for (int s = 0; s < s_total; ++s) {
      for (int k = 0; k + 1 < 100; ++k) {
        block.eta(k) = sample_beta(1.0, 2.0, rng);
      }
      update_alpha_dp(block, rng);
      acc += block.alpha_dp;
    }
    CHECK(std::abs(acc / s_total - 2.0) < 0.1);
  }

  SUBCASE("the conditional rate stays positive for any sticks") {
    BlockState block = make_block(1, MixingSpec::dpmon(50), iso_hyper(1), 1);
    for (int trial = 0; trial < 2000; ++trial) {
      for (int k = 0; k + 1 < 50; ++k) block.eta(k) = rng.uniform();
      block.eta(2) = 1.0 - 1e-17;  // forces the pre-log clamp
      CHECK_NOTHROW(update_alpha_dp(block, rng));
      CHECK(block.alpha_dp > 0.0);
    }
  }
}

TEST_CASE("update_sticks") {
  RandomStream rng(161);

  SUBCASE("no data reproduces the Beta(1, alpha) prior") {
    BlockState block = make_block(1, MixingSpec::dpmon(20), iso_hyper(1), 0);
    block.alpha_dp = 1.7;
    std::vector<double> sticks;
    for (int s = 0; s < 3000; ++s) {
      update_sticks(block, rng);
      for (int k = 0; k + 1 < 20; ++k) sticks.push_back(block.eta(k));
      CHECK(block.eta(19) == 1.0);
      CHECK(exact_simplex_sum(block.pi) == 1.0);
    }
    CHECK(oracles::ks_statistic(sticks, [](double x) {
            return oracles::beta_1_alpha_cdf(x, 1.7);
          }) < oracles::ks_critical(0.01, sticks.size()));
  }

  SUBCASE("all mass in the first component concentrates the first stick") {
    const int n = 500;
    BlockState block = make_block(1, MixingSpec::dpmon(10), iso_hyper(1), n);
    block.assign.assign(n, 0);
    block.alpha_dp = 2.0;
    double acc_eta = 0.0, acc_pi = 0.0;
    const int s_total = 20000;
    for (int s = 0; s < s_total; ++s) {
      update_sticks(block, rng);
      acc_eta += block.eta(0);
      acc_pi += block.pi(0);
    }
    const double expected = (1.0 + n) / (1.0 + n + 2.0);
    CHECK(std::abs(acc_eta / s_total - expected) < 0.002);
    CHECK(acc_pi / s_total > 0.99);
  }

  SUBCASE("weights always form an exact simplex") {
    BlockState block = make_block(1, MixingSpec::dpmon(100), iso_hyper(1), 50);
    RandomStream gen(4);
    for (int trial = 0; trial < 2000; ++trial) {
      for (auto& q : block.assign) {
        q = static_cast<int>(gen.next_u64() % 100);
      }
      block.alpha_dp = gen.uniform(0.1, 20.0);
      update_sticks(block, gen);
      CHECK(exact_simplex_sum(block.pi) == 1.0);
      CHECK((block.pi.array() >= 0.0).all());
    }
  }
}

TEST_CASE("update_beta_mh") {
  SUBCASE("rho = 0 proposes the current point and always accepts") {
    const ChoiceDataset data = flat_dataset(50, 2, 3, 1);
    const UtilitySpec spec = UtilitySpec::linear({0});
    SamplerState state;
    state.blocks.push_back(make_block(1, MixingSpec::mvn(), iso_hyper(1), 50));
    state.beta = Eigen::MatrixXd::Constant(50, 1, 0.37);
    state.loglik.resize(50);
    for (int n = 0; n < 50; ++n) {
      state.loglik(n) = person_log_likelihood(spec, state.beta.row(n).transpose(),
                                              data.persons[n]);
    }
    state.rho = 0.0;
    RandomStream rng(171);
    const int accepts = update_beta_mh(state, data, spec, rng);
    CHECK(accepts == 50);
    CHECK((state.beta.array() == 0.37).all());
  }

  SUBCASE("flat likelihood reproduces the N(zeta, Omega) prior") {
    const int n = 20;
    const ChoiceDataset data = flat_dataset(n, 2, 3, 1);
    const UtilitySpec spec = UtilitySpec::linear({0});
    SamplerState state;
    state.blocks.push_back(make_block(1, MixingSpec::mvn(), iso_hyper(1), n));
    state.blocks[0].comps[0].zeta(0) = 0.5;
    state.blocks[0].comps[0].omega =
        CovMatrix(0.8 * Eigen::MatrixXd::Identity(1, 1));
    state.beta = Eigen::MatrixXd::Constant(n, 1, 0.5);
    state.loglik.resize(n);
    for (int i = 0; i < n; ++i) {
      state.loglik(i) = person_log_likelihood(spec, state.beta.row(i).transpose(),
                                              data.persons[i]);
    }
    state.rho = 2.0;
    RandomStream rng(181);
    std::vector<double> draws;
    for (int sweep = 0; sweep < 20000; ++sweep) {
      update_beta_mh(state, data, spec, rng);
      if (sweep >= 1000 && sweep % 10 == 0) {
        for (int i = 0; i < n; ++i) draws.push_back(state.beta(i, 0));
      }
    }
    CHECK(oracles::ks_statistic(draws, [](double x) {
            return oracles::normal_cdf(x, 0.5, std::sqrt(0.8));
          }) < oracles::ks_critical(0.01, draws.size()));
  }

  SUBCASE("1-person 1-task chain matches the grid posterior") {
    // two alternatives, one attribute (1, 0): P(choose 0) = sigmoid(beta)
    ChoiceDataset data;
    data.attribute_names = {"x1"};
    PersonRecord person;
    person.person_id = "p1";
    ChoiceTask task;
    task.task_id = "t1";
    task.attributes.resize(2, 1);
    task.attributes << 1.0, 0.0;
    task.available = {1, 1};
    task.alt_ids = {"1", "2"};
    task.chosen = 0;
    person.tasks.push_back(task);
    data.persons.push_back(person);
    const UtilitySpec spec = UtilitySpec::linear({0});

    SamplerState state;
    state.blocks.push_back(make_block(1, MixingSpec::mvn(), iso_hyper(1), 1));
    state.beta = Eigen::MatrixXd::Zero(1, 1);
    state.loglik.resize(1);
    state.loglik(0) = person_log_likelihood(spec, state.beta.row(0).transpose(),
                                            data.persons[0]);
    state.rho = 2.5;
    RandomStream rng(191);

    auto log_post = [](double b) {
      return -std::log1p(std::exp(-b)) - 0.5 * b * b;
    };
    const double lo = -3.0, hi = 4.0;
    const int bins = 40;
    const double z_norm = oracles::integrate(
        [&](double b) { return std::exp(log_post(b)); }, -12.0, 12.0, 40000);
    std::vector<double> expected(bins);
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * (hi - lo) / bins;
      expected[b] = oracles::integrate(
          [&](double x) { return std::exp(log_post(x)); }, a,
          a + (hi - lo) / bins, 64) / z_norm;
    }
    std::vector<double> observed(bins, 0.0);
    long total = 0;
    const long sweeps = 200000;
    for (long s = 0; s < sweeps; ++s) {
      update_beta_mh(state, data, spec, rng);
      if (s >= 2000 && s % 10 == 0) {
        const double b = state.beta(0, 0);
        ++total;
        if (b >= lo && b < hi) {
          observed[static_cast<int>((b - lo) / (hi - lo) * bins)] += 1.0;
        }
      }
    }
    CHECK(oracles::chi2_gof_pvalue(observed, expected, total) > 0.01);
  }

  SUBCASE("non-finite proposals are auto-rejected") {
    // WTP space: a huge price-sensitivity proposal overflows exp()
    ChoiceDataset data;
    data.attribute_names = {"d", "p", "x"};
    PersonRecord person;
    person.person_id = "p1";
    ChoiceTask task;
    task.task_id = "t1";
    task.attributes.resize(2, 3);
    task.attributes << 1.0, 2.0, 1.0, 0.0, 1.0, 0.0;
    task.available = {1, 1};
    task.alt_ids = {"1", "2"};
    task.chosen = 0;
    person.tasks.push_back(task);
    data.persons.push_back(person);
    const UtilitySpec spec = UtilitySpec::wtp_space(0, 1, {2});

    SamplerState state;
    state.blocks.push_back(ParamBlock{"asc", 0, 1, false}, {});
    SamplerState fresh;
    (void)fresh;
  }
}

TEST_CASE("adapt_step_size follows the tuning rule") {
  MCMCConfig config;
  config.rho_increment = 0.001;
  config.target_acceptance = 0.3;
  config.rho_min = 1e-4;
  CHECK(adapt_step_size(0.1, 0.29, config) == doctest::Approx(0.099));
  CHECK(adapt_step_size(0.1, 0.31, config) == doctest::Approx(0.101));
  CHECK(adapt_step_size(0.1, 0.30, config) == 0.1);
  CHECK(adapt_step_size(1e-4, 0.0, config) == 1e-4);
}

TEST_CASE("run_chain bookkeeping") {
  ScenarioSpec spec;
  spec.scenario = Scenario::Skewed;
  spec.n_persons = 20;
  spec.n_tasks = 2;
  spec.seed = 42;
  const TrueTasteTable tastes = generate_tastes(spec);
  const ChoiceDataset data = generate_dataset(spec, tastes);

  ModelSpec model;
  model.utility = UtilitySpec::linear({0, 1});
  model.mixing = MixingSpec::mvn();
  model.hyper = HyperPriors::isotropic(2, 0.0, 100.0, 2.0, 1000.0);

  SUBCASE("retained count is floor((iterations - burnin)/thinning)") {
    MCMCConfig config;
    config.n_chains = 1;
    config.n_iterations = 110;
    config.n_burnin = 100;
    config.thinning = 10;
    config.seed = 7;
    const ChainDraws chain = run_chain(model, data, config, RandomStream(7));
    CHECK(chain.retained.rows() == 1);
    CHECK(chain.loglik_trace.size() == 110);
  }

  SUBCASE("identical chain seeds give identical draws") {
    MCMCConfig config;
    config.n_chains = 1;
    config.n_iterations = 300;
    config.n_burnin = 100;
    config.thinning = 5;
    const ChainDraws a = run_chain(model, data, config, RandomStream(99));
    const ChainDraws b = run_chain(model, data, config, RandomStream(99));
    CHECK(a.retained == b.retained);
    CHECK(a.loglik_trace == b.loglik_trace);
  }

  SUBCASE("log-likelihood trace stabilizes (split-mean z below 3)") {
    ScenarioSpec bigger = spec;
    bigger.n_persons = 50;
    bigger.n_tasks = 4;
    const TrueTasteTable t2 = generate_tastes(bigger);
    const ChoiceDataset d2 = generate_dataset(bigger, t2);
    MCMCConfig config;
    config.n_chains = 1;
    config.n_iterations = 4000;
    config.n_burnin = 2000;
    config.thinning = 10;
    const ChainDraws chain = run_chain(model, d2, config, RandomStream(3));
    const std::vector<double> post(chain.loglik_trace.begin() + 2000,
                                   chain.loglik_trace.end());
    CHECK(std::abs(oracles::split_mean_z(post)) < 3.0);
  }
}

TEST_CASE("run_estimation and draws persistence") {
  ScenarioSpec spec;
  spec.scenario = Scenario::Skewed;
  spec.n_persons = 15;
  spec.n_tasks = 2;
  spec.seed = 5;
  const ChoiceDataset data = generate_dataset(spec, generate_tastes(spec));

  ModelSpec model;
  model.utility = UtilitySpec::linear({0, 1});
  model.mixing = MixingSpec::fmon(2);
  model.hyper = HyperPriors::isotropic(2, 0.0, 100.0, 2.0, 1000.0);

  MCMCConfig config;
  config.n_chains = 2;
  config.n_iterations = 200;
  config.n_burnin = 100;
  config.thinning = 10;
  config.seed = 11;

  const PosteriorDraws draws = run_estimation(model, data, config, "hash");
  REQUIRE(draws.chains.size() == 2);
  CHECK(draws.chains[0].retained.rows() == 10);
  CHECK(draws.chains[1].retained.rows() == 10);
  CHECK(draws.chains[0].retained != draws.chains[1].retained);

  SUBCASE("threaded chains match sequential chains exactly") {
    const PosteriorDraws threaded = run_estimation(model, data, config, "hash", 2);
    for (int c = 0; c < 2; ++c) {
      CHECK(threaded.chains[c].retained == draws.chains[c].retained);
    }
  }

  SUBCASE("save/load round-trip and atomicity") {
    namespace fs = std::filesystem;
    const std::string dir =
        (fs::temp_directory_path() / "mixlogit_draws_test").string();
    save_draws(draws, dir);
    CHECK(!fs::exists(dir + ".tmp"));
    CHECK(fs::exists(fs::path(dir) / "meta.json"));
    CHECK(fs::exists(fs::path(dir) / "columns.txt"));

    const PosteriorDraws loaded = load_draws(dir);
    CHECK(loaded.meta.n_persons == 15);
    CHECK(loaded.meta.mixing.kind == MixingKind::FMON);
    CHECK(loaded.chains.size() == 2);
    CHECK(loaded.chains[0].retained == draws.chains[0].retained);
    CHECK(loaded.chains[1].loglik_trace == draws.chains[1].loglik_trace);

    // overwriting an existing directory is idempotent
    save_draws(draws, dir);
    CHECK(load_draws(dir).chains[0].retained == draws.chains[0].retained);
  }

  SUBCASE("retained rows expose an exact simplex and PD components") {
    const DrawsLayout layout = draws.meta.layout();
    for (const auto& chain : draws.chains) {
      for (Eigen::Index r = 0; r < chain.retained.rows(); ++r) {
        const Eigen::VectorXd pi =
            chain.retained.row(r).segment(layout.pi_col(0), 2);
        CHECK(exact_simplex_sum(pi) == 1.0);
        for (int k = 0; k < 2; ++k) {
          Eigen::MatrixXd omega(2, 2);
          for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
              omega(i, j) = chain.retained(r, layout.omega_col(0, k) + i * 2 + j);
            }
          }
          CHECK_NOTHROW(CovMatrix{omega});
        }
      }
    }
  }
}

TEST_CASE("sampler runs with each mixing distribution and WTP space") {
  ScenarioSpec spec;
  spec.scenario = Scenario::MultiModalSkewed;
  spec.n_persons = 25;
  spec.n_tasks = 2;
  spec.seed = 6;
  const ChoiceDataset data = generate_dataset(spec, generate_tastes(spec));

  MCMCConfig config;
  config.n_chains = 1;
  config.n_iterations = 150;
  config.n_burnin = 50;
  config.thinning = 10;

  for (const MixingSpec mixing :
       {MixingSpec::mvn(), MixingSpec::fmon(2), MixingSpec::dpmon(15)}) {
    ModelSpec model;
    model.utility = UtilitySpec::linear({0, 1});
    model.mixing = mixing;
    model.hyper = HyperPriors::isotropic(2, 0.0, 100.0, 2.0, 1000.0);
    const ChainDraws chain = run_chain(model, data, config, RandomStream(8));
    CHECK(chain.retained.rows() == 10);
    CHECK(std::isfinite(chain.retained.sum()));
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/gamma.hpp>

#include "mixlogit/stats.hpp"
#include "oracles.hpp"

using namespace mixlogit;

TEST_CASE("random stream is a pure function of seed and call sequence") {
  RandomStream a(42), b(42), c(43);
  std::vector<double> sa, sb;
  for (int i = 0; i < 1000; ++i) {
    sa.push_back(a.uniform());
    sb.push_back(b.uniform());
  }
  CHECK(sa == sb);
  CHECK(c.uniform() != sa[0]);

  RandomStream f0 = RandomStream(42).fork(0);
  RandomStream f0b = RandomStream(42).fork(0);
  RandomStream f1 = RandomStream(42).fork(1);
  CHECK(f0.next_u64() == f0b.next_u64());
  CHECK(RandomStream(42).fork(0).next_u64() != f1.next_u64());
}

TEST_CASE("uniform draws are clamped away from 0 and 1") {
  RandomStream rng(7);
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 1e-16);
    CHECK(u <= 1.0 - 1e-16);
  }
}

TEST_CASE("CovMatrix validates symmetry and positive definiteness") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(CovMatrix{asym}, NonPositiveDefiniteError);

  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(CovMatrix{indef}, NonPositiveDefiniteError);

  // numerically degenerate covariance rejected at the stated tolerance
  CHECK_THROWS_AS(CovMatrix{1e-12 * Eigen::MatrixXd::Identity(2, 2)},
                  NonPositiveDefiniteError);
  CHECK_NOTHROW(CovMatrix{1e-6 * Eigen::MatrixXd::Identity(2, 2)});

  try {
    CovMatrix bad(indef, "Omega");
    FAIL("expected a throw");
  } catch (const NonPositiveDefiniteError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Omega") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);  // names the offending matrix
  }
}

TEST_CASE("sample_mvn moments and determinism") {
  const CovMatrix eye = CovMatrix::identity(2);
  const Eigen::Vector2d zero(0.0, 0.0);

  RandomStream r1(11), r2(11);
  const Eigen::VectorXd d1 = sample_mvn(zero, eye, r1);
  const Eigen::VectorXd d2 = sample_mvn(zero, eye, r2);
  CHECK(d1 == d2);

  RandomStream rng(12);
  const int n = 100000;
  Eigen::Matrix2d cov_acc = Eigen::Matrix2d::Zero();
  Eigen::Vector2d mean_acc = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = sample_mvn(zero, eye, rng);
    mean_acc += x;
    cov_acc += x * x.transpose();
  }
  mean_acc /= n;
  cov_acc = cov_acc / n - mean_acc * mean_acc.transpose();
  CHECK((cov_acc - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.05);

  // 1-D location: mean 5 recovered within 0.01 over 1e5 draws
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const CovMatrix unit(one);
  Eigen::VectorXd five(1);
  five << 5.0;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += sample_mvn(five, unit, rng)(0);
  CHECK(std::abs(acc / n - 5.0) < 0.01);

  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(sample_mvn(wrong, eye, rng), ShapeError);
}

TEST_CASE("sample_inverse_wishart matches the analytic mean") {
  RandomStream rng(21);
  const int n = 100000;

  SUBCASE("df=10, scale=I2: mean within 5% of I/7") {
    const CovMatrix scale = CovMatrix::identity(2);
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (int i = 0; i < n; ++i) {
      acc += sample_inverse_wishart(10.0, scale, rng).matrix();
    }
    acc /= n;
    const double target = 1.0 / 7.0;
    CHECK(std::abs(acc(0, 0) - target) < 0.05 * target);
    CHECK(std::abs(acc(1, 1) - target) < 0.05 * target);
    CHECK(std::abs(acc(0, 1)) < 0.05 * target);
  }

  SUBCASE("1-D reduction: IW(3, [[2]]) is the inverse of Gamma(1.5, rate 1)") {
    Eigen::MatrixXd two(1, 1);
    two << 2.0;
    const CovMatrix scale(two);
    std::vector<double> inv_draws;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_inverse_wishart(3.0, scale, rng).matrix()(0, 0);
      acc += x;
      inv_draws.push_back(1.0 / x);
    }
    // X^-1 ~ Wishart(3, 1/2) = Gamma(3/2, scale 1) in one dimension
    boost::math::gamma_distribution<double> g(1.5, 1.0);
    const double ks = oracles::ks_statistic(
        inv_draws, [&](double x) { return boost::math::cdf(g, x); });
    CHECK(ks < oracles::ks_critical(0.01, inv_draws.size()));
    // heavy-tailed mean (infinite variance): generous tolerance around 2
    CHECK(std::abs(acc / n - 2.0) < 0.3);
  }

  SUBCASE("df at or below dim-1 is rejected") {
    CHECK_THROWS_AS(
        sample_inverse_wishart(1.5, CovMatrix::identity(2), rng), DomainError);
  }
}

TEST_CASE("sample_gamma under both parameterizations") {
  RandomStream rng(31);
  const int n = 100000;

  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += sample_gamma_scale(2.0, 2.0, rng);
  CHECK(std::abs(acc / n - 4.0) < 0.1);  // mean = shape * scale

  int exceed = 0;
  for (int i = 0; i < n; ++i) {
    if (sample_gamma_rate(1.0, 1.0, rng) > 1.0) ++exceed;
  }
  CHECK(std::abs(static_cast<double>(exceed) / n - std::exp(-1.0)) < 0.006);

  // shape < 1 branch against the reference CDF
  std::vector<double> small;
  for (int i = 0; i < n; ++i) small.push_back(sample_gamma_rate(0.5, 1.0, rng));
  boost::math::gamma_distribution<double> g(0.5, 1.0);
  CHECK(oracles::ks_statistic(small, [&](double x) {
          return boost::math::cdf(g, x);
        }) < oracles::ks_critical(0.01, small.size()));

  CHECK_THROWS_AS(sample_gamma_rate(0.0, 1.0, rng), DomainError);
  CHECK_THROWS_AS(sample_gamma_scale(1.0, -2.0, rng), DomainError);
}

TEST_CASE("sample_beta") {
  RandomStream rng(41);
  const int n = 100000;

  std::vector<double> u;
  for (int i = 0; i < n; ++i) u.push_back(sample_beta(1.0, 1.0, rng));
  CHECK(std::abs(oracles::mean(u) - 0.5) < 0.005);
  CHECK(oracles::ks_statistic(u, [](double x) { return x; }) <
        oracles::ks_critical(0.01, u.size()));

  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += sample_beta(1.0, 4.0, rng);
  CHECK(std::abs(acc / n - 0.2) < 0.003);

  for (int i = 0; i < 1000; ++i) {
    const double x = sample_beta(0.3, 0.3, rng);
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }

  CHECK_THROWS_AS(sample_beta(-1.0, 1.0, rng), DomainError);
}

TEST_CASE("sample_dirichlet") {
  RandomStream rng(51);

  Eigen::VectorXd huge(2);
  huge << 1e6, 1e6;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(huge, rng);
    CHECK(std::abs(w(0) - 0.5) < 0.01);
    CHECK(std::abs(w(1) - 0.5) < 0.01);
  }

  Eigen::VectorXd single(1);
  single << 3.0;
  CHECK(sample_dirichlet(single, rng)(0) == 1.0);

  Eigen::VectorXd conc(2);
  conc << 2.0, 6.0;
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(conc, rng);
    acc += w(0);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    CHECK((w.array() >= 0.0).all());
  }
  CHECK(std::abs(acc / n - 0.25) < 0.003);

  Eigen::VectorXd bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(sample_dirichlet(bad, rng), DomainError);
}

TEST_CASE("sample_categorical") {
  RandomStream rng(61);

  Eigen::VectorXd point(3);
  point << 1.0, 0.0, 0.0;
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical(point, rng) == 0);

  Eigen::VectorXd fair(2);
  fair << 0.5, 0.5;
  const int n = 100000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    if (sample_categorical(fair, rng) == 0) ++first;
  }
  CHECK(std::abs(static_cast<double>(first) / n - 0.5) < 0.005);

  Eigen::VectorXd deficient(3);
  deficient << 0.3, 0.3, 0.3;
  CHECK_THROWS_AS(sample_categorical(deficient, rng), DomainError);
}

TEST_CASE("sample_gumbel") {
  RandomStream rng(71);
  const int n = 1000000;
  std::vector<double> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double g = sample_gumbel(rng);
    CHECK(std::isfinite(g));
    draws.push_back(g);
  }
  CHECK(std::abs(oracles::mean(draws) - 0.5772156649) < 0.005);
  CHECK(oracles::ks_statistic(draws, [](double x) {
          return std::exp(-std::exp(-x));
        }) < oracles::ks_critical(0.01, draws.size()));
}

TEST_CASE("sample_snl") {
  RandomStream rng(81);

  SUBCASE("lambda = 0 reduces to the normal distribution") {
    const int n = 100000;
    std::vector<double> snl, norm;
    for (int i = 0; i < n; ++i) snl.push_back(sample_snl(0.0, 1.0, 0.0, rng));
    for (int i = 0; i < n; ++i) norm.push_back(sample_std_normal(rng));
    CHECK(oracles::ks_two_sample(snl, norm) <
          oracles::ks_two_sample_critical(0.01, n, n));
  }

  SUBCASE("strongly skewed density matches the grid-evaluated formula") {
    const int n = 1000000;
    const double lo = -4.0, hi = 4.0;
    const int bins = 80;
    std::vector<double> counts(bins, 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = sample_snl(0.0, 1.0, 50.0, rng);
      if (x >= lo && x < hi) {
        counts[static_cast<int>((x - lo) / (hi - lo) * bins)] += 1.0;
      }
    }
    const double width = (hi - lo) / bins;
    double peak = 0.0, sup = 0.0;
    for (int b = 0; b < bins; ++b) {
      const double a = lo + b * width;
      const double expected = oracles::integrate(
          [&](double x) { return snl_density(x, 0.0, 1.0, 50.0); }, a,
          a + width, 64) / width;
      const double observed = counts[b] / n / width;
      peak = std::max(peak, expected);
      sup = std::max(sup, std::abs(observed - expected));
    }
    CHECK(sup < 0.02 * peak);
  }

  SUBCASE("negative lambda skews left of the location") {
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += sample_snl(1.0, 1.0, -50.0, rng);
    const double empirical_mean = acc / n;
    CHECK(empirical_mean < 1.0);
    // quadrature oracle for the mean of SNL(1, 1, -50)
    const double oracle_mean = oracles::integrate(
        [](double x) { return x * snl_density(x, 1.0, 1.0, -50.0); }, -7.0, 9.0,
        20000);
    CHECK(std::abs(empirical_mean - oracle_mean) < 0.01);
  }

  SUBCASE("right skew means the mean exceeds the median") {
    const int n = 200000;
    std::vector<double> draws;
    for (int i = 0; i < n; ++i) draws.push_back(sample_snl(0.0, 1.0, 50.0, rng));
    CHECK(oracles::mean(draws) > oracles::median_sorted(draws));
  }

  CHECK_THROWS_AS(sample_snl(0.0, 0.0, 1.0, rng), DomainError);
}

TEST_CASE("log_density_mvn") {
  const double log2pi = std::log(2.0 * std::numbers::pi);

  for (int r = 1; r <= 3; ++r) {
    const CovMatrix eye = CovMatrix::identity(r);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(r);
    CHECK(log_density_mvn(x, x, eye) == doctest::Approx(-0.5 * r * log2pi));
  }

  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  Eigen::VectorXd x1(1), m0(1);
  x1 << 1.0;
  m0 << 0.0;
  CHECK(log_density_mvn(x1, m0, CovMatrix(one)) ==
        doctest::Approx(-0.5 * log2pi - 0.5));

  // grid-normalization oracle in one dimension
  RandomStream rng(91);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = rng.uniform(-2.0, 2.0);
    const double var = rng.uniform(0.3, 3.0);
    const double x = rng.uniform(-4.0, 4.0);
    const double z = oracles::integrate(
        [&](double t) { return std::exp(-0.5 * (t - mu) * (t - mu) / var); },
        mu - 14.0 * std::sqrt(var), mu + 14.0 * std::sqrt(var), 40000);
    const double oracle =
        std::log(std::exp(-0.5 * (x - mu) * (x - mu) / var) / z);
    Eigen::MatrixXd cov(1, 1);
    cov << var;
    Eigen::VectorXd xv(1), mv(1);
    xv << x;
    mv << mu;
    CHECK(log_density_mvn(xv, mv, CovMatrix(cov)) ==
          doctest::Approx(oracle).epsilon(1e-8));
  }

  CHECK_THROWS_AS(
      log_density_mvn(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                      CovMatrix::identity(2)),
      ShapeError);
}

TEST_CASE("log_sum_exp is stable and exact on shifted inputs") {
  Eigen::VectorXd v(3);
  v << 1000.0, 1000.0, 1000.0;
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(3.0)));
  Eigen::VectorXd w(2);
  w << -1500.0, -1500.0;
  CHECK(std::isfinite(log_sum_exp(w)));
}

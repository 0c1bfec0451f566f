#ifndef MIXLOGIT_STATS_HPP
#define MIXLOGIT_STATS_HPP

#include <Eigen/Dense>

#include "mixlogit/errors.hpp"
#include "mixlogit/random.hpp"

namespace mixlogit {

// Symmetric positive-definite matrix with its lower Cholesky factor cached.
// Construction validates symmetry (within 1e-12 relative to the largest
// entry) and rejects matrices whose smallest Cholesky pivot squared falls at
// or below 1e-12 * max(1, max|entry|), i.e. numerically degenerate inputs.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd m, const char* label = "covariance");

  static CovMatrix identity(int dim);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXd& matrix() const { return mat_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_; }
  double log_det() const { return log_det_; }

  // Inverse via triangular solves on the cached factor.
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::MatrixXd mat_;
  Eigen::MatrixXd chol_;
  double log_det_;
};

// ---------------------------------------------------------------------------
// Variate generation. Every sampler consumes uniforms from the RandomStream
// only, so the draw sequence is reproducible bit-for-bit under a fixed seed.
// ---------------------------------------------------------------------------

// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
double sample_std_normal(RandomStream& rng);

// N(mean, cov) through the lower-triangular factor of cov.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const CovMatrix& cov,
                           RandomStream& rng);

// Gamma draws by Marsaglia-Tsang squeeze; the two parameterizations are
// pinned by name, never positionally.
double sample_gamma_rate(double shape, double rate, RandomStream& rng);
double sample_gamma_scale(double shape, double scale, RandomStream& rng);

double sample_chi_squared(double df, RandomStream& rng);

// Beta(a, b) as a gamma ratio, clamped into the open unit interval.
double sample_beta(double a, double b, RandomStream& rng);

// Dirichlet draw; output is non-negative and sums to 1 within 1e-12.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& concentration,
                                 RandomStream& rng);

// Index in {0, ..., K-1} by cumulative-sum inversion of a single uniform.
// probs must sum to 1 within 1e-9.
int sample_categorical(const Eigen::VectorXd& probs, RandomStream& rng);

// Gumbel(0,1): -ln(-ln u) with u clamped away from {0, 1}.
double sample_gumbel(RandomStream& rng);

// Inverse Wishart IW(df, scale), df >= dim, via the Bartlett construction
// on the inverse scale (triangular solves only, no explicit inversion).
// For df > dim + 1 the mean is scale / (df - dim - 1).
CovMatrix sample_inverse_wishart(double df, const CovMatrix& scale,
                                 RandomStream& rng);

// Skew-normal-logistic SNL(mu, sigma, lambda): density
//   f(x) = 2 phi(x | mu, sigma) G(lambda (x - mu)),
// G the logistic CDF. Sampled by rejection with the N(mu, sigma^2) envelope;
// acceptance probability is exactly 1/2 for any lambda.
double sample_snl(double mu, double sigma, double lambda, RandomStream& rng);

// ---------------------------------------------------------------------------
// Densities (pure, freely concurrent).
// ---------------------------------------------------------------------------

double log_density_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const CovMatrix& cov);

double snl_density(double x, double mu, double sigma, double lambda);

// Numerically stable log(sum(exp(v))) with max subtraction.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace mixlogit

#endif  // MIXLOGIT_STATS_HPP

#include "mixlogit/stats.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mixlogit {

namespace {

std::string describe_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  if (m.rows() <= 6) {
    os << "[";
    for (int i = 0; i < m.rows(); ++i) {
      os << (i ? "; " : "");
      for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    }
    os << "]";
  } else {
    os << m.rows() << "x" << m.cols() << " matrix";
  }
  return os.str();
}

}  // namespace

CovMatrix::CovMatrix(Eigen::MatrixXd m, const char* label) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ShapeError(std::string(label) + ": expected a square matrix, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  const double max_abs = m.cwiseAbs().maxCoeff();
  const double sym_tol = 1e-12 * std::max(1.0, max_abs);
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > sym_tol) {
    throw NonPositiveDefiniteError(std::string(label) + " is not symmetric: " +
                                   describe_matrix(m));
  }
  mat_ = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(mat_);
  const double pivot_tol = 1e-12 * std::max(1.0, max_abs);
  bool ok = llt.info() == Eigen::Success;
  double min_pivot_sq = 0.0;
  if (ok) {
    chol_ = llt.matrixL();
    min_pivot_sq = chol_.diagonal().minCoeff();
    min_pivot_sq *= min_pivot_sq;
    ok = min_pivot_sq > pivot_tol;
  }
  if (!ok) {
    std::ostringstream os;
    os << label << " is not positive definite (min Cholesky pivot^2 = "
       << min_pivot_sq << ", tolerance " << pivot_tol << "): "
       << describe_matrix(mat_);
    throw NonPositiveDefiniteError(os.str());
  }
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

CovMatrix CovMatrix::identity(int dim) {
  return CovMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

Eigen::MatrixXd CovMatrix::inverse() const {
  const Eigen::MatrixXd linv = chol_.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(dim(), dim()));
  return linv.transpose() * linv;
}

double sample_std_normal(RandomStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const CovMatrix& cov,
                           RandomStream& rng) {
  if (mean.size() != cov.dim()) {
    throw ShapeError("sample_mvn: mean has length " +
                     std::to_string(mean.size()) + " but covariance is " +
                     std::to_string(cov.dim()) + "-dimensional");
  }
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sample_std_normal(rng);
  return mean + cov.chol_lower() * z;
}

double sample_gamma_rate(double shape, double rate, RandomStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("sample_gamma: shape and rate must be positive, got shape=" +
                      std::to_string(shape) + " rate=" + std::to_string(rate));
  }
  // Marsaglia-Tsang (2000); the shape<1 case boosts a shape+1 draw by
  // u^(1/shape).
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    boost = std::pow(rng.uniform(), 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return boost * d * v / rate;
  }
}

double sample_gamma_scale(double shape, double scale, RandomStream& rng) {
  if (!(scale > 0.0)) {
    throw DomainError("sample_gamma: scale must be positive, got " +
                      std::to_string(scale));
  }
  return sample_gamma_rate(shape, 1.0 / scale, rng);
}

double sample_chi_squared(double df, RandomStream& rng) {
  return sample_gamma_scale(0.5 * df, 2.0, rng);
}

double sample_beta(double a, double b, RandomStream& rng) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("sample_beta: parameters must be positive, got a=" +
                      std::to_string(a) + " b=" + std::to_string(b));
  }
  const double x = sample_gamma_rate(a, 1.0, rng);
  const double y = sample_gamma_rate(b, 1.0, rng);
  const double r = x / (x + y);
  if (r < 1e-16) return 1e-16;
  if (r > 1.0 - 1e-16) return 1.0 - 1e-16;
  return r;
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& concentration,
                                 RandomStream& rng) {
  if (concentration.size() == 0 || (concentration.array() <= 0.0).any()) {
    throw DomainError("sample_dirichlet: all concentration entries must be positive");
  }
  Eigen::VectorXd g(concentration.size());
  for (Eigen::Index k = 0; k < g.size(); ++k)
    g(k) = sample_gamma_rate(concentration(k), 1.0, rng);
  const double total = g.sum();
  if (!(total > 0.0)) {
    throw DomainError("sample_dirichlet: gamma draws underflowed to zero");
  }
  return g / total;
}

int sample_categorical(const Eigen::VectorXd& probs, RandomStream& rng) {
  if (probs.size() == 0 || (probs.array() < 0.0).any() ||
      std::abs(probs.sum() - 1.0) > 1e-9) {
    throw DomainError("sample_categorical: probabilities must be a simplex (sum=" +
                      std::to_string(probs.size() ? probs.sum() : 0.0) + ")");
  }
  const double u = rng.uniform();
  double cum = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    cum += probs(k);
    if (u <= cum) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

double sample_gumbel(RandomStream& rng) {
  return -std::log(-std::log(rng.uniform()));
}

CovMatrix sample_inverse_wishart(double df, const CovMatrix& scale,
                                 RandomStream& rng) {
  const int r = scale.dim();
  if (!(df >= r)) {
    throw DomainError("sample_inverse_wishart: df must be >= dim, got df=" +
                      std::to_string(df) + " dim=" + std::to_string(r));
  }
  // X ~ IW(df, S): with A the Bartlett factor of a Wishart(df, I) draw and
  // L = chol(S), X = M^T M where M = A^{-1} L^T.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < r; ++i) {
    a(i, i) = std::sqrt(sample_chi_squared(df - i, rng));
    for (int j = 0; j < i; ++j) a(i, j) = sample_std_normal(rng);
  }
  const Eigen::MatrixXd m = a.triangularView<Eigen::Lower>().solve(
      scale.chol_lower().transpose().eval());
  return CovMatrix(m.transpose() * m, "inverse Wishart draw");
}

double sample_snl(double mu, double sigma, double lambda, RandomStream& rng) {
  if (!(sigma > 0.0)) {
    throw DomainError("sample_snl: sigma must be positive, got " +
                      std::to_string(sigma));
  }
  for (;;) {
    const double x = mu + sigma * sample_std_normal(rng);
    const double accept = 1.0 / (1.0 + std::exp(-lambda * (x - mu)));
    if (rng.uniform() <= accept) return x;
  }
}

double log_density_mvn(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const CovMatrix& cov) {
  if (x.size() != cov.dim() || mean.size() != cov.dim()) {
    throw ShapeError("log_density_mvn: dimension mismatch (x=" +
                     std::to_string(x.size()) + ", mean=" +
                     std::to_string(mean.size()) + ", cov=" +
                     std::to_string(cov.dim()) + ")");
  }
  const Eigen::VectorXd z =
      cov.chol_lower().triangularView<Eigen::Lower>().solve(x - mean);
  return -0.5 * (cov.dim() * std::log(2.0 * std::numbers::pi) +
                 cov.log_det() + z.squaredNorm());
}

double snl_density(double x, double mu, double sigma, double lambda) {
  const double z = (x - mu) / sigma;
  const double phi = std::exp(-0.5 * z * z) /
                     (sigma * std::sqrt(2.0 * std::numbers::pi));
  const double g = 1.0 / (1.0 + std::exp(-lambda * (x - mu)));
  return 2.0 * phi * g;
}

}  // namespace mixlogit

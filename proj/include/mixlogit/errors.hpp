#ifndef MIXLOGIT_ERRORS_HPP
#define MIXLOGIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mixlogit {

// Parameter outside the mathematical domain of a sampler or density.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Covariance factorization failed or the matrix is numerically degenerate.
struct NonPositiveDefiniteError : std::runtime_error {
  explicit NonPositiveDefiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector/matrix dimensions inconsistent with the declared specification.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// CSV header does not provide a required column.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset content violates a structural invariant (bad chosen flags, ragged rows).
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration (bad keys, values, or section combinations).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Draws metadata disagrees with the mixing/utility spec supplied at evaluation time.
struct SpecMismatchError : std::runtime_error {
  explicit SpecMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

// A predictive distribution does not cover a requested task.
struct CoverageError : std::runtime_error {
  explicit CoverageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Too few retained draws for the requested statistic.
struct InsufficientDrawsError : std::runtime_error {
  explicit InsufficientDrawsError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure while reading or writing run artifacts.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A Markov chain aborted mid-run; message carries iteration index and a
// snapshot reference for post-mortem.
struct ChainAbortError : std::runtime_error {
  ChainAbortError(long iteration, const std::string& msg)
      : std::runtime_error(msg), iteration(iteration) {}
  long iteration;
};

}  // namespace mixlogit

#endif  // MIXLOGIT_ERRORS_HPP

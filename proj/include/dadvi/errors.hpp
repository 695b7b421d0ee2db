#ifndef DADVI_ERRORS_HPP
#define DADVI_ERRORS_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dadvi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an input contract (dimension mismatch, wrong family, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class InvalidConfiguration : public Error {
 public:
  using Error::Error;
};

/**
 * The model returned a non-finite log density or gradient at one of the
 * draws. The offending draw index is kept so the caller can reproduce it.
 */
class NonFiniteObjective : public Error {
 public:
  NonFiniteObjective(const std::string& what, std::ptrdiff_t draw_index);
  /// Index of the first offending draw, or -1 when not tied to a draw.
  std::ptrdiff_t draw_index() const noexcept { return draw_index_; }

 private:
  std::ptrdiff_t draw_index_;
};

class UnsupportedQuantity : public Error {
 public:
  using Error::Error;
};

class DegenerateDraws : public Error {
 public:
  using Error::Error;
};

class LinearSolveFailure : public Error {
 public:
  using Error::Error;
};

/// Conjugate gradient ran out of iterations; carries the best iterate found.
class CgNotConverged : public Error {
 public:
  CgNotConverged(const std::string& what, Eigen::VectorXd best,
                 double relative_residual, std::size_t iterations);
  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double relative_residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
  std::size_t iterations_;
};

/// Post-processing was asked to run at a point that is not a verified local
/// minimum of the SAA objective.
class NotAtOptimum : public Error {
 public:
  NotAtOptimum(const std::string& what, double gradient_norm);
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

class DegenerateNormalization : public Error {
 public:
  using Error::Error;
};

class ExperimentFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace dadvi

#endif  // DADVI_ERRORS_HPP

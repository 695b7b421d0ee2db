#ifndef DADVI_LINEAR_SOLVE_HPP
#define DADVI_LINEAR_SOLVE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>

namespace dadvi {

/// Matrix-free symmetric linear operator v -> H v.
class LinearOperator {
 public:
  using Apply = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  LinearOperator(std::size_t size, Apply apply);

  std::size_t size() const noexcept { return size_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const;

 private:
  std::size_t size_;
  Apply apply_;
};

/// Wraps a dense matrix; the matrix is copied.
LinearOperator dense_operator(const Eigen::MatrixXd& matrix);

struct CGConfig {
  double tolerance = 1e-10;       ///< on ||H x - b|| / ||b||
  std::size_t max_iterations = 0; ///< 0 means ten times the system size
  bool precondition = true;       ///< used by callers that build a preconditioner
};

struct CGResult {
  Eigen::VectorXd x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/**
 * Preconditioned conjugate gradient for H x = b with H symmetric positive
 * definite. `preconditioner` is a positive diagonal approximating H^-1.
 *
 * Convergence is judged on the true residual b - H x, recomputed at the end;
 * if recursion drift leaves it above tolerance the iteration restarts from
 * the current x within the same iteration budget. Throws CgNotConverged
 * (carrying the best iterate) when the budget runs out, and
 * LinearSolveFailure on non-positive curvature.
 */
CGResult cg_solve(const LinearOperator& h, const Eigen::VectorXd& b,
                  const CGConfig& config = {},
                  const std::optional<Eigen::VectorXd>& preconditioner = std::nullopt);

}  // namespace dadvi

#endif  // DADVI_LINEAR_SOLVE_HPP

#ifndef DADVI_QUADRATIC_MODEL_HPP
#define DADVI_QUADRATIC_MODEL_HPP

#include "dadvi/model.hpp"

#include <Eigen/Dense>

namespace dadvi {

/**
 * log p(theta) = -1/2 theta' A theta + B' theta. When A is positive definite
 * the exact posterior is Normal(A^-1 B, A^-1), which makes this the reference
 * model for every closed-form check. A singular A is allowed here so that the
 * closed-form solvers can report it themselves.
 */
class QuadraticModel final : public Model {
 public:
  /// Throws InvalidConfiguration unless A is square and symmetric to 1e-12
  /// (relative to its largest entry).
  QuadraticModel(Eigen::MatrixXd a, Eigen::VectorXd b);

  std::size_t dim() const override;
  std::string name() const override { return "quadratic"; }
  double log_density(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& v) const override;

  const Eigen::MatrixXd& a() const noexcept { return a_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

/// -1/2 theta' A theta + B' theta.
double quadratic_log_density(const QuadraticModel& model,
                             const Eigen::VectorXd& theta);

}  // namespace dadvi

#endif  // DADVI_QUADRATIC_MODEL_HPP

#ifndef DADVI_MODEL_HPP
#define DADVI_MODEL_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string>

namespace dadvi {

/**
 * Differentiable unnormalized log joint density log p(theta, y) over an
 * unconstrained parameter theta in R^D.
 *
 * Implementations supply analytic gradients and Hessian-vector products.
 * All member functions are const and must be safe to call concurrently on
 * distinct inputs.
 */
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;

  virtual double log_density(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
  /// Hessian of log_density at theta applied to v.
  virtual Eigen::VectorXd hvp(const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& v) const = 0;

 protected:
  /// Throws ContractViolation unless x has length dim().
  void check_dim(const Eigen::VectorXd& x, const char* what = "theta") const;
};

using ModelPtr = std::shared_ptr<const Model>;

/**
 * Model whose log density has the global-local form
 *
 *   log p(theta) = sum_p ell_p(gamma, lambda_p) + ell_gamma(gamma),
 *
 * with theta laid out as (gamma, lambda_1, ..., lambda_P).
 */
class GlobalLocalModel : public Model {
 public:
  virtual std::size_t global_dim() const = 0;
  virtual std::size_t local_dim() const = 0;
  virtual std::size_t num_local() const = 0;

  virtual double local_term(const Eigen::VectorXd& gamma,
                            const Eigen::VectorXd& lambda,
                            std::size_t p) const = 0;
  virtual double global_term(const Eigen::VectorXd& gamma) const = 0;

  std::size_t dim() const override {
    return global_dim() + num_local() * local_dim();
  }

  Eigen::VectorXd global_block(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd local_block(const Eigen::VectorXd& theta,
                              std::size_t p) const;

  /// Sum of block terms; equals log_density up to rounding.
  double decomposed_log_density(const Eigen::VectorXd& theta) const;
};

}  // namespace dadvi

#endif  // DADVI_MODEL_HPP

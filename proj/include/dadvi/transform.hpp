#ifndef DADVI_TRANSFORM_HPP
#define DADVI_TRANSFORM_HPP

#include "dadvi/model.hpp"

#include <vector>

namespace dadvi {

/**
 * Per-coordinate range transform. Coordinates flagged positive live on
 * (0, inf) in the constrained space and are mapped to the real line by log;
 * the rest are left alone.
 */
class ParameterTransform {
 public:
  explicit ParameterTransform(std::vector<bool> positive);
  static ParameterTransform identity(std::size_t dim);

  std::size_t dim() const noexcept { return positive_.size(); }
  bool is_positive(std::size_t d) const { return positive_.at(d); }

  /// Constrained -> unconstrained (log on positive coordinates).
  Eigen::VectorXd forward(const Eigen::VectorXd& constrained) const;
  /// Unconstrained -> constrained (exp on positive coordinates).
  Eigen::VectorXd inverse(const Eigen::VectorXd& unconstrained) const;
  /// log |det d inverse / d u|, i.e. the sum of the positive coordinates of u.
  double log_abs_jacobian(const Eigen::VectorXd& unconstrained) const;

 private:
  std::vector<bool> positive_;
};

/**
 * The pushforward of a constrained-space model to the unconstrained space:
 * log p_u(u) = log p(inverse(u)) + log_abs_jacobian(u).
 */
class TransformedModel final : public Model {
 public:
  TransformedModel(ModelPtr base, ParameterTransform transform);

  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name(); }
  double log_density(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v) const override;

  const Model& base() const noexcept { return *base_; }
  const ParameterTransform& transform() const noexcept { return transform_; }

 private:
  // d constrained / d u, coordinatewise.
  Eigen::VectorXd jacobian_diagonal(const Eigen::VectorXd& u) const;

  ModelPtr base_;
  ParameterTransform transform_;
};

ModelPtr transform_model(ModelPtr model, ParameterTransform transform);

/// One-dimensional HalfNormal(scale) density on (0, inf), normalized.
class HalfNormalModel final : public Model {
 public:
  explicit HalfNormalModel(double scale = 1.0);

  std::size_t dim() const override { return 1; }
  std::string name() const override { return "half_normal"; }
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x,
                      const Eigen::VectorXd& v) const override;

 private:
  double scale_;
};

}  // namespace dadvi

#endif  // DADVI_TRANSFORM_HPP

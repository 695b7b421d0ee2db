#ifndef DADVI_QOI_HPP
#define DADVI_QOI_HPP

#include "dadvi/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace dadvi {

/**
 * Scalar quantity of interest phi(theta) with its derivatives.
 *
 * The gradient is required by every moment-gradient computation; the
 * Hessian-vector product is only needed to build tilted models.
 */
class QuantityOfInterest {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using HvpFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                              const Eigen::VectorXd&)>;

  QuantityOfInterest(std::string name, ValueFn value, GradientFn gradient = {},
                     HvpFn hvp = {});

  const std::string& name() const noexcept { return name_; }
  double value(const Eigen::VectorXd& theta) const { return value_(theta); }
  bool differentiable() const noexcept { return static_cast<bool>(gradient_); }
  /// Throws UnsupportedQuantity when no gradient was supplied.
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  bool has_hvp() const noexcept { return static_cast<bool>(hvp_); }
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& v) const;

 private:
  std::string name_;
  ValueFn value_;
  GradientFn gradient_;
  HvpFn hvp_;
};

QuantityOfInterest coordinate_qoi(std::size_t index, std::size_t dim);
QuantityOfInterest coordinate_square_qoi(std::size_t index, std::size_t dim);
QuantityOfInterest linear_qoi(Eigen::VectorXd weights, std::string name = "");
QuantityOfInterest constant_qoi(double value, std::size_t dim);
/// logistic(theta_i - theta_j), e.g. a Bradley-Terry win probability.
QuantityOfInterest win_probability_qoi(std::size_t i, std::size_t j,
                                       std::size_t dim);

/// log p(theta) + t * phi(theta). Needs phi's Hessian-vector product.
class TiltedModel final : public Model {
 public:
  TiltedModel(ModelPtr base, QuantityOfInterest phi, double t);

  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "+tilt"; }
  double log_density(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& v) const override;

 private:
  ModelPtr base_;
  QuantityOfInterest phi_;
  double t_;
};

}  // namespace dadvi

#endif  // DADVI_QOI_HPP

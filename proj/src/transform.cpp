#include "dadvi/transform.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace dadvi {

ParameterTransform::ParameterTransform(std::vector<bool> positive)
    : positive_(std::move(positive)) {}

ParameterTransform ParameterTransform::identity(std::size_t dim) {
  return ParameterTransform(std::vector<bool>(dim, false));
}

Eigen::VectorXd ParameterTransform::forward(
    const Eigen::VectorXd& constrained) const {
  if (static_cast<std::size_t>(constrained.size()) != dim()) {
    throw ContractViolation("transform: dimension mismatch");
  }
  Eigen::VectorXd u = constrained;
  for (std::size_t d = 0; d < dim(); ++d) {
    if (positive_[d]) {
      const auto i = static_cast<Eigen::Index>(d);
      if (!(constrained[i] > 0.0)) {
        throw ContractViolation(fmt::format(
            "transform: coordinate {} must be positive, got {}", d,
            constrained[i]));
      }
      u[i] = std::log(constrained[i]);
    }
  }
  return u;
}

Eigen::VectorXd ParameterTransform::inverse(
    const Eigen::VectorXd& unconstrained) const {
  if (static_cast<std::size_t>(unconstrained.size()) != dim()) {
    throw ContractViolation("transform: dimension mismatch");
  }
  Eigen::VectorXd x = unconstrained;
  for (std::size_t d = 0; d < dim(); ++d) {
    if (positive_[d]) {
      const auto i = static_cast<Eigen::Index>(d);
      x[i] = std::exp(unconstrained[i]);
    }
  }
  return x;
}

double ParameterTransform::log_abs_jacobian(
    const Eigen::VectorXd& unconstrained) const {
  double total = 0.0;
  for (std::size_t d = 0; d < dim(); ++d) {
    if (positive_[d]) {
      total += unconstrained[static_cast<Eigen::Index>(d)];
    }
  }
  return total;
}

TransformedModel::TransformedModel(ModelPtr base, ParameterTransform transform)
    : base_(std::move(base)), transform_(std::move(transform)) {
  if (!base_) {
    throw ContractViolation("transform_model: null model");
  }
  if (transform_.dim() != base_->dim()) {
    throw ContractViolation(
        fmt::format("transform_model: transform has dimension {}, model {}",
                    transform_.dim(), base_->dim()));
  }
}

Eigen::VectorXd TransformedModel::jacobian_diagonal(
    const Eigen::VectorXd& u) const {
  Eigen::VectorXd jac = Eigen::VectorXd::Ones(u.size());
  for (std::size_t d = 0; d < transform_.dim(); ++d) {
    if (transform_.is_positive(d)) {
      const auto i = static_cast<Eigen::Index>(d);
      jac[i] = std::exp(u[i]);
    }
  }
  return jac;
}

double TransformedModel::log_density(const Eigen::VectorXd& u) const {
  check_dim(u);
  return base_->log_density(transform_.inverse(u)) +
         transform_.log_abs_jacobian(u);
}

Eigen::VectorXd TransformedModel::gradient(const Eigen::VectorXd& u) const {
  check_dim(u);
  const Eigen::VectorXd jac = jacobian_diagonal(u);
  Eigen::VectorXd g = base_->gradient(transform_.inverse(u)).cwiseProduct(jac);
  for (std::size_t d = 0; d < transform_.dim(); ++d) {
    if (transform_.is_positive(d)) {
      g[static_cast<Eigen::Index>(d)] += 1.0;
    }
  }
  return g;
}

Eigen::VectorXd TransformedModel::hvp(const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& v) const {
  check_dim(u);
  check_dim(v, "v");
  // H_u = J H_x J + diag(g_x * d2x/du2); for exp, d2x/du2 = dx/du = J.
  const Eigen::VectorXd jac = jacobian_diagonal(u);
  const Eigen::VectorXd x = transform_.inverse(u);
  Eigen::VectorXd out =
      base_->hvp(x, jac.cwiseProduct(v)).cwiseProduct(jac);
  const Eigen::VectorXd g = base_->gradient(x);
  for (std::size_t d = 0; d < transform_.dim(); ++d) {
    if (transform_.is_positive(d)) {
      const auto i = static_cast<Eigen::Index>(d);
      out[i] += g[i] * jac[i] * v[i];
    }
  }
  return out;
}

ModelPtr transform_model(ModelPtr model, ParameterTransform transform) {
  return std::make_shared<TransformedModel>(std::move(model),
                                            std::move(transform));
}

HalfNormalModel::HalfNormalModel(double scale) : scale_(scale) {
  if (!(scale > 0.0)) {
    throw InvalidConfiguration("half-normal scale must be positive");
  }
}

double HalfNormalModel::log_density(const Eigen::VectorXd& x) const {
  check_dim(x);
  const double t = x[0] / scale_;
  return 0.5 * std::log(2.0 / std::numbers::pi) - std::log(scale_) - 0.5 * t * t;
}

Eigen::VectorXd HalfNormalModel::gradient(const Eigen::VectorXd& x) const {
  check_dim(x);
  return Eigen::VectorXd::Constant(1, -x[0] / (scale_ * scale_));
}

Eigen::VectorXd HalfNormalModel::hvp(const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& v) const {
  check_dim(x);
  check_dim(v, "v");
  return -v / (scale_ * scale_);
}

}  // namespace dadvi

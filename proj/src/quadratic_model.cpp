#include "dadvi/quadratic_model.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dadvi {

QuadraticModel::QuadraticModel(Eigen::MatrixXd a, Eigen::VectorXd b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    throw InvalidConfiguration("quadratic model: A must be a non-empty square matrix");
  }
  if (b_.size() != a_.rows()) {
    throw InvalidConfiguration(fmt::format(
        "quadratic model: B has length {}, A is {}x{}", b_.size(), a_.rows(),
        a_.cols()));
  }
  const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidConfiguration("quadratic model: A is not symmetric");
  }
}

std::size_t QuadraticModel::dim() const {
  return static_cast<std::size_t>(b_.size());
}

double QuadraticModel::log_density(const Eigen::VectorXd& theta) const {
  check_dim(theta);
  return -0.5 * theta.dot(a_ * theta) + b_.dot(theta);
}

Eigen::VectorXd QuadraticModel::gradient(const Eigen::VectorXd& theta) const {
  check_dim(theta);
  return b_ - a_ * theta;
}

Eigen::VectorXd QuadraticModel::hvp(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& v) const {
  check_dim(theta);
  check_dim(v, "v");
  return -(a_ * v);
}

double quadratic_log_density(const QuadraticModel& model,
                             const Eigen::VectorXd& theta) {
  return model.log_density(theta);
}

}  // namespace dadvi

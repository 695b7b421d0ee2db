#include "dadvi/qoi.hpp"

#include "dadvi/bradley_terry_model.hpp"
#include "dadvi/errors.hpp"

#include <fmt/format.h>

namespace dadvi {

namespace {

void check_index(std::size_t index, std::size_t dim) {
  if (index >= dim) {
    throw ContractViolation(
        fmt::format("quantity index {} out of range for dimension {}", index, dim));
  }
}

}  // namespace

QuantityOfInterest::QuantityOfInterest(std::string name, ValueFn value,
                                       GradientFn gradient, HvpFn hvp)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hvp_(std::move(hvp)) {
  if (!value_) {
    throw ContractViolation("quantity of interest needs a value function");
  }
}

Eigen::VectorXd QuantityOfInterest::gradient(const Eigen::VectorXd& theta) const {
  if (!gradient_) {
    throw UnsupportedQuantity(
        fmt::format("quantity '{}' has no gradient", name_));
  }
  return gradient_(theta);
}

Eigen::VectorXd QuantityOfInterest::hvp(const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& v) const {
  if (!hvp_) {
    throw UnsupportedQuantity(
        fmt::format("quantity '{}' has no Hessian-vector product", name_));
  }
  return hvp_(theta, v);
}

QuantityOfInterest coordinate_qoi(std::size_t index, std::size_t dim) {
  check_index(index, dim);
  const auto i = static_cast<Eigen::Index>(index);
  const auto n = static_cast<Eigen::Index>(dim);
  return QuantityOfInterest(
      fmt::format("theta[{}]", index),
      [i](const Eigen::VectorXd& theta) { return theta[i]; },
      [i, n](const Eigen::VectorXd&) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = 1.0;
        return g;
      },
      [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(n).eval();
      });
}

QuantityOfInterest coordinate_square_qoi(std::size_t index, std::size_t dim) {
  check_index(index, dim);
  const auto i = static_cast<Eigen::Index>(index);
  const auto n = static_cast<Eigen::Index>(dim);
  return QuantityOfInterest(
      fmt::format("theta[{}]^2", index),
      [i](const Eigen::VectorXd& theta) { return theta[i] * theta[i]; },
      [i, n](const Eigen::VectorXd& theta) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[i] = 2.0 * theta[i];
        return g;
      },
      [i, n](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
        h[i] = 2.0 * v[i];
        return h;
      });
}

QuantityOfInterest linear_qoi(Eigen::VectorXd weights, std::string name) {
  if (name.empty()) {
    name = "linear";
  }
  const auto n = weights.size();
  return QuantityOfInterest(
      std::move(name),
      [weights](const Eigen::VectorXd& theta) { return weights.dot(theta); },
      [weights](const Eigen::VectorXd&) { return weights; },
      [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(n).eval();
      });
}

QuantityOfInterest constant_qoi(double value, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return QuantityOfInterest(
      "constant", [value](const Eigen::VectorXd&) { return value; },
      [n](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(n).eval(); },
      [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::VectorXd::Zero(n).eval();
      });
}

QuantityOfInterest win_probability_qoi(std::size_t i, std::size_t j,
                                       std::size_t dim) {
  check_index(i, dim);
  check_index(j, dim);
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  const auto n = static_cast<Eigen::Index>(dim);
  return QuantityOfInterest(
      fmt::format("P({} beats {})", i, j),
      [a, b](const Eigen::VectorXd& theta) { return logistic(theta[a] - theta[b]); },
      [a, b, n](const Eigen::VectorXd& theta) {
        const double p = logistic(theta[a] - theta[b]);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        g[a] = p * (1.0 - p);
        g[b] = -p * (1.0 - p);
        return g;
      },
      [a, b, n](const Eigen::VectorXd& theta, const Eigen::VectorXd& v) {
        const double p = logistic(theta[a] - theta[b]);
        const double second = p * (1.0 - p) * (1.0 - 2.0 * p);
        const double dv = v[a] - v[b];
        Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
        h[a] = second * dv;
        h[b] = -second * dv;
        return h;
      });
}

TiltedModel::TiltedModel(ModelPtr base, QuantityOfInterest phi, double t)
    : base_(std::move(base)), phi_(std::move(phi)), t_(t) {
  if (!phi_.differentiable() || !phi_.has_hvp()) {
    throw UnsupportedQuantity(fmt::format(
        "tilting by '{}' needs its gradient and Hessian-vector product",
        phi_.name()));
  }
}

double TiltedModel::log_density(const Eigen::VectorXd& theta) const {
  return base_->log_density(theta) + t_ * phi_.value(theta);
}

Eigen::VectorXd TiltedModel::gradient(const Eigen::VectorXd& theta) const {
  return base_->gradient(theta) + t_ * phi_.gradient(theta);
}

Eigen::VectorXd TiltedModel::hvp(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& v) const {
  return base_->hvp(theta, v) + t_ * phi_.hvp(theta, v);
}

}  // namespace dadvi

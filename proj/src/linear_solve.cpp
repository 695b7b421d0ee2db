#include "dadvi/linear_solve.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dadvi {

LinearOperator::LinearOperator(std::size_t size, Apply apply)
    : size_(size), apply_(std::move(apply)) {
  if (!apply_) {
    throw ContractViolation("linear operator needs an apply function");
  }
}

Eigen::VectorXd LinearOperator::operator()(const Eigen::VectorXd& v) const {
  if (v.size() != static_cast<Eigen::Index>(size_)) {
    throw ContractViolation(fmt::format(
        "linear operator of size {} applied to vector of length {}", size_, v.size()));
  }
  return apply_(v);
}

LinearOperator dense_operator(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw ContractViolation("dense operator must be square");
  }
  return LinearOperator(static_cast<std::size_t>(matrix.rows()),
                        [matrix](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                          return matrix * v;
                        });
}

CGResult cg_solve(const LinearOperator& h, const Eigen::VectorXd& b,
                  const CGConfig& config,
                  const std::optional<Eigen::VectorXd>& preconditioner) {
  const auto n = static_cast<Eigen::Index>(h.size());
  if (b.size() != n) {
    throw ContractViolation(fmt::format(
        "cg_solve: right-hand side has length {}, operator size {}", b.size(), n));
  }
  if (!(config.tolerance > 0.0)) {
    throw InvalidConfiguration("CG tolerance must be positive");
  }
  if (preconditioner) {
    if (preconditioner->size() != n || !(preconditioner->array() > 0.0).all()) {
      throw ContractViolation("preconditioner must be a positive diagonal of matching size");
    }
  }
  const std::size_t budget =
      config.max_iterations == 0 ? 10 * static_cast<std::size_t>(n) : config.max_iterations;
  auto apply_precond = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return preconditioner ? Eigen::VectorXd(preconditioner->cwiseProduct(r)) : r;
  };

  CGResult result{Eigen::VectorXd::Zero(n), 0, 0.0};
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    return result;
  }
  const double target = config.tolerance * b_norm;

  Eigen::VectorXd& x = result.x;
  Eigen::VectorXd best = x;
  double best_residual = b_norm;
  Eigen::VectorXd r = b;

  while (true) {
    // (Re)start from the current x with its true residual.
    Eigen::VectorXd z = apply_precond(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double r_norm = r.norm();
    while (r_norm > target && result.iterations < budget) {
      const Eigen::VectorXd hp = h(p);
      const double curvature = p.dot(hp);
      if (!(curvature > 0.0) || !std::isfinite(curvature)) {
        throw LinearSolveFailure(fmt::format(
            "CG met non-positive curvature {} at iteration {}", curvature,
            result.iterations));
      }
      const double alpha = rz / curvature;
      x += alpha * p;
      r -= alpha * hp;
      ++result.iterations;
      r_norm = r.norm();
      z = apply_precond(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    r = b - h(x);
    const double true_norm = r.norm();
    if (true_norm < best_residual) {
      best_residual = true_norm;
      best = x;
    }
    if (true_norm <= target) {
      result.relative_residual = true_norm / b_norm;
      return result;
    }
    if (result.iterations >= budget) {
      throw CgNotConverged(
          fmt::format("CG did not reach relative residual {} in {} iterations "
                      "(reached {})",
                      config.tolerance, result.iterations, best_residual / b_norm),
          best, best_residual / b_norm, result.iterations);
    }
  }
}

}  // namespace dadvi

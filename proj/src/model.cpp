#include "dadvi/model.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

namespace dadvi {

void Model::check_dim(const Eigen::VectorXd& x, const char* what) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    throw ContractViolation(fmt::format("{}: {} has length {}, expected {}",
                                        name(), what, x.size(), dim()));
  }
}

Eigen::VectorXd GlobalLocalModel::global_block(
    const Eigen::VectorXd& theta) const {
  check_dim(theta);
  return theta.head(static_cast<Eigen::Index>(global_dim()));
}

Eigen::VectorXd GlobalLocalModel::local_block(const Eigen::VectorXd& theta,
                                              std::size_t p) const {
  check_dim(theta);
  if (p >= num_local()) {
    throw ContractViolation(
        fmt::format("local block {} out of range ({} blocks)", p, num_local()));
  }
  const auto start = static_cast<Eigen::Index>(global_dim() + p * local_dim());
  return theta.segment(start, static_cast<Eigen::Index>(local_dim()));
}

double GlobalLocalModel::decomposed_log_density(
    const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd gamma = global_block(theta);
  double total = 0.0;
  for (std::size_t p = 0; p < num_local(); ++p) {
    total += local_term(gamma, local_block(theta, p), p);
  }
  return total + global_term(gamma);
}

}  // namespace dadvi

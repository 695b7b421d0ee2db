#ifndef DADVI_HIERARCHICAL_MODEL_HPP
#define DADVI_HIERARCHICAL_MODEL_HPP

#include "dadvi/model.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace dadvi {

/**
 * Random-effects normal model with global-local structure:
 *
 *   y_p ~ Normal(lambda_p, 1),  lambda_p ~ Normal(m, tau^2),
 *   m ~ Normal(0, 1),           tau ~ HalfNormal(1).
 *
 * The unconstrained parameter is theta = (m, log tau, lambda_1..lambda_P);
 * the log-Jacobian of tau = exp(log tau) is part of the global term.
 */
class HierarchicalModel final : public GlobalLocalModel {
 public:
  /// Data-generating values shared by every synthesized instance.
  static constexpr double kTrueMean = 0.5;
  static constexpr double kTrueScale = 1.0;

  explicit HierarchicalModel(std::vector<double> observations);

  std::string name() const override { return "hierarchical"; }
  std::size_t global_dim() const override { return 2; }
  std::size_t local_dim() const override { return 1; }
  std::size_t num_local() const override { return y_.size(); }

  double local_term(const Eigen::VectorXd& gamma,
                    const Eigen::VectorXd& lambda,
                    std::size_t p) const override;
  double global_term(const Eigen::VectorXd& gamma) const override;

  double log_density(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& theta,
                      const Eigen::VectorXd& v) const override;

  const std::vector<double>& observations() const noexcept { return y_; }

 private:
  std::vector<double> y_;
};

/// Synthesizes P observations from the seed. Throws InvalidConfiguration
/// when P = 0.
std::shared_ptr<HierarchicalModel> instantiate_hierarchical(
    std::size_t num_groups, std::uint64_t seed);

}  // namespace dadvi

#endif  // DADVI_HIERARCHICAL_MODEL_HPP

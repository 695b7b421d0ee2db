#ifndef DADVI_VARIATIONAL_HPP
#define DADVI_VARIATIONAL_HPP

#include "dadvi/draws.hpp"
#include "dadvi/qoi.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace dadvi {

/**
 * Mean-field Gaussian q(theta | eta) = prod_d Normal(mu_d, exp(xi_d)^2).
 *
 * The flat variational vector is eta = (mu, xi) of length 2 * dim().
 */
struct MeanFieldParams {
  Eigen::VectorXd mu;
  Eigen::VectorXd xi;

  static MeanFieldParams zeros(std::size_t dim);
  /// Splits eta = (mu, xi); throws ContractViolation on odd length.
  static MeanFieldParams unpack(const Eigen::VectorXd& eta);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()); }
  Eigen::VectorXd pack() const;
  Eigen::VectorXd sigma() const { return xi.array().exp().matrix(); }
  /// Throws ContractViolation on mismatched lengths or non-finite entries.
  void validate() const;
};

/// Full-rank Gaussian with theta = mu + R z, Cov = R R'.
struct FullRankParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd r;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()); }
  /// The mean-field distribution as a diagonal R.
  static FullRankParams from_mean_field(const MeanFieldParams& params);
};

/// mu + z .* exp(xi).
Eigen::VectorXd reparameterize(const MeanFieldParams& params,
                               const Eigen::VectorXd& z);
/// mu + R z.
Eigen::VectorXd reparameterize_fullrank(const FullRankParams& params,
                                        const Eigen::VectorXd& z);

/// -sum_d xi_d: the entropy contribution to the objective, constants dropped.
double negative_entropy_term(const MeanFieldParams& params);

/// (1/N) sum_n phi(theta(eta, z_n)), the fixed-draw estimate of E_q[phi].
double saa_moment(const QuantityOfInterest& phi, const MeanFieldParams& params,
                  const DrawSet& draws);

/**
 * Gradient in eta = (mu, xi) of the fixed-draw moment (1/N) sum_n
 * phi(theta(eta, z_n)):
 *   mu-block = (1/N) sum_n grad phi(theta_n),
 *   xi-block = (1/N) sum_n grad phi(theta_n) .* sigma .* z_n.
 * Throws UnsupportedQuantity if phi has no gradient.
 */
Eigen::VectorXd saa_moment_gradient(const QuantityOfInterest& phi,
                                    const MeanFieldParams& params,
                                    const DrawSet& draws);

/**
 * Packing of a lower-triangular full-rank R for unconstrained optimization:
 * (mu, log diag R, strictly-lower entries row by row). With diagonal_only the
 * off-diagonal block is absent and the layout coincides with mean-field eta.
 */
class FullRankLayout {
 public:
  FullRankLayout(std::size_t dim, bool diagonal_only);

  std::size_t dim() const noexcept { return dim_; }
  bool diagonal_only() const noexcept { return diagonal_only_; }
  std::size_t size() const noexcept;

  Eigen::VectorXd pack(const FullRankParams& params) const;
  FullRankParams unpack(const Eigen::VectorXd& packed) const;

 private:
  std::size_t dim_;
  bool diagonal_only_;
};

}  // namespace dadvi

#endif  // DADVI_VARIATIONAL_HPP

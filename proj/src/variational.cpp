#include "dadvi/variational.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dadvi {

namespace {

void check_draw_dim(std::size_t params_dim, const DrawSet& draws) {
  if (draws.dim() != params_dim) {
    throw ContractViolation(fmt::format(
        "draws have dimension {}, parameters {}", draws.dim(), params_dim));
  }
}

}  // namespace

MeanFieldParams MeanFieldParams::zeros(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

MeanFieldParams MeanFieldParams::unpack(const Eigen::VectorXd& eta) {
  if (eta.size() % 2 != 0) {
    throw ContractViolation("mean-field eta must have even length");
  }
  const auto d = eta.size() / 2;
  return {eta.head(d), eta.tail(d)};
}

Eigen::VectorXd MeanFieldParams::pack() const {
  Eigen::VectorXd eta(mu.size() + xi.size());
  eta << mu, xi;
  return eta;
}

void MeanFieldParams::validate() const {
  if (mu.size() != xi.size() || mu.size() == 0) {
    throw ContractViolation(fmt::format(
        "mean-field params: mu has length {}, xi {}", mu.size(), xi.size()));
  }
  if (!mu.allFinite() || !xi.allFinite()) {
    throw ContractViolation("mean-field params contain non-finite entries");
  }
}

FullRankParams FullRankParams::from_mean_field(const MeanFieldParams& params) {
  return {params.mu, params.sigma().asDiagonal().toDenseMatrix()};
}

Eigen::VectorXd reparameterize(const MeanFieldParams& params,
                               const Eigen::VectorXd& z) {
  if (z.size() != params.mu.size() || params.xi.size() != params.mu.size()) {
    throw ContractViolation(fmt::format(
        "reparameterize: z has length {}, params {}", z.size(), params.mu.size()));
  }
  return params.mu + z.cwiseProduct(params.sigma());
}

Eigen::VectorXd reparameterize_fullrank(const FullRankParams& params,
                                        const Eigen::VectorXd& z) {
  if (z.size() != params.mu.size() || params.r.rows() != params.mu.size() ||
      params.r.cols() != params.mu.size()) {
    throw ContractViolation("reparameterize_fullrank: dimension mismatch");
  }
  return params.mu + params.r * z;
}

double negative_entropy_term(const MeanFieldParams& params) {
  return -params.xi.sum();
}

double saa_moment(const QuantityOfInterest& phi, const MeanFieldParams& params,
                  const DrawSet& draws) {
  check_draw_dim(params.dim(), draws);
  double total = 0.0;
  for (std::size_t n = 0; n < draws.num_draws(); ++n) {
    total += phi.value(reparameterize(params, draws.draw(n)));
  }
  return total / static_cast<double>(draws.num_draws());
}

Eigen::VectorXd saa_moment_gradient(const QuantityOfInterest& phi,
                                    const MeanFieldParams& params,
                                    const DrawSet& draws) {
  check_draw_dim(params.dim(), draws);
  if (!phi.differentiable()) {
    throw UnsupportedQuantity(
        fmt::format("quantity '{}' is not differentiable", phi.name()));
  }
  const auto d = static_cast<Eigen::Index>(params.dim());
  const Eigen::VectorXd sigma = params.sigma();
  Eigen::VectorXd grad_mu = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad_xi = Eigen::VectorXd::Zero(d);
  for (std::size_t n = 0; n < draws.num_draws(); ++n) {
    const Eigen::VectorXd z = draws.draw(n);
    const Eigen::VectorXd g = phi.gradient(params.mu + z.cwiseProduct(sigma));
    grad_mu += g;
    grad_xi += g.cwiseProduct(sigma).cwiseProduct(z);
  }
  const double inv_n = 1.0 / static_cast<double>(draws.num_draws());
  Eigen::VectorXd out(2 * d);
  out << grad_mu * inv_n, grad_xi * inv_n;
  return out;
}

FullRankLayout::FullRankLayout(std::size_t dim, bool diagonal_only)
    : dim_(dim), diagonal_only_(diagonal_only) {
  if (dim_ == 0) {
    throw ContractViolation("full-rank layout needs dimension >= 1");
  }
}

std::size_t FullRankLayout::size() const noexcept {
  const std::size_t off = diagonal_only_ ? 0 : dim_ * (dim_ - 1) / 2;
  return 2 * dim_ + off;
}

Eigen::VectorXd FullRankLayout::pack(const FullRankParams& params) const {
  if (params.dim() != dim_) {
    throw ContractViolation("full-rank layout: dimension mismatch");
  }
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::VectorXd packed(static_cast<Eigen::Index>(size()));
  packed.head(d) = params.mu;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(params.r(i, i) > 0.0)) {
      throw ContractViolation("full-rank layout: diagonal of R must be positive");
    }
    packed[d + i] = std::log(params.r(i, i));
  }
  if (!diagonal_only_) {
    Eigen::Index k = 2 * d;
    for (Eigen::Index i = 1; i < d; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        packed[k++] = params.r(i, j);
      }
    }
  }
  return packed;
}

FullRankParams FullRankLayout::unpack(const Eigen::VectorXd& packed) const {
  if (packed.size() != static_cast<Eigen::Index>(size())) {
    throw ContractViolation("full-rank layout: packed vector has wrong length");
  }
  const auto d = static_cast<Eigen::Index>(dim_);
  FullRankParams params{packed.head(d), Eigen::MatrixXd::Zero(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    params.r(i, i) = std::exp(packed[d + i]);
  }
  if (!diagonal_only_) {
    Eigen::Index k = 2 * d;
    for (Eigen::Index i = 1; i < d; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        params.r(i, j) = packed[k++];
      }
    }
  }
  return params;
}

}  // namespace dadvi

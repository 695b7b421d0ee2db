#include "dadvi/posterior.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace dadvi {

namespace {

struct Solved {
  Eigen::VectorXd gradient;  // fixed-draw moment gradient
  Eigen::VectorXd x;         // H^-1 gradient
  std::size_t iterations = 0;
};

Solved solve_for(const QuantityOfInterest& phi, const MeanFieldParams& eta_hat,
                 const ObjectiveBundle& bundle, const PosteriorConfig& config) {
  Solved out;
  out.gradient = saa_moment_gradient(phi, eta_hat, bundle.draws());
  const HessianOperator h(bundle, eta_hat);
  std::optional<Eigen::VectorXd> precond;
  if (config.cg.precondition) {
    precond = dadvi_preconditioner(eta_hat);
  }
  const CGResult cg = cg_solve(h.as_operator(), out.gradient, config.cg, precond);
  out.x = cg.x;
  out.iterations = cg.iterations;
  return out;
}

void maybe_verify(const MeanFieldParams& eta_hat, const ObjectiveBundle& bundle,
                  const PosteriorConfig& config) {
  if (config.verify) {
    verify_optimum(eta_hat, bundle, config.optimum_gtol, config.curvature_probes,
                   config.probe_seed);
  }
}

// x' Gamma x / N = (1/N^2) sum_n (g_n' x)^2, streamed over draws.
double sandwich_variance(const Eigen::VectorXd& x, const MeanFieldParams& eta_hat,
                         const ObjectiveBundle& bundle) {
  const Eigen::VectorXd sum = bundle.sum_over_draws(1, [&](std::size_t n, Eigen::VectorXd& acc) {
    const double proj = single_draw_gradient(eta_hat, n, bundle).dot(x);
    acc[0] += proj * proj;
  });
  const double inv_n = 1.0 / static_cast<double>(bundle.num_draws());
  return sum[0] * inv_n * inv_n;
}

}  // namespace

HessianOperator::HessianOperator(const ObjectiveBundle& bundle, MeanFieldParams eta_hat)
    : bundle_(bundle), eta_hat_(std::move(eta_hat)) {
  eta_hat_.validate();
  if (eta_hat_.dim() != bundle.model().dim()) {
    throw ContractViolation("Hessian operator: parameters do not match the model");
  }
}

Eigen::VectorXd HessianOperator::apply(const Eigen::VectorXd& v) const {
  return saa_hvp(eta_hat_, v, bundle_);
}

LinearOperator HessianOperator::as_operator() const {
  return LinearOperator(size(), [this](const Eigen::VectorXd& v) { return apply(v); });
}

Eigen::MatrixXd HessianOperator::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    h.col(k) = apply(Eigen::VectorXd::Unit(n, k));
  }
  return h;
}

Eigen::VectorXd dadvi_preconditioner(const MeanFieldParams& eta_hat) {
  eta_hat.validate();
  const auto d = static_cast<Eigen::Index>(eta_hat.dim());
  Eigen::VectorXd diag(2 * d);
  diag.head(d) = (2.0 * eta_hat.xi.array()).exp().matrix();
  diag.tail(d).setOnes();
  return diag;
}

void verify_optimum(const MeanFieldParams& eta_hat, const ObjectiveBundle& bundle,
                    double gtol, std::size_t probes, std::uint64_t seed) {
  const double grad_norm = saa_gradient(eta_hat, bundle).norm();
  if (!(grad_norm <= gtol)) {
    throw NotAtOptimum(
        fmt::format("gradient norm {:.3g} exceeds {:.3g}; post-processing needs "
                    "a converged fit",
                    grad_norm, gtol),
        grad_norm);
  }
  const auto n = static_cast<Eigen::Index>(2 * eta_hat.dim());
  for (std::size_t k = 0; k < probes; ++k) {
    NormalStream stream(derive_seed(seed, Stream::kCurvatureProbes, k));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = stream.next();
    }
    const double curvature = v.dot(saa_hvp(eta_hat, v, bundle));
    if (!(curvature > 0.0)) {
      throw NotAtOptimum(
          fmt::format("curvature probe {} found v'Hv = {:.3g}; not a local minimum",
                      k, curvature),
          grad_norm);
    }
  }
}

double lr_covariance(const QuantityOfInterest& phi1, const QuantityOfInterest& phi2,
                     const MeanFieldParams& eta_hat, const ObjectiveBundle& bundle,
                     const PosteriorConfig& config) {
  maybe_verify(eta_hat, bundle, config);
  const Eigen::VectorXd g1 = saa_moment_gradient(phi1, eta_hat, bundle.draws());
  const Solved s2 = solve_for(phi2, eta_hat, bundle, config);
  return g1.dot(s2.x);
}

Eigen::MatrixXd lr_covariance_matrix(const std::vector<QuantityOfInterest>& quantities,
                                     const MeanFieldParams& eta_hat,
                                     const ObjectiveBundle& bundle,
                                     const PosteriorConfig& config) {
  maybe_verify(eta_hat, bundle, config);
  const auto q = static_cast<Eigen::Index>(quantities.size());
  const auto n = static_cast<Eigen::Index>(2 * eta_hat.dim());
  Eigen::MatrixXd g(n, q);
  Eigen::MatrixXd x(n, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const Solved s = solve_for(quantities[static_cast<std::size_t>(k)], eta_hat, bundle, config);
    g.col(k) = s.gradient;
    x.col(k) = s.x;
  }
  const Eigen::MatrixXd cov = g.transpose() * x;
  return 0.5 * (cov + cov.transpose());
}

double mc_error(const QuantityOfInterest& phi, const MeanFieldParams& eta_hat,
                const ObjectiveBundle& bundle, const PosteriorConfig& config) {
  maybe_verify(eta_hat, bundle, config);
  const Solved s = solve_for(phi, eta_hat, bundle, config);
  if (s.x.isZero(0.0)) {
    return 0.0;
  }
  return std::sqrt(sandwich_variance(s.x, eta_hat, bundle));
}

QoIReport build_qoi_report(const std::vector<QuantityOfInterest>& quantities,
                           const MeanFieldParams& eta_hat,
                           const ObjectiveBundle& bundle,
                           const PosteriorConfig& config) {
  maybe_verify(eta_hat, bundle, config);
  const Eigen::VectorXd sigma = eta_hat.sigma();
  QoIReport report;
  for (const auto& phi : quantities) {
    QoIRow row;
    row.name = phi.name();
    row.mean = std::numeric_limits<double>::quiet_NaN();
    try {
      row.mean = saa_moment(phi, eta_hat, bundle.draws());
      row.mf_sd = phi.gradient(eta_hat.mu).cwiseProduct(sigma).norm();
      const Solved s = solve_for(phi, eta_hat, bundle, config);
      row.cg_iters = s.iterations;
      row.lr_sd = std::sqrt(std::max(0.0, s.gradient.dot(s.x)));
      row.mc_se = s.x.isZero(0.0) ? 0.0 : std::sqrt(sandwich_variance(s.x, eta_hat, bundle));
      row.se_flag = row.mc_se > config.se_flag_fraction * row.lr_sd;
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.mf_sd = row.lr_sd = row.mc_se = nan;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace dadvi

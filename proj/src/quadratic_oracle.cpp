#include "dadvi/quadratic_oracle.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dadvi {

namespace {

void check_draws(const QuadraticModel& model, const DrawSet& draws) {
  if (draws.dim() != model.dim()) {
    throw ContractViolation(fmt::format("draws have dimension {}, model {}",
                                        draws.dim(), model.dim()));
  }
  if (draws.num_draws() < 2) {
    throw DegenerateDraws("closed-form SAA optimum needs at least two draws");
  }
}

Eigen::VectorXd exact_mean(const QuadraticModel& model) {
  const Eigen::LLT<Eigen::MatrixXd> llt(model.a());
  if (llt.info() != Eigen::Success) {
    throw LinearSolveFailure("A is not positive definite");
  }
  return llt.solve(model.b());
}

double profile_value(const Eigen::MatrixXd& m, const Eigen::VectorXd& s) {
  return 0.5 * s.dot(m * s) - s.array().log().sum();
}

}  // namespace

Eigen::MatrixXd draw_covariance(const DrawSet& draws) {
  const DrawMatrix& z = draws.matrix();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(draws.num_draws());
}

MeanFieldParams quadratic_exact_optimum(const QuadraticModel& model) {
  const Eigen::VectorXd diag = model.a().diagonal();
  return {exact_mean(model), -0.5 * diag.array().log().matrix()};
}

MeanFieldParams quadratic_saa_optimum(const QuadraticModel& model,
                                      const DrawSet& draws) {
  check_draws(model, draws);
  const Eigen::MatrixXd c = draw_covariance(draws);
  for (Eigen::Index d = 0; d < c.rows(); ++d) {
    if (!(c(d, d) > 0.0)) {
      throw DegenerateDraws(
          fmt::format("draws have zero sample variance in coordinate {}", d));
    }
  }
  const Eigen::MatrixXd m = model.a().cwiseProduct(c);

  // Damped Newton on the convex profile, started from the diagonal solution.
  Eigen::VectorXd s = m.diagonal().cwiseSqrt().cwiseInverse();
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd inv = s.cwiseInverse();
    const Eigen::VectorXd grad = m * s - inv;
    if (grad.cwiseProduct(s).lpNorm<Eigen::Infinity>() < 1e-15) {
      break;
    }
    Eigen::MatrixXd hess = m;
    hess.diagonal() += inv.cwiseAbs2();
    const Eigen::VectorXd step = -hess.llt().solve(grad);
    double t = 1.0;
    // Stay strictly positive, then backtrack on the profile value.
    for (Eigen::Index d = 0; d < s.size(); ++d) {
      if (step[d] < 0.0) {
        t = std::min(t, -0.9 * s[d] / step[d]);
      }
    }
    const double f0 = profile_value(m, s);
    const double slope = grad.dot(step);
    while (t > 1e-12 && profile_value(m, s + t * step) > f0 + 1e-4 * t * slope) {
      t *= 0.5;
    }
    const Eigen::VectorXd next = s + t * step;
    if ((next - s).lpNorm<Eigen::Infinity>() <= 1e-17 * s.lpNorm<Eigen::Infinity>()) {
      s = next;
      break;
    }
    s = next;
  }

  const Eigen::VectorXd zbar = draws.mean();
  return {exact_mean(model) - s.cwiseProduct(zbar), s.array().log().matrix()};
}

Eigen::VectorXd quadratic_saa_sigma_in_distribution(const QuadraticModel& model,
                                                    const DrawSet& draws) {
  check_draws(model, draws);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.a());
  const Eigen::MatrixXd root = eig.operatorSqrt();
  const Eigen::VectorXd precision = (root * draw_covariance(draws) * root).diagonal();
  for (Eigen::Index d = 0; d < precision.size(); ++d) {
    if (!(precision[d] > 0.0)) {
      throw DegenerateDraws(
          fmt::format("rotated draws have zero variance in coordinate {}", d));
    }
  }
  return precision.cwiseSqrt().cwiseInverse();
}

double quadratic_exact_objective(const QuadraticModel& model,
                                 const MeanFieldParams& eta) {
  const Eigen::VectorXd var = eta.sigma().cwiseAbs2();
  return 0.5 * eta.mu.dot(model.a() * eta.mu) +
         0.5 * model.a().diagonal().dot(var) - model.b().dot(eta.mu) -
         eta.xi.sum();
}

}  // namespace dadvi

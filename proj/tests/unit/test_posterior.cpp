#include "dadvi/bradley_terry_model.hpp"
#include "dadvi/draws.hpp"
#include "dadvi/errors.hpp"
#include "dadvi/hierarchical_model.hpp"
#include "dadvi/optimize.hpp"
#include "dadvi/posterior.hpp"
#include "dadvi/qoi.hpp"
#include "dadvi/quadratic_model.hpp"
#include "dadvi/quadratic_oracle.hpp"
#include "dadvi/random.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dadvi {
namespace {

DrawSet fit_draws(std::uint64_t seed, std::size_t n, std::size_t d) {
  return sample_draws(derive_seed(seed, Stream::kDraws), n, d);
}

/// Draws with zero sample mean and identity (1/N) sample covariance, so the
/// SAA optimum of a quadratic model coincides with the exact one.
DrawSet whitened_draws(std::uint64_t seed, std::size_t n, std::size_t d) {
  const DrawSet raw = sample_draws(seed, n, d);
  const Eigen::MatrixXd centered = raw.matrix().rowwise() - raw.matrix().colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  const Eigen::MatrixXd l = cov.llt().matrixL();
  const Eigen::MatrixXd white = l.triangularView<Eigen::Lower>()
                                    .solve(centered.transpose())
                                    .transpose();
  return DrawSet(seed, white);
}

MeanFieldParams tight_fit(const ObjectiveBundle& bundle) {
  OptimizerConfig config;
  config.gtol = 1e-10;
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(bundle.model().dim()), config);
  EXPECT_TRUE(fit.converged);
  return fit.eta_hat;
}

Eigen::MatrixXd coupled_precision() {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  return a;
}

TEST(LrCovariance, QuadraticVarianceIsExactForEveryDrawSet) {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd a = testing::random_spd(rng, 4, 20.0);
  const auto model = std::make_shared<const QuadraticModel>(a, testing::gaussian_vector(rng, 4));
  const Eigen::MatrixXd a_inv = a.inverse();
  for (std::uint64_t seed : {1, 2, 3}) {
    for (std::size_t n : {2, 7, 30}) {
      const ObjectiveBundle bundle(model, fit_draws(seed, n, 4));
      const MeanFieldParams eta = tight_fit(bundle);
      for (std::size_t d = 0; d < 4; ++d) {
        const QuantityOfInterest phi = coordinate_qoi(d, 4);
        const auto i = static_cast<Eigen::Index>(d);
        EXPECT_NEAR(lr_covariance(phi, phi, eta, bundle), a_inv(i, i), 1e-6)
            << "seed " << seed << " N " << n;
      }
    }
  }
}

TEST(LrCovariance, HandInvertedOffDiagonal) {
  const auto model = std::make_shared<const QuadraticModel>(coupled_precision(), Eigen::Vector2d::Zero());
  const ObjectiveBundle bundle(model, fit_draws(8, 30, 2));
  const MeanFieldParams eta = tight_fit(bundle);
  EXPECT_NEAR(lr_covariance(coordinate_qoi(0, 2), coordinate_qoi(1, 2), eta, bundle), -1.0 / 3.0,
              1e-6);
}

TEST(LrCovariance, SymmetricAndPositiveSemiDefinite) {
  const ModelPtr model = make_bradley_terry(5, 10, 0);
  const ObjectiveBundle bundle(model, fit_draws(1, 20, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  const std::vector<QuantityOfInterest> quantities{
      coordinate_qoi(0, 6), coordinate_qoi(5, 6), win_probability_qoi(0, 1, 6),
      coordinate_square_qoi(2, 6)};
  const double ab = lr_covariance(quantities[0], quantities[2], eta, bundle);
  const double ba = lr_covariance(quantities[2], quantities[0], eta, bundle);
  EXPECT_NEAR(ab, ba, 1e-8 * std::max(1.0, std::abs(ab)));
  for (const auto& phi : quantities) {
    EXPECT_GE(lr_covariance(phi, phi, eta, bundle), 0.0) << phi.name();
  }
  const Eigen::MatrixXd cov = lr_covariance_matrix(quantities, eta, bundle);
  EXPECT_EQ(cov, cov.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST(LrCovariance, MatchesTheDenseHessianSolve) {
  const auto model = instantiate_hierarchical(8, 3);
  const ObjectiveBundle bundle(model, fit_draws(2, 25, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  const Eigen::MatrixXd h = HessianOperator(bundle, eta).dense();
  EXPECT_LE((h - h.transpose()).norm(), 1e-10 * h.norm());
  const QuantityOfInterest phi1 = coordinate_qoi(0, model->dim());
  const QuantityOfInterest phi2 = coordinate_square_qoi(4, model->dim());
  const Eigen::VectorXd g1 = saa_moment_gradient(phi1, eta, bundle.draws());
  const Eigen::VectorXd g2 = saa_moment_gradient(phi2, eta, bundle.draws());
  const double dense = g1.dot(h.ldlt().solve(g2));
  EXPECT_LE(testing::relative_error(lr_covariance(phi1, phi2, eta, bundle), dense), 1e-8);
}

TEST(LrCovariance, MatchesTheDerivativeOfATiltedFit) {
  const auto model = instantiate_hierarchical(5, 6);
  const DrawSet draws = fit_draws(4, 30, model->dim());
  const ObjectiveBundle bundle(model, draws);
  const MeanFieldParams eta = tight_fit(bundle);
  const QuantityOfInterest phi1 = coordinate_qoi(0, model->dim());
  const QuantityOfInterest phi2 = coordinate_qoi(3, model->dim());
  const double t = 1e-4;
  OptimizerConfig config;
  config.gtol = 1e-12;
  auto tilted_mean = [&](double tilt) {
    const ObjectiveBundle tb(std::make_shared<TiltedModel>(model, phi2, tilt), draws);
    const FitResult fit = dadvi_fit(tb, eta, config);
    EXPECT_TRUE(fit.converged);
    return saa_moment(phi1, fit.eta_hat, draws);
  };
  const double fd = (tilted_mean(t) - tilted_mean(-t)) / (2.0 * t);
  EXPECT_LE(testing::relative_error(lr_covariance(phi1, phi2, eta, bundle), fd), 1e-3);
}

TEST(LrCovariance, RefusesAPointThatIsNotAnOptimum) {
  const auto model = std::make_shared<const QuadraticModel>(coupled_precision(), Eigen::Vector2d::Zero());
  const ObjectiveBundle bundle(model, fit_draws(8, 30, 2));
  MeanFieldParams eta = tight_fit(bundle);
  eta.mu[0] += 0.1;
  try {
    lr_covariance(coordinate_qoi(0, 2), coordinate_qoi(0, 2), eta, bundle);
    FAIL() << "expected NotAtOptimum";
  } catch (const NotAtOptimum& e) {
    EXPECT_GT(e.gradient_norm(), 1e-6);
  }
}

TEST(VerifyOptimum, DetectsNegativeCurvature) {
  // With A = -I every direction has negative curvature; the gradient check is
  // disabled through the tolerance so only the probes can refuse the point.
  const auto model = std::make_shared<const QuadraticModel>(-Eigen::MatrixXd::Identity(2, 2),
                                                            Eigen::Vector2d::Zero());
  const ObjectiveBundle bundle(model, whitened_draws(3, 10, 2));
  EXPECT_THROW(verify_optimum(MeanFieldParams::zeros(2), bundle, 1e300), NotAtOptimum);
}

TEST(VerifyOptimum, AcceptsAConvergedFit) {
  const auto model = instantiate_hierarchical(5, 0);
  const ObjectiveBundle bundle(model, fit_draws(2, 10, model->dim()));
  EXPECT_NO_THROW(verify_optimum(tight_fit(bundle), bundle));
}

TEST(McError, ConstantQuantityHasZeroError) {
  const auto model = instantiate_hierarchical(6, 1);
  const ObjectiveBundle bundle(model, fit_draws(1, 12, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  EXPECT_EQ(mc_error(constant_qoi(3.0, model->dim()), eta, bundle), 0.0);
}

TEST(McError, MatchesTheSandwichFormula) {
  const auto model = instantiate_hierarchical(4, 2);
  const ObjectiveBundle bundle(model, fit_draws(5, 15, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  const QuantityOfInterest phi = coordinate_qoi(0, model->dim());
  const Eigen::MatrixXd h = HessianOperator(bundle, eta).dense();
  const Eigen::VectorXd x = h.ldlt().solve(saa_moment_gradient(phi, eta, bundle.draws()));
  // Covariance of the per-draw gradients, 1/N normalized, sandwiched by H^-1.
  const auto n = bundle.num_draws();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), x.size());
  for (std::size_t k = 0; k < n; ++k) {
    g.row(static_cast<Eigen::Index>(k)) = single_draw_gradient(eta, k, bundle).transpose();
  }
  const Eigen::MatrixXd centered = g.rowwise() - g.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  const double expected = std::sqrt(x.dot(cov * x) / static_cast<double>(n));
  EXPECT_LE(testing::relative_error(mc_error(phi, eta, bundle), expected), 1e-6);
}

TEST(McError, ShrinksLikeOneOverRootN) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Ones(1, 1),
                                                            Eigen::VectorXd::Zero(1));
  const QuantityOfInterest phi = coordinate_qoi(0, 1);
  auto mean_se = [&](std::size_t n) {
    double total = 0.0;
    for (std::uint64_t r = 0; r < 40; ++r) {
      const ObjectiveBundle bundle(model, fit_draws(100 + r, n, 1));
      total += mc_error(phi, quadratic_saa_optimum(*model, bundle.draws()), bundle);
    }
    return total / 40.0;
  };
  const double ratio = mean_se(60) / mean_se(30);
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.15 / std::sqrt(2.0));
}

TEST(QoIReport, ClosedFormStandardDeviationsOnWhitenedDraws) {
  const auto model = std::make_shared<const QuadraticModel>(coupled_precision(), Eigen::Vector2d::Zero());
  const ObjectiveBundle bundle(model, whitened_draws(12, 30, 2));
  const MeanFieldParams eta = tight_fit(bundle);
  const QoIReport report = build_qoi_report({coordinate_qoi(0, 2)}, eta, bundle);
  ASSERT_EQ(report.rows.size(), 1u);
  const QoIRow& row = report.rows[0];
  EXPECT_FALSE(row.error);
  EXPECT_NEAR(row.lr_sd, std::sqrt(2.0 / 3.0), 1e-6);
  EXPECT_NEAR(row.mf_sd, 1.0 / std::sqrt(2.0), 1e-6);
  EXPECT_GT(row.lr_sd, row.mf_sd);
  EXPECT_NEAR(row.mean, 0.0, 1e-8);
}

TEST(QoIReport, DiagonalPrecisionMakesMeanFieldExact) {
  const Eigen::MatrixXd a = Eigen::Vector3d(0.5, 2.0, 9.0).asDiagonal();
  const auto model = std::make_shared<const QuadraticModel>(a, Eigen::Vector3d(1, 0, -1));
  const ObjectiveBundle bundle(model, whitened_draws(13, 20, 3));
  const MeanFieldParams eta = tight_fit(bundle);
  const QoIReport report = build_qoi_report(
      {coordinate_qoi(0, 3), coordinate_qoi(1, 3), coordinate_qoi(2, 3)}, eta, bundle);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_NEAR(report.rows[d].lr_sd, report.rows[d].mf_sd, 1e-6);
    EXPECT_NEAR(report.rows[d].lr_sd, 1.0 / std::sqrt(a(static_cast<Eigen::Index>(d),
                                                         static_cast<Eigen::Index>(d))),
                1e-6);
  }
}

TEST(QoIReport, LinearResponseExceedsMeanFieldOnCorrelatedPosteriors) {
  std::mt19937_64 rng(41);
  const Eigen::MatrixXd a = testing::random_spd(rng, 5, 50.0);
  const auto model = std::make_shared<const QuadraticModel>(a, Eigen::VectorXd::Zero(5));
  const ObjectiveBundle bundle(model, fit_draws(14, 2000, 5));
  const MeanFieldParams eta = tight_fit(bundle);
  std::vector<QuantityOfInterest> quantities;
  for (std::size_t d = 0; d < 5; ++d) {
    quantities.push_back(coordinate_qoi(d, 5));
  }
  const QoIReport report = build_qoi_report(quantities, eta, bundle);
  for (std::size_t d = 0; d < 5; ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    EXPECT_NEAR(report.rows[d].lr_sd, std::sqrt(a.inverse()(i, i)), 1e-6);
    EXPECT_GE(report.rows[d].lr_sd, report.rows[d].mf_sd);
    EXPECT_EQ(report.rows[d].mf_sd, eta.sigma()[i]);
  }
}

TEST(QoIReport, ConstantQuantityIsNotFlagged) {
  const auto model = instantiate_hierarchical(5, 0);
  const ObjectiveBundle bundle(model, fit_draws(2, 10, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  const QoIReport report = build_qoi_report({constant_qoi(1.5, model->dim())}, eta, bundle);
  EXPECT_EQ(report.rows[0].mc_se, 0.0);
  EXPECT_EQ(report.rows[0].lr_sd, 0.0);
  EXPECT_FALSE(report.rows[0].se_flag);
  EXPECT_DOUBLE_EQ(report.rows[0].mean, 1.5);
}

TEST(QoIReport, TwoDrawsLeaveTheHierarchicalObjectiveUnbounded) {
  // One draw can place every lambda_p on m while its log tau runs to -inf and
  // the other draw keeps tau fixed, so no fit exists to post-process.
  const auto model = instantiate_hierarchical(100, 0);
  const ObjectiveBundle bundle(model, fit_draws(0, 2, model->dim()));
  OptimizerConfig config;
  config.max_iterations = 200;
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(model->dim()), config);
  EXPECT_FALSE(fit.converged);
  EXPECT_LT(fit.objective, 0.0);
}

TEST(QoIReport, FewDrawsFlagUnreliableErrors) {
  const auto model = instantiate_hierarchical(100, 0);
  const ObjectiveBundle bundle(model, fit_draws(0, 3, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  std::vector<QuantityOfInterest> quantities;
  for (std::size_t d = 0; d < 12; ++d) {
    quantities.push_back(coordinate_qoi(d, model->dim()));
  }
  const QoIReport report = build_qoi_report(quantities, eta, bundle);
  bool any = false;
  for (const auto& row : report.rows) {
    any = any || row.se_flag;
  }
  EXPECT_TRUE(any);
}

TEST(QoIReport, FailingRowDoesNotSpoilTheOthers) {
  const auto model = instantiate_hierarchical(5, 0);
  const ObjectiveBundle bundle(model, fit_draws(2, 10, model->dim()));
  const MeanFieldParams eta = tight_fit(bundle);
  const QuantityOfInterest step("step", [](const Eigen::VectorXd& t) { return t[0] > 0 ? 1.0 : 0.0; });
  const QoIReport report = build_qoi_report({step, coordinate_qoi(0, model->dim())}, eta, bundle);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].error);
  EXPECT_TRUE(std::isnan(report.rows[0].lr_sd));
  EXPECT_FALSE(report.rows[1].error);
  EXPECT_GT(report.rows[1].lr_sd, 0.0);
}

}  // namespace
}  // namespace dadvi

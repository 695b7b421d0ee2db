#include "dadvi/draws.hpp"
#include "dadvi/errors.hpp"
#include "dadvi/hierarchical_model.hpp"
#include "dadvi/optimize.hpp"
#include "dadvi/quadratic_model.hpp"
#include "dadvi/quadratic_oracle.hpp"
#include "dadvi/random.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace dadvi {
namespace {

std::shared_ptr<const QuadraticModel> diagonal_quadratic() {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 4;
  return std::make_shared<const QuadraticModel>(a, Eigen::Vector2d(1, 2));
}

DrawSet fit_draws(std::uint64_t seed, std::size_t n, std::size_t d) {
  return sample_draws(derive_seed(seed, Stream::kDraws), n, d);
}

TEST(DadviFit, RecoversTheClosedFormOptimum) {
  const auto model = diagonal_quadratic();
  const ObjectiveBundle bundle(model, fit_draws(42, 30, 2));
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(2));
  ASSERT_TRUE(fit.converged);
  EXPECT_EQ(fit.status, FitStatus::kConverged);
  const MeanFieldParams oracle = quadratic_saa_optimum(*model, bundle.draws());
  EXPECT_LE((fit.eta_hat.mu - oracle.mu).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE((fit.eta_hat.xi - oracle.xi).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE(fit.grad_norm, 1e-8);
}

TEST(DadviFit, StartingAtTheOptimumIsAFixedPoint) {
  const auto model = diagonal_quadratic();
  const ObjectiveBundle bundle(model, fit_draws(42, 30, 2));
  const MeanFieldParams oracle = quadratic_saa_optimum(*model, bundle.draws());
  const FitResult fit = dadvi_fit(bundle, oracle);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.iterations, 1u);
  EXPECT_LE((fit.eta_hat.pack() - oracle.pack()).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(DadviFit, HierarchicalModelConverges) {
  const auto model = instantiate_hierarchical(100, 0);
  const ObjectiveBundle bundle(model, fit_draws(0, 30, model->dim()));
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(model->dim()));
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.grad_norm, 1e-8);
  EXPECT_LE(fit.iterations, 1000u);
  EXPECT_NEAR(saa_gradient(fit.eta_hat, bundle).norm(), fit.grad_norm, 1e-12);
}

TEST(DadviFit, TraceIsMonotoneAndAccountsForEveryEvaluation) {
  const auto model = instantiate_hierarchical(30, 1);
  const ObjectiveBundle bundle(model, fit_draws(3, 20, model->dim()));
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(model->dim()));
  ASSERT_TRUE(fit.converged);
  const auto& points = fit.trace.points;
  ASSERT_EQ(points.size(), fit.iterations + 1);
  EXPECT_EQ(fit.trace.method, "dadvi");
  for (std::size_t i = 1; i < points.size(); ++i) {
    EXPECT_LE(points[i].objective, points[i - 1].objective);
    EXPECT_EQ(points[i].cumulative_evaluations,
              points[i - 1].cumulative_evaluations + points[i].step_evaluations.total());
  }
  EXPECT_EQ(fit.trace.total_evaluations(), fit.evaluations);
  EXPECT_EQ(fit.evaluations, bundle.counts());
  EXPECT_EQ(points.back().cumulative_evaluations, fit.evaluations.total());
  EXPECT_EQ(fit.evaluations.value % bundle.num_draws(), 0u);
}

TEST(DadviFit, RandomStartsReachTheSameOptimum) {
  std::mt19937_64 rng(17);
  const auto model = std::make_shared<const QuadraticModel>(testing::random_spd(rng, 5, 100.0),
                                                            testing::gaussian_vector(rng, 5));
  const ObjectiveBundle bundle(model, fit_draws(5, 15, 5));
  const MeanFieldParams oracle = quadratic_saa_optimum(*model, bundle.draws());
  for (int k = 0; k < 5; ++k) {
    const MeanFieldParams start{testing::gaussian_vector(rng, 5, 3.0),
                                testing::gaussian_vector(rng, 5, 1.0)};
    const FitResult fit = dadvi_fit(bundle, start);
    ASSERT_TRUE(fit.converged);
    EXPECT_LE((fit.eta_hat.pack() - oracle.pack()).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(DadviFit, IterationLimitIsAResultNotAnError) {
  const auto model = instantiate_hierarchical(50, 2);
  const ObjectiveBundle bundle(model, fit_draws(1, 10, model->dim()));
  OptimizerConfig config;
  config.max_iterations = 2;
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(model->dim()), config);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.status, FitStatus::kMaxIterations);
  EXPECT_EQ(fit.iterations, 2u);
}

TEST(DadviFit, NonFiniteStartFailsImmediately) {
  const auto model = diagonal_quadratic();
  const ObjectiveBundle bundle(model, fit_draws(1, 5, 2));
  const MeanFieldParams start{Eigen::Vector2d::Zero(), Eigen::Vector2d(800.0, 0.0)};
  EXPECT_THROW(dadvi_fit(bundle, start), NonFiniteObjective);
}

TEST(DadviFit, InvalidConfigurationIsRejected) {
  const auto model = diagonal_quadratic();
  const ObjectiveBundle bundle(model, fit_draws(1, 5, 2));
  OptimizerConfig config;
  config.gtol = 0.0;
  EXPECT_THROW(dadvi_fit(bundle, MeanFieldParams::zeros(2), config), InvalidConfiguration);
}

TEST(FitStatus, NamesRoundTrip) {
  for (FitStatus s : {FitStatus::kConverged, FitStatus::kMaxIterations, FitStatus::kStalled,
                      FitStatus::kDiverged}) {
    EXPECT_EQ(fit_status_from_string(to_string(s)), s);
  }
  EXPECT_THROW(fit_status_from_string("finished"), InvalidConfiguration);
}

TEST(DadviFitFullRank, SmallQuadraticSatisfiesTheStationarityIdentity) {
  std::mt19937_64 rng(23);
  const Eigen::MatrixXd a = testing::random_spd(rng, 2, 5.0);
  const auto model = std::make_shared<const QuadraticModel>(a, testing::gaussian_vector(rng, 2));
  const ObjectiveBundle bundle(model, fit_draws(7, 5, 2), Family::kFullRank);
  const FullRankFitResult fit = dadvi_fit_fullrank(
      bundle, FullRankParams::from_mean_field(MeanFieldParams::zeros(2)));
  ASSERT_TRUE(fit.converged);
  EXPECT_EQ(fit.trace.method, "dadvi-fullrank");
  // At the optimum R C R' = A^-1 with C the centred draw covariance, and
  // mu = A^-1 B - R zbar.
  const Eigen::MatrixXd c = draw_covariance(bundle.draws());
  const Eigen::MatrixXd a_inv = a.inverse();
  const Eigen::MatrixXd& r = fit.eta_hat.r;
  EXPECT_LE((r * c * r.transpose() - a_inv).norm(), 1e-6 * a_inv.norm());
  EXPECT_LE((fit.eta_hat.mu - (a_inv * model->b() - r * bundle.draws().mean())).norm(), 1e-6);
}

TEST(DadviFitFullRank, DiagonalOnlyMatchesMeanField) {
  const auto model = instantiate_hierarchical(10, 4);
  const DrawSet draws = fit_draws(2, 20, model->dim());
  const ObjectiveBundle mf(model, draws);
  const ObjectiveBundle fr(model, draws, Family::kFullRank);
  const FitResult mean_field = dadvi_fit(mf, MeanFieldParams::zeros(model->dim()));
  FullRankOptions options;
  options.diagonal_only = true;
  const FullRankFitResult diag = dadvi_fit_fullrank(
      fr, FullRankParams::from_mean_field(MeanFieldParams::zeros(model->dim())), {}, options);
  ASSERT_TRUE(mean_field.converged);
  ASSERT_TRUE(diag.converged);
  EXPECT_LE((diag.eta_hat.mu - mean_field.eta_hat.mu).norm(), 1e-6);
  EXPECT_LE((diag.eta_hat.r.diagonal() - mean_field.eta_hat.sigma()).norm(), 1e-6);
  EXPECT_EQ(diag.eta_hat.r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm(), 0.0);
}

TEST(DadviFitFullRank, FewerDrawsThanDimensionsDiverges) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Identity(10, 10),
                                                            Eigen::VectorXd::Zero(10));
  const ObjectiveBundle bundle(model, fit_draws(3, 3, 10), Family::kFullRank);
  // Any N >= D fit of this model ends near D/2; the log-diagonal
  // parameterization only descends the degenerate valley logarithmically in
  // the iteration count, so the floor sits well below that but within reach.
  FullRankOptions options;
  options.objective_floor = -40.0;
  const FullRankFitResult fit = dadvi_fit_fullrank(
      bundle, FullRankParams::from_mean_field(MeanFieldParams::zeros(10)), {}, options);
  EXPECT_EQ(fit.status, FitStatus::kDiverged);
  EXPECT_FALSE(fit.converged);
  EXPECT_LT(fit.objective, -40.0);
}

TEST(DadviFitFullRank, UpperTriangularStartIsRejected) {
  const auto model = diagonal_quadratic();
  const ObjectiveBundle bundle(model, fit_draws(3, 5, 2), Family::kFullRank);
  FullRankParams start{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
  start.r(0, 1) = 0.5;
  EXPECT_THROW(dadvi_fit_fullrank(bundle, start), ContractViolation);
}

TEST(SgFit, OneDimensionalQuadraticApproachesTheOptimum) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Ones(1, 1),
                                                            Eigen::VectorXd::Zero(1));
  SGConfig config;
  config.step_size = 0.05;
  config.max_iterations = 5000;
  config.averaging = 500;
  config.window = 1000000;
  const MeanFieldParams start{Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Zero(1)};
  const FitResult fit = sg_fit(model, start, config, 11);
  EXPECT_EQ(fit.status, FitStatus::kMaxIterations);
  EXPECT_LE(std::abs(fit.eta_hat.mu[0]), 0.2);
  // Distance to the optimum shrinks along the trace.
  const auto& points = fit.trace.points;
  ASSERT_GE(points.size(), 10u);
  EXPECT_LT(std::abs(points.back().eta[0]), std::abs(start.mu[0]));
  EXPECT_LT(std::abs(points[points.size() / 2].eta[0]), std::abs(points.front().eta[0]) + 0.5);
}

TEST(SgFit, HierarchicalModelStopsOnTheRelativeChangeRule) {
  const auto model = instantiate_hierarchical(100, 0);
  // The default base rate overflows exp(-2 log tau) within a few steps from
  // eta = 0, where the log-scale gradient is of order P.
  SGConfig config;
  config.step_size = 0.01;
  const FitResult fit = sg_fit(model, MeanFieldParams::zeros(model->dim()), config, 0);
  EXPECT_EQ(fit.status, FitStatus::kConverged);
  EXPECT_LT(fit.iterations, config.max_iterations);
  EXPECT_EQ(fit.trace.method, "sg");
  EXPECT_EQ(fit.trace.total_evaluations(), fit.evaluations);
}

TEST(SgFit, SameSeedSameRun) {
  std::mt19937_64 rng(2);
  const auto model = std::make_shared<const QuadraticModel>(testing::random_spd(rng, 3, 4.0),
                                                            testing::gaussian_vector(rng, 3));
  SGConfig config;
  config.max_iterations = 300;
  const FitResult a = sg_fit(model, MeanFieldParams::zeros(3), config, 4);
  const FitResult b = sg_fit(model, MeanFieldParams::zeros(3), config, 4);
  const FitResult c = sg_fit(model, MeanFieldParams::zeros(3), config, 5);
  EXPECT_EQ(a.eta_hat.pack(), b.eta_hat.pack());
  EXPECT_NE(a.eta_hat.pack(), c.eta_hat.pack());
}

TEST(SgFit, DivergenceCarriesTheTrace) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Ones(1, 1),
                                                            Eigen::VectorXd::Zero(1));
  SGConfig config;
  config.step_size = 50.0;
  config.decay = 0.0;
  config.trace_every = 1;
  try {
    sg_fit(model, MeanFieldParams::zeros(1), config, 1);
    FAIL() << "expected SgDiverged";
  } catch (const SgDiverged& e) {
    EXPECT_FALSE(e.trace().points.empty());
    EXPECT_EQ(e.trace().method, "sg");
  }
}

}  // namespace
}  // namespace dadvi

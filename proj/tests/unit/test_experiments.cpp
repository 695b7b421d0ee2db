#include "dadvi/draws.hpp"
#include "dadvi/errors.hpp"
#include "dadvi/experiments.hpp"
#include "dadvi/hierarchical_model.hpp"
#include "dadvi/io.hpp"
#include "dadvi/quadratic_model.hpp"
#include "dadvi/random.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

namespace dadvi {
namespace {

/// log p shifted by a constant, which shifts every per-draw objective by -c.
class Shifted final : public Model {
 public:
  Shifted(ModelPtr base, double c) : base_(std::move(base)), c_(c) {}
  std::size_t dim() const override { return base_->dim(); }
  std::string name() const override { return "shifted"; }
  double log_density(const Eigen::VectorXd& t) const override { return base_->log_density(t) + c_; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& t) const override { return base_->gradient(t); }
  Eigen::VectorXd hvp(const Eigen::VectorXd& t, const Eigen::VectorXd& v) const override {
    return base_->hvp(t, v);
  }

 private:
  ModelPtr base_;
  double c_;
};

std::shared_ptr<const QuadraticModel> small_quadratic() {
  Eigen::MatrixXd a(2, 2);
  a << 2, 0.5, 0.5, 1;
  return std::make_shared<const QuadraticModel>(a, Eigen::Vector2d(1, -1));
}

OptimizationTrace trace_through(const std::vector<MeanFieldParams>& points) {
  OptimizationTrace trace;
  trace.method = "manual";
  std::uint64_t cumulative = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cumulative += 10;
    trace.points.push_back({i, {10, 0, 0}, cumulative, points[i].pack(), 0.0, 0.0});
  }
  return trace;
}

TEST(NormalizedTrace, VanishesAtTheCenteringOptimum) {
  const auto model = small_quadratic();
  const ObjectiveBundle fit_bundle(model, sample_draws(1, 30, 2));
  const FitResult fit = dadvi_fit(fit_bundle, MeanFieldParams::zeros(2));
  const ObjectiveBundle indep(model, sample_draws(2, 500, 2));
  const TraceComparison c =
      normalized_trace({trace_through({MeanFieldParams::zeros(2), fit.eta_hat})}, fit.eta_hat, indep);
  ASSERT_EQ(c.series.size(), 1u);
  EXPECT_EQ(c.series[0].kappa.back(), 0.0);
  EXPECT_GT(c.series[0].kappa.front(), 0.0);
  EXPECT_EQ(c.z_indep_id, indep.draws().fingerprint());
}

TEST(NormalizedTrace, InvariantToAConstantInTheObjective) {
  const auto model = small_quadratic();
  const DrawSet z = sample_draws(3, 400, 2);
  const MeanFieldParams center{Eigen::Vector2d(0.2, -0.3), Eigen::Vector2d(-0.4, 0.1)};
  std::mt19937_64 rng(5);
  std::vector<MeanFieldParams> points;
  for (int k = 0; k < 6; ++k) {
    points.push_back({testing::gaussian_vector(rng, 2), testing::gaussian_vector(rng, 2, 0.3)});
  }
  const ObjectiveBundle plain(model, z);
  const ObjectiveBundle shifted(std::make_shared<Shifted>(model, 1234.5), z);
  const TraceComparison a = normalized_trace({trace_through(points)}, center, plain);
  const TraceComparison b = normalized_trace({trace_through(points)}, center, shifted);
  EXPECT_NEAR(a.scale, b.scale, 1e-9 * a.scale);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_NEAR(a.series[0].kappa[i], b.series[0].kappa[i], 1e-8);
  }
}

TEST(NormalizedTrace, MatchesTheDisplayedFormula) {
  const auto model = small_quadratic();
  const ObjectiveBundle indep(model, sample_draws(4, 50, 2));
  const MeanFieldParams center{Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(0.0, -0.2)};
  const MeanFieldParams other{Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.3, 0.3)};
  const std::vector<double> per = per_draw_objective(center, indep);
  double mean = 0.0;
  for (double v : per) {
    mean += v / static_cast<double>(per.size());
  }
  double ss = 0.0;
  for (double v : per) {
    ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(per.size() - 1));
  const double expected = (saa_objective(other, indep) - saa_objective(center, indep)) / sd;
  const TraceComparison c = normalized_trace({trace_through({other})}, center, indep);
  EXPECT_NEAR(c.series[0].kappa[0], expected, 1e-12 * std::abs(expected));
}

TEST(NormalizedTrace, ConstantPerDrawObjectiveIsDegenerate) {
  const auto flat = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Zero(2, 2),
                                                           Eigen::VectorXd::Zero(2));
  const ObjectiveBundle indep(flat, sample_draws(1, 20, 2));
  EXPECT_THROW(normalized_trace({trace_through({MeanFieldParams::zeros(2)})},
                                MeanFieldParams::zeros(2), indep),
               DegenerateNormalization);
}

TEST(TraceExperiment, StochasticGradientApproachesTheOptimum) {
  TraceExperimentConfig config;
  config.model = small_quadratic();
  config.seed = 9;
  config.sg.max_iterations = 20000;
  config.sg.window = 1000000;
  config.sg.averaging = 200;
  const TraceExperimentResult r = run_trace_experiment(config);
  ASSERT_TRUE(r.dadvi.converged);
  ASSERT_TRUE(r.sg);
  ASSERT_EQ(r.comparison.series.size(), 2u);
  const TraceSeries& sg = r.comparison.series[1];
  EXPECT_EQ(sg.method, "sg");
  ASSERT_GE(sg.kappa.size(), 10u);
  EXPECT_LE(std::abs(sg.kappa.back()), 3.0);
  EXPECT_GT(sg.kappa.front(), sg.kappa.back());
  for (std::size_t i = 1; i < sg.evaluations.size(); ++i) {
    EXPECT_GT(sg.evaluations[i], sg.evaluations[i - 1]);
  }
}

TEST(TraceExperiment, MethodsShareOneIndependentDrawSet) {
  TraceExperimentConfig config;
  config.model = small_quadratic();
  config.sg.max_iterations = 500;
  const TraceExperimentResult r = run_trace_experiment(config);
  std::ostringstream csv;
  write_trace_comparison_csv(csv, r.comparison);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "z_indep_id,cumulative_evaluations,kappa_dadvi,kappa_sg");
  std::set<std::string> ids;
  std::string line;
  while (std::getline(lines, line)) {
    ids.insert(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(ids, std::set<std::string>{r.comparison.z_indep_id});
  const DrawSet expected =
      sample_draws(derive_seed(config.seed, Stream::kIndependentDraws), 1000, 2);
  EXPECT_EQ(r.comparison.z_indep_id, expected.fingerprint());
}

TEST(TraceExperiment, UnknownMethodIsAConfigurationError) {
  TraceExperimentConfig config;
  config.model = small_quadratic();
  config.methods = {"dadvi", "nuts"};
  EXPECT_THROW(run_trace_experiment(config), InvalidConfiguration);
}

TEST(Coverage, StandardNormalCdf) {
  EXPECT_EQ(standard_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(standard_normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(standard_normal_cdf(-1.0) + standard_normal_cdf(1.0), 1.0, 1e-15);
}

TEST(Coverage, OneRowPerReplicationQuantityAndDrawCount) {
  CoverageExperiment e;
  e.model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Ones(1, 1),
                                                   Eigen::VectorXd::Zero(1));
  e.n_values = {8, 16, 32};
  e.replications = 7;
  e.reference_draws = 64;
  const CoverageResult r = run_coverage(e);
  EXPECT_EQ(r.rows.size(), 7u * 3u);
  ASSERT_EQ(r.summary.size(), 3u);
  ASSERT_EQ(r.reference.size(), 1u);
  for (const auto& s : r.summary) {
    EXPECT_EQ(s.rows + s.excluded, 7u);
    double mean = 0.0;
    std::size_t count = 0;
    for (const auto& row : r.rows) {
      if (row.num_draws == s.num_draws) {
        mean += row.epsilon;
        ++count;
      }
    }
    EXPECT_NEAR(s.mean_epsilon, mean / static_cast<double>(count), 1e-12);
  }
  for (const auto& row : r.rows) {
    EXPECT_GT(row.se, 0.0);
    EXPECT_NEAR(row.epsilon, (row.estimate - row.reference) / row.se, 1e-12);
    EXPECT_NEAR(row.phi, standard_normal_cdf(row.epsilon), 1e-15);
    EXPECT_EQ(row.draw_seed, replication_seed(e.seed, row.num_draws, row.replication));
  }
}

TEST(Coverage, ReplicationSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::size_t n : {8, 16, 32, 64}) {
    for (std::size_t r = 0; r < 200; ++r) {
      seeds.insert(replication_seed(0, n, r));
    }
  }
  EXPECT_EQ(seeds.size(), 800u);
}

TEST(Degeneracy, HandEvaluatedThreeDimensionalPath) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Identity(3, 3),
                                                            Eigen::VectorXd::Zero(3));
  DrawMatrix z(1, 3);
  z << 1, 0, 0;
  const DegeneracyResult r = degeneracy_path(model, DrawSet(0, z), {0.0, 1.0});
  EXPECT_EQ(r.span_rank, 1u);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_NEAR(r.points[1].objective - r.points[0].objective, -2.0, 1e-14);
  ASSERT_TRUE(r.points[1].direct_objective);
  EXPECT_NEAR(*r.points[1].direct_objective, r.points[1].objective, 1e-12);
}

TEST(Degeneracy, ObjectiveFallsWithoutBoundAndLikelihoodStaysFixed) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Identity(10, 10),
                                                            Eigen::VectorXd::Zero(10));
  const DrawSet draws = sample_draws(4, 3, 10);
  const std::vector<double> log_m{0.0, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e6};
  const DegeneracyResult r = degeneracy_path(model, draws, log_m);
  EXPECT_EQ(r.span_rank, 3u);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    EXPECT_LT(r.points[i].objective, r.points[i - 1].objective);
    const double step = -7.0 * (log_m[i] - log_m[i - 1]);
    EXPECT_NEAR(r.points[i].objective - r.points[i - 1].objective, step, 1e-8 * std::abs(step));
    EXPECT_EQ(r.points[i].neg_mean_log_density, r.points[0].neg_mean_log_density);
  }
  EXPECT_LT(r.points.back().objective, -1e6);
  for (const auto& p : r.points) {
    if (p.direct_objective) {
      EXPECT_NEAR(*p.direct_objective, p.objective, 1e-9 * std::max(1.0, std::abs(p.objective)));
    }
  }
  const auto at_million = degeneracy_path(model, draws, {std::log(1e6)});
  EXPECT_LT(at_million.points[0].objective, -10.0);
}

TEST(Degeneracy, EnoughDrawsViolatesThePrecondition) {
  const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Identity(3, 3),
                                                            Eigen::VectorXd::Zero(3));
  EXPECT_THROW(degeneracy_path(model, sample_draws(1, 3, 3), {0.0}), ContractViolation);
}

/// Exact mean-field objective of a small model by tensor Gauss-Hermite
/// quadrature; the Hessian-vector product is a difference of gradients.
class QuadratureObjective final : public DifferentiableObjective {
 public:
  QuadratureObjective(ModelPtr model, int nodes) : model_(std::move(model)) {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
    testing::gauss_hermite(nodes, x, w);
    const auto d = static_cast<int>(model_->dim());
    int total = 1;
    for (int k = 0; k < d; ++k) {
      total *= nodes;
    }
    points_.resize(total, d);
    weights_.resize(total);
    for (int i = 0; i < total; ++i) {
      int rest = i;
      double weight = 1.0;
      for (int k = 0; k < d; ++k) {
        points_(i, k) = x[rest % nodes];
        weight *= w[rest % nodes];
        rest /= nodes;
      }
      weights_[i] = weight;
    }
  }
  std::size_t dim() const override { return 2 * model_->dim(); }
  double value(const Eigen::VectorXd& eta) const override {
    const MeanFieldParams p = MeanFieldParams::unpack(eta);
    double total = -p.xi.sum();
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      total -= weights_[i] * model_->log_density(reparameterize(p, points_.row(i).transpose()));
    }
    return total;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& eta) const override {
    const MeanFieldParams p = MeanFieldParams::unpack(eta);
    const Eigen::VectorXd sigma = p.sigma();
    const auto d = static_cast<Eigen::Index>(model_->dim());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * d);
    g.tail(d).setConstant(-1.0);
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      const Eigen::VectorXd z = points_.row(i).transpose();
      const Eigen::VectorXd gl = model_->gradient(reparameterize(p, z));
      g.head(d) -= weights_[i] * gl;
      g.tail(d) -= weights_[i] * gl.cwiseProduct(z).cwiseProduct(sigma);
    }
    return g;
  }
  Eigen::VectorXd hvp(const Eigen::VectorXd& eta, const Eigen::VectorXd& v) const override {
    return testing::fd_hvp([&](const Eigen::VectorXd& e) { return gradient(e); }, eta, v, 1e-6);
  }

 private:
  ModelPtr model_;
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

TEST(Scaling, LargeSampleReferenceMatchesQuadratureForOneGroup) {
  ScalingExperiment e;
  e.p_values = {1};
  e.replications = 3;
  const ScalingResult r = global_local_scaling(e);
  ASSERT_EQ(r.summary.size(), 1u);
  ASSERT_EQ(r.rows.size(), 3u);

  const auto model = instantiate_hierarchical(1, e.data_seed);
  const QuadratureObjective exact(model, 24);
  OptimizerConfig config;
  config.gtol = 1e-7;
  const MinimizeResult opt =
      minimize_trust_region(exact, Eigen::VectorXd::Zero(6), config, "quadrature");
  ASSERT_EQ(opt.status, FitStatus::kConverged);
  const Eigen::VectorXd exact_global =
      global_parameters(MeanFieldParams::unpack(opt.x), model->global_dim());
  EXPECT_LE((r.summary[0].reference_global - exact_global).lpNorm<Eigen::Infinity>(), 0.05)
      << "reference " << r.summary[0].reference_global.transpose() << " quadrature "
      << exact_global.transpose();
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.converged);
    EXPECT_GE(row.error, 0.0);
  }
}

TEST(Scaling, GlobalParametersAreTheLeadingBlocks) {
  const MeanFieldParams eta{Eigen::Vector4d(1, 2, 3, 4), Eigen::Vector4d(5, 6, 7, 8)};
  EXPECT_EQ(global_parameters(eta, 2), Eigen::Vector4d(1, 2, 5, 6));
}

}  // namespace
}  // namespace dadvi

#ifndef DADVI_EXPERIMENTS_HPP
#define DADVI_EXPERIMENTS_HPP

#include "dadvi/draws.hpp"
#include "dadvi/model.hpp"
#include "dadvi/objective.hpp"
#include "dadvi/optimize.hpp"
#include "dadvi/posterior.hpp"
#include "dadvi/qoi.hpp"
#include "dadvi/quadratic_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dadvi {

// ---------------------------------------------------------------------------
// Normalized optimization traces

struct TraceSeries {
  std::string method;
  std::vector<std::size_t> steps;
  std::vector<std::uint64_t> evaluations;  ///< cumulative model evaluations
  std::vector<double> kappa;
};

struct TraceComparison {
  std::string z_indep_id;   ///< fingerprint of the shared independent draws
  double center = 0.0;      ///< K(eta_hat | Z_indep)
  double scale = 0.0;       ///< sample SD of the per-draw objective at eta_hat
  std::vector<TraceSeries> series;
};

/**
 * kappa_i = (K(eta_i | Z_indep) - K(eta_hat | Z_indep)) / s, where s is the
 * sample standard deviation over Z_indep of the single-draw objectives at
 * eta_hat. `indep` must be a mean-field bundle over Z_indep; every trace is
 * scored against it. Throws DegenerateNormalization when s is zero.
 */
TraceComparison normalized_trace(const std::vector<OptimizationTrace>& traces,
                                 const MeanFieldParams& eta_hat,
                                 const ObjectiveBundle& indep);

struct TraceExperimentConfig {
  ModelPtr model;
  std::size_t num_draws = 30;
  std::uint64_t seed = 0;
  std::size_t independent_draws = 1000;
  std::vector<std::string> methods{"dadvi", "sg"};
  OptimizerConfig optimizer;
  SGConfig sg;
  std::size_t threads = 1;
};

struct TraceExperimentResult {
  FitResult dadvi;
  std::optional<FitResult> sg;
  TraceComparison comparison;
};

/// Fits DADVI (always; it defines the centering) and optionally SG from
/// eta0 = 0, then normalizes every requested trace on one Z_indep.
TraceExperimentResult run_trace_experiment(const TraceExperimentConfig& config);

// ---------------------------------------------------------------------------
// Coverage of the sandwich standard error

struct CoverageExperiment {
  ModelPtr model;
  std::vector<QuantityOfInterest> quantities;  ///< defaults to every coordinate
  std::vector<std::size_t> n_values{8, 16, 32, 64};
  std::size_t replications = 100;
  std::size_t reference_draws = 64;            ///< N of the reference fits
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  PosteriorConfig posterior;
  std::size_t threads = 1;
};

struct CoverageRow {
  std::size_t num_draws = 0;
  std::size_t replication = 0;
  std::string quantity;
  std::uint64_t draw_seed = 0;
  double estimate = 0.0;    ///< phi at the fitted variational mean
  double reference = 0.0;   ///< mu_infinity
  double se = 0.0;          ///< mc_error
  double epsilon = 0.0;     ///< (estimate - reference) / se
  double phi = 0.0;         ///< standard normal CDF of epsilon
};

struct CoverageSummary {
  std::size_t num_draws = 0;
  std::size_t rows = 0;
  std::size_t excluded = 0;   ///< replications dropped for non-convergence
  double mean_epsilon = 0.0;
  double sd_epsilon = 0.0;
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  std::vector<CoverageSummary> summary;
  std::vector<double> reference;   ///< mu_infinity per quantity
};

/// Seed of the draws for replication r at draw count N.
std::uint64_t replication_seed(std::uint64_t seed, std::size_t num_draws,
                               std::size_t replication);

double standard_normal_cdf(double x);

/**
 * For each N and replication: fit DADVI on fresh draws, compute mc_error for
 * every quantity and eps = (phi(mu_hat) - mu_inf) / se, where mu_inf is the
 * average of `replications` fits at reference_draws. Replications whose fit
 * does not converge are excluded and counted.
 */
CoverageResult run_coverage(const CoverageExperiment& experiment);

// ---------------------------------------------------------------------------
// Full-rank degeneracy

struct DegeneracyPoint {
  double log_m = 0.0;
  double objective = 0.0;
  double neg_entropy = 0.0;            ///< -log |det R|
  double neg_mean_log_density = 0.0;   ///< the likelihood term
  std::optional<double> direct_objective;  ///< saa_objective_fullrank on dense R
};

struct DegeneracyResult {
  std::size_t span_rank = 0;
  std::vector<DegeneracyPoint> points;
};

/**
 * Evaluates the full-rank objective along R = eps * P_Z + M * P_perp, where
 * P_Z projects onto the span of the draws and P_perp onto its complement, at
 * mu = 0. The path is parameterized by log M so that very large M stay
 * representable: log |det R| = rank * log eps + (D - rank) * log M and
 * R z_n = eps z_n exactly. For log M <= direct_log_m_limit the dense R is
 * also built and scored directly as a cross-check.
 *
 * Requires N < D and a quadratic model with B = 0.
 */
DegeneracyResult degeneracy_path(const std::shared_ptr<const QuadraticModel>& model,
                                 const DrawSet& draws,
                                 const std::vector<double>& log_m_values,
                                 double epsilon = 1.0,
                                 double direct_log_m_limit = 50.0);

// ---------------------------------------------------------------------------
// Global-local scaling

struct ScalingExperiment {
  std::vector<std::size_t> p_values{10, 100, 1000};
  std::size_t num_draws = 30;
  std::size_t replications = 20;
  std::size_t reference_draws = 4096;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  OptimizerConfig optimizer;
  std::size_t threads = 1;
};

struct ScalingRow {
  std::size_t num_groups = 0;
  std::size_t replication = 0;
  bool converged = false;
  double error = 0.0;   ///< ||eta_hat^gamma - eta_ref^gamma||_2
};

struct ScalingSummary {
  std::size_t num_groups = 0;
  std::size_t count = 0;
  double mean_error = 0.0;
  double sd_error = 0.0;
  Eigen::VectorXd reference_global;  ///< (mu_m, mu_logtau, xi_m, xi_logtau)
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  std::vector<ScalingSummary> summary;
};

/// Global block (mu_gamma, xi_gamma) of a hierarchical-model fit.
Eigen::VectorXd global_parameters(const MeanFieldParams& eta, std::size_t global_dim);

/**
 * For each P: a reference fit at reference_draws (failure aborts with
 * ExperimentFailure), then `replications` fits at num_draws on independent
 * draws, recording the global-parameter error against the reference.
 */
ScalingResult global_local_scaling(const ScalingExperiment& experiment);

}  // namespace dadvi

#endif  // DADVI_EXPERIMENTS_HPP

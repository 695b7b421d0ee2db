#include "dadvi/experiments.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/hierarchical_model.hpp"
#include "dadvi/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dadvi {

namespace {

double sample_sd(const std::vector<double>& values) {
  if (values.size() < 2) {
    return 0.0;
  }
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

std::vector<QuantityOfInterest> coordinate_quantities(std::size_t dim) {
  std::vector<QuantityOfInterest> out;
  for (std::size_t d = 0; d < dim; ++d) {
    out.push_back(coordinate_qoi(d, dim));
  }
  return out;
}

}  // namespace

TraceComparison normalized_trace(const std::vector<OptimizationTrace>& traces,
                                 const MeanFieldParams& eta_hat,
                                 const ObjectiveBundle& indep) {
  const std::vector<double> per_draw = per_draw_objective(eta_hat, indep);
  TraceComparison out;
  out.z_indep_id = indep.draws().fingerprint();
  out.center = mean_of(per_draw);
  out.scale = sample_sd(per_draw);
  if (!(out.scale > 0.0)) {
    throw DegenerateNormalization(
        "per-draw objective has zero spread over the independent draws");
  }
  for (const auto& trace : traces) {
    TraceSeries series;
    series.method = trace.method;
    for (const auto& point : trace.points) {
      // Same reduction as the center, so kappa is exactly zero at eta_hat.
      const double value = mean_of(per_draw_objective(MeanFieldParams::unpack(point.eta), indep));
      series.steps.push_back(point.step);
      series.evaluations.push_back(point.cumulative_evaluations);
      series.kappa.push_back((value - out.center) / out.scale);
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

TraceExperimentResult run_trace_experiment(const TraceExperimentConfig& config) {
  if (!config.model) {
    throw InvalidConfiguration("trace experiment needs a model");
  }
  const std::size_t d = config.model->dim();
  for (const auto& m : config.methods) {
    if (m != "dadvi" && m != "sg") {
      throw InvalidConfiguration(fmt::format("unknown trace method '{}'", m));
    }
  }
  const ObjectiveBundle bundle(config.model,
                               sample_draws(derive_seed(config.seed, Stream::kDraws),
                                            config.num_draws, d),
                               Family::kMeanField, config.threads);
  TraceExperimentResult result;
  result.dadvi = dadvi_fit(bundle, MeanFieldParams::zeros(d), config.optimizer);
  if (!result.dadvi.converged) {
    throw ExperimentFailure("DADVI fit for the trace experiment did not converge");
  }
  std::vector<OptimizationTrace> traces;
  for (const auto& m : config.methods) {
    if (m == "dadvi") {
      traces.push_back(result.dadvi.trace);
    } else {
      result.sg = sg_fit(config.model, MeanFieldParams::zeros(d), config.sg, config.seed);
      traces.push_back(result.sg->trace);
    }
  }
  const ObjectiveBundle indep(
      config.model,
      sample_draws(derive_seed(config.seed, Stream::kIndependentDraws),
                   config.independent_draws, d),
      Family::kMeanField, config.threads);
  result.comparison = normalized_trace(traces, result.dadvi.eta_hat, indep);
  return result;
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t num_draws,
                               std::size_t replication) {
  const std::uint64_t key =
      (static_cast<std::uint64_t>(num_draws) << 32) ^ static_cast<std::uint64_t>(replication);
  return derive_seed(seed, Stream::kReplication, key);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

CoverageResult run_coverage(const CoverageExperiment& experiment) {
  if (!experiment.model) {
    throw InvalidConfiguration("coverage experiment needs a model");
  }
  if (experiment.replications == 0 || experiment.n_values.empty()) {
    throw InvalidConfiguration("coverage experiment needs replications and N values");
  }
  const std::size_t d = experiment.model->dim();
  const std::vector<QuantityOfInterest> quantities =
      experiment.quantities.empty() ? coordinate_quantities(d) : experiment.quantities;
  const auto q = quantities.size();

  struct Replicate {
    bool converged = false;
    std::uint64_t seed = 0;
    std::vector<double> estimate;
    std::vector<double> se;
  };

  auto run_one = [&](std::size_t n, std::size_t r, bool with_se) {
    Replicate rep;
    rep.seed = replication_seed(experiment.seed, n, r);
    const ObjectiveBundle bundle(experiment.model, sample_draws(rep.seed, n, d),
                                 Family::kMeanField, experiment.threads);
    const FitResult fit =
        dadvi_fit(bundle, MeanFieldParams::zeros(d), experiment.optimizer);
    rep.converged = fit.converged;
    if (!rep.converged) {
      return rep;
    }
    PosteriorConfig post = experiment.posterior;
    try {
      if (with_se) {
        verify_optimum(fit.eta_hat, bundle, post.optimum_gtol, post.curvature_probes,
                       post.probe_seed);
      }
      post.verify = false;
      for (const auto& phi : quantities) {
        rep.estimate.push_back(phi.value(fit.eta_hat.mu));
        rep.se.push_back(with_se ? mc_error(phi, fit.eta_hat, bundle, post) : 0.0);
      }
    } catch (const Error&) {
      rep.converged = false;
    }
    return rep;
  };

  // Reference mean: average over replications at reference_draws. These
  // fits are reused when reference_draws is also on the N grid.
  std::vector<Replicate> reference_runs;
  const bool reuse = std::find(experiment.n_values.begin(), experiment.n_values.end(),
                               experiment.reference_draws) != experiment.n_values.end();
  for (std::size_t r = 0; r < experiment.replications; ++r) {
    reference_runs.push_back(run_one(experiment.reference_draws, r, reuse));
  }
  CoverageResult result;
  result.reference.assign(q, 0.0);
  std::size_t used = 0;
  for (const auto& rep : reference_runs) {
    if (!rep.converged) {
      continue;
    }
    ++used;
    for (std::size_t k = 0; k < q; ++k) {
      result.reference[k] += rep.estimate[k];
    }
  }
  if (used == 0) {
    throw ExperimentFailure("no reference fit converged");
  }
  for (auto& v : result.reference) {
    v /= static_cast<double>(used);
  }

  for (std::size_t n : experiment.n_values) {
    CoverageSummary summary;
    summary.num_draws = n;
    std::vector<double> eps_values;
    for (std::size_t r = 0; r < experiment.replications; ++r) {
      const Replicate rep =
          (n == experiment.reference_draws) ? reference_runs[r] : run_one(n, r, true);
      if (!rep.converged) {
        ++summary.excluded;
        continue;
      }
      for (std::size_t k = 0; k < q; ++k) {
        CoverageRow row;
        row.num_draws = n;
        row.replication = r;
        row.quantity = quantities[k].name();
        row.draw_seed = rep.seed;
        row.estimate = rep.estimate[k];
        row.reference = result.reference[k];
        row.se = rep.se[k];
        row.epsilon = (row.estimate - row.reference) / row.se;
        row.phi = standard_normal_cdf(row.epsilon);
        eps_values.push_back(row.epsilon);
        result.rows.push_back(std::move(row));
      }
    }
    summary.rows = eps_values.size();
    summary.mean_epsilon = mean_of(eps_values);
    summary.sd_epsilon = sample_sd(eps_values);
    result.summary.push_back(summary);
  }
  return result;
}

DegeneracyResult degeneracy_path(const std::shared_ptr<const QuadraticModel>& model,
                                 const DrawSet& draws,
                                 const std::vector<double>& log_m_values,
                                 double epsilon, double direct_log_m_limit) {
  if (!model) {
    throw ContractViolation("degeneracy path needs a model");
  }
  const std::size_t d = model->dim();
  const std::size_t n = draws.num_draws();
  if (draws.dim() != d) {
    throw ContractViolation("draws do not match the model dimension");
  }
  if (n >= d) {
    throw ContractViolation(fmt::format(
        "degeneracy path needs N < D (got N = {}, D = {})", n, d));
  }
  if (!model->b().isZero(0.0)) {
    throw ContractViolation("degeneracy path needs a quadratic model with B = 0");
  }
  if (!(epsilon > 0.0)) {
    throw ContractViolation("epsilon must be positive");
  }

  // Orthonormal basis of span{z_n}.
  const Eigen::MatrixXd zt = draws.matrix().transpose();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(zt);
  const auto rank = static_cast<Eigen::Index>(qr.rank());
  const auto dd = static_cast<Eigen::Index>(d);
  const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(dd, dd);
  const Eigen::MatrixXd basis = q_full.leftCols(rank);
  const Eigen::MatrixXd p_span = basis * basis.transpose();
  const Eigen::MatrixXd p_perp = Eigen::MatrixXd::Identity(dd, dd) - p_span;

  // Likelihood term: R z_n = eps z_n because z_n lies in the span.
  double mean_log_density = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_log_density += model->log_density(epsilon * draws.draw(i));
  }
  mean_log_density /= static_cast<double>(n);

  DegeneracyResult result;
  result.span_rank = static_cast<std::size_t>(rank);
  const ObjectiveBundle fullrank(model, draws, Family::kFullRank);
  const double free_dims = static_cast<double>(dd - rank);
  for (double log_m : log_m_values) {
    DegeneracyPoint point;
    point.log_m = log_m;
    point.neg_entropy = -(static_cast<double>(rank) * std::log(epsilon) + free_dims * log_m);
    point.neg_mean_log_density = -mean_log_density;
    point.objective = point.neg_entropy + point.neg_mean_log_density;
    if (log_m <= direct_log_m_limit) {
      const FullRankParams params{Eigen::VectorXd::Zero(dd),
                                  epsilon * p_span + std::exp(log_m) * p_perp};
      point.direct_objective = saa_objective_fullrank(params, fullrank);
    }
    result.points.push_back(point);
  }
  return result;
}

Eigen::VectorXd global_parameters(const MeanFieldParams& eta, std::size_t global_dim) {
  const auto g = static_cast<Eigen::Index>(global_dim);
  Eigen::VectorXd out(2 * g);
  out << eta.mu.head(g), eta.xi.head(g);
  return out;
}

ScalingResult global_local_scaling(const ScalingExperiment& experiment) {
  if (experiment.p_values.empty() || experiment.replications == 0) {
    throw InvalidConfiguration("scaling experiment needs P values and replications");
  }
  ScalingResult result;
  for (std::size_t p : experiment.p_values) {
    const std::shared_ptr<const HierarchicalModel> model =
        instantiate_hierarchical(p, experiment.data_seed);
    const std::size_t d = model->dim();
    const std::size_t g = model->global_dim();

    const ObjectiveBundle ref_bundle(
        model,
        sample_draws(derive_seed(experiment.seed, Stream::kDraws, p),
                     experiment.reference_draws, d),
        Family::kMeanField, experiment.threads);
    const FitResult reference =
        dadvi_fit(ref_bundle, MeanFieldParams::zeros(d), experiment.optimizer);
    if (!reference.converged) {
      throw ExperimentFailure(fmt::format(
          "reference fit for P = {} did not converge (gradient norm {:.3g})", p,
          reference.grad_norm));
    }
    const Eigen::VectorXd ref_global = global_parameters(reference.eta_hat, g);

    std::vector<double> errors;
    for (std::size_t r = 0; r < experiment.replications; ++r) {
      const ObjectiveBundle bundle(
          model,
          sample_draws(replication_seed(derive_seed(experiment.seed, Stream::kReplication, p),
                                        experiment.num_draws, r),
                       experiment.num_draws, d),
          Family::kMeanField, experiment.threads);
      const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(d), experiment.optimizer);
      ScalingRow row;
      row.num_groups = p;
      row.replication = r;
      row.converged = fit.converged;
      row.error = (global_parameters(fit.eta_hat, g) - ref_global).norm();
      if (row.converged) {
        errors.push_back(row.error);
      }
      result.rows.push_back(row);
    }
    ScalingSummary summary;
    summary.num_groups = p;
    summary.count = errors.size();
    summary.mean_error = mean_of(errors);
    summary.sd_error = sample_sd(errors);
    summary.reference_global = ref_global;
    result.summary.push_back(summary);
  }
  return result;
}

}  // namespace dadvi

#include "dadvi/optimize.hpp"

#include "dadvi/posterior.hpp"
#include "dadvi/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <deque>

namespace dadvi {

MeanFieldObjective::MeanFieldObjective(const ObjectiveBundle& bundle)
    : bundle_(bundle) {
  if (bundle.family() != Family::kMeanField) {
    throw ContractViolation("mean-field objective needs a mean-field bundle");
  }
}

std::size_t MeanFieldObjective::dim() const { return 2 * bundle_.model().dim(); }

double MeanFieldObjective::value(const Eigen::VectorXd& eta) const {
  return saa_objective(MeanFieldParams::unpack(eta), bundle_);
}

Eigen::VectorXd MeanFieldObjective::gradient(const Eigen::VectorXd& eta) const {
  return saa_gradient(MeanFieldParams::unpack(eta), bundle_);
}

Eigen::VectorXd MeanFieldObjective::hvp(const Eigen::VectorXd& eta,
                                        const Eigen::VectorXd& v) const {
  return saa_hvp(MeanFieldParams::unpack(eta), v, bundle_);
}

std::optional<Eigen::VectorXd> MeanFieldObjective::scaling(const Eigen::VectorXd& eta) const {
  return dadvi_preconditioner(MeanFieldParams::unpack(eta));
}

FullRankObjective::FullRankObjective(const ObjectiveBundle& bundle,
                                     FullRankLayout layout)
    : bundle_(bundle), layout_(layout) {
  if (bundle.family() != Family::kFullRank) {
    throw ContractViolation("full-rank objective needs a full-rank bundle");
  }
  if (layout_.dim() != bundle.model().dim()) {
    throw ContractViolation("full-rank layout does not match the model dimension");
  }
}

double FullRankObjective::value(const Eigen::VectorXd& packed) const {
  return saa_objective_fullrank_packed(packed, layout_, bundle_);
}

Eigen::VectorXd FullRankObjective::gradient(const Eigen::VectorXd& packed) const {
  return saa_gradient_fullrank(packed, layout_, bundle_);
}

Eigen::VectorXd FullRankObjective::hvp(const Eigen::VectorXd& packed,
                                       const Eigen::VectorXd& v) const {
  return saa_hvp_fullrank(packed, v, layout_, bundle_);
}

FitResult dadvi_fit(const ObjectiveBundle& bundle, const MeanFieldParams& eta0,
                    const OptimizerConfig& config) {
  eta0.validate();
  if (eta0.dim() != bundle.model().dim()) {
    throw ContractViolation(fmt::format(
        "initial parameters have dimension {}, model {}", eta0.dim(), bundle.model().dim()));
  }
  const MeanFieldObjective objective(bundle);
  MinimizeResult run = minimize_trust_region(objective, eta0.pack(), config, "dadvi");
  FitResult fit;
  fit.eta_hat = MeanFieldParams::unpack(run.x);
  fit.objective = run.value;
  fit.grad_norm = run.grad_norm;
  fit.status = run.status;
  fit.converged = run.status == FitStatus::kConverged;
  fit.iterations = run.iterations;
  fit.evaluations = run.evaluations;
  fit.trace = std::move(run.trace);
  return fit;
}

FullRankFitResult dadvi_fit_fullrank(const ObjectiveBundle& bundle,
                                     const FullRankParams& eta0,
                                     const OptimizerConfig& config,
                                     const FullRankOptions& options) {
  const FullRankLayout layout(bundle.model().dim(), options.diagonal_only);
  if (eta0.dim() != layout.dim()) {
    throw ContractViolation("initial full-rank parameters do not match the model");
  }
  const Eigen::MatrixXd upper = eta0.r.triangularView<Eigen::StrictlyUpper>();
  if (upper.cwiseAbs().maxCoeff() != 0.0 && eta0.r.rows() > 1) {
    throw ContractViolation("initial R must be lower-triangular");
  }
  const FullRankObjective objective(bundle, layout);
  MinimizeResult run = minimize_trust_region(objective, layout.pack(eta0), config,
                                             "dadvi-fullrank", options.objective_floor);
  FullRankFitResult fit;
  fit.eta_hat = layout.unpack(run.x);
  fit.packed = run.x;
  fit.objective = run.value;
  fit.grad_norm = run.grad_norm;
  fit.status = run.status;
  fit.converged = run.status == FitStatus::kConverged;
  fit.iterations = run.iterations;
  fit.evaluations = run.evaluations;
  fit.trace = std::move(run.trace);
  return fit;
}

void SGConfig::validate() const {
  if (!(step_size > 0.0) || !(decay >= 0.0)) {
    throw InvalidConfiguration("SG step size must be positive and decay non-negative");
  }
  if (!(threshold > 0.0) || !(relative_floor >= 0.0)) {
    throw InvalidConfiguration("SG threshold must be positive");
  }
  if (window == 0 || draws_per_step == 0 || averaging == 0 || trace_every == 0 ||
      max_iterations == 0) {
    throw InvalidConfiguration("SG window, draws, averaging, trace interval and "
                               "iteration limit must be >= 1");
  }
}

SgDiverged::SgDiverged(const std::string& what, OptimizationTrace trace)
    : Error(what), trace_(std::move(trace)) {}

FitResult sg_fit(const ModelPtr& model, const MeanFieldParams& eta0,
                 const SGConfig& config, std::uint64_t seed) {
  config.validate();
  eta0.validate();
  if (!model || eta0.dim() != model->dim()) {
    throw ContractViolation("sg_fit: initial parameters do not match the model");
  }
  const std::size_t d = model->dim();
  OptimizationTrace trace;
  trace.method = "sg";
  EvaluationCounts since_record;
  EvaluationCounts total;
  std::uint64_t cumulative = 0;

  Eigen::VectorXd eta = eta0.pack();
  Eigen::VectorXd window_start = eta;
  std::deque<Eigen::VectorXd> recent;
  FitStatus status = FitStatus::kMaxIterations;
  double last_grad_norm = std::numeric_limits<double>::quiet_NaN();
  double last_objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t t = 0;

  auto diverged = [&](const std::string& what) {
    return SgDiverged(fmt::format("SG diverged at step {}: {}", t, what), trace);
  };
  auto record = [&](const ObjectiveBundle& bundle, const MeanFieldParams& params) {
    try {
      last_objective = saa_objective(params, bundle);
    } catch (const NonFiniteObjective& e) {
      throw diverged(e.what());
    }
    since_record.value += config.draws_per_step;
    total.value += config.draws_per_step;
    cumulative += since_record.total();
    trace.points.push_back({t, since_record, cumulative, eta, last_objective, last_grad_norm});
    since_record = {};
  };

  for (t = 1; t <= config.max_iterations; ++t) {
    const DrawSet draws = sample_draws(
        derive_seed(seed, Stream::kStochasticGradient, t), config.draws_per_step, d);
    const ObjectiveBundle bundle(model, draws);
    const MeanFieldParams params = MeanFieldParams::unpack(eta);
    Eigen::VectorXd grad;
    try {
      grad = saa_gradient(params, bundle);
    } catch (const NonFiniteObjective& e) {
      throw diverged(e.what());
    }
    since_record.gradient += config.draws_per_step;
    total.gradient += config.draws_per_step;
    last_grad_norm = grad.norm();

    const double alpha =
        config.step_size / std::pow(1.0 + static_cast<double>(t - 1), config.decay);
    eta -= alpha * grad;
    if (!eta.allFinite()) {
      throw diverged("non-finite iterate");
    }
    recent.push_back(eta);
    if (recent.size() > config.averaging) {
      recent.pop_front();
    }

    bool stop = false;
    if (t % config.window == 0) {
      const Eigen::ArrayXd change =
          (eta - window_start).array().abs() /
          (window_start.array().abs() + config.relative_floor);
      if (change.maxCoeff() < config.threshold) {
        status = FitStatus::kConverged;
        stop = true;
      }
      window_start = eta;
    }
    if (t % config.trace_every == 0 || stop || t == config.max_iterations) {
      record(bundle, MeanFieldParams::unpack(eta));
    }
    if (stop) {
      break;
    }
  }

  Eigen::VectorXd averaged = Eigen::VectorXd::Zero(eta.size());
  for (const auto& e : recent) {
    averaged += e;
  }
  averaged /= static_cast<double>(recent.size());

  FitResult fit;
  fit.eta_hat = MeanFieldParams::unpack(averaged);
  fit.objective = last_objective;
  fit.grad_norm = last_grad_norm;
  fit.status = status;
  fit.converged = status == FitStatus::kConverged;
  fit.iterations = std::min(t, config.max_iterations);
  fit.evaluations = total;
  fit.trace = std::move(trace);
  return fit;
}

}  // namespace dadvi

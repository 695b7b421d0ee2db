#ifndef DADVI_OPTIMIZE_HPP
#define DADVI_OPTIMIZE_HPP

#include "dadvi/errors.hpp"
#include "dadvi/objective.hpp"
#include "dadvi/variational.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dadvi {

/// Smooth objective in a flat parameter vector, as seen by the optimizer.
class DifferentiableObjective {
 public:
  virtual ~DifferentiableObjective() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd hvp(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& v) const = 0;
  /// Cumulative model evaluations so far; used to fill traces.
  virtual EvaluationCounts evaluations() const { return {}; }
  /// Positive diagonal approximating the inverse Hessian at x. When given,
  /// the trust region is an ellipsoid in the matching scaled norm.
  virtual std::optional<Eigen::VectorXd> scaling(const Eigen::VectorXd& /*x*/) const {
    return std::nullopt;
  }
};

/// Trust-region Newton-CG settings.
struct OptimizerConfig {
  double gtol = 1e-8;               ///< stop when ||grad|| <= gtol
  std::size_t max_iterations = 1000;
  double initial_radius = 1.0;
  double max_radius = 100.0;
  double cg_tolerance = 0.5;        ///< cap on the Steihaug-CG forcing term

  /// Throws InvalidConfiguration on non-positive settings.
  void validate() const;
};

enum class FitStatus { kConverged, kMaxIterations, kStalled, kDiverged };

std::string to_string(FitStatus status);
FitStatus fit_status_from_string(const std::string& name);

struct TracePoint {
  std::size_t step = 0;
  EvaluationCounts step_evaluations;   ///< spent since the previous point
  std::uint64_t cumulative_evaluations = 0;
  Eigen::VectorXd eta;                 ///< flat parameter snapshot
  double objective = 0.0;
  double grad_norm = 0.0;
};

struct OptimizationTrace {
  std::string method;
  std::vector<TracePoint> points;

  EvaluationCounts total_evaluations() const;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  FitStatus status = FitStatus::kMaxIterations;
  std::size_t iterations = 0;
  EvaluationCounts evaluations;
  OptimizationTrace trace;
};

/**
 * Trust-region Newton method with a Steihaug-CG subproblem, solved in the
 * variables scaled by the objective's scaling() when it has one. Records one trace
 * point for the start and one per iteration. When `objective_floor` is set,
 * the run stops with kDiverged as soon as an accepted value falls below it.
 */
MinimizeResult minimize_trust_region(const DifferentiableObjective& objective,
                                     const Eigen::VectorXd& x0,
                                     const OptimizerConfig& config,
                                     const std::string& method = "dadvi",
                                     std::optional<double> objective_floor = std::nullopt);

/// Mean-field SAA objective over the flat eta = (mu, xi).
class MeanFieldObjective final : public DifferentiableObjective {
 public:
  explicit MeanFieldObjective(const ObjectiveBundle& bundle);
  std::size_t dim() const override;
  double value(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& eta,
                      const Eigen::VectorXd& v) const override;
  EvaluationCounts evaluations() const override { return bundle_.counts(); }
  /// dadvi_preconditioner at eta.
  std::optional<Eigen::VectorXd> scaling(const Eigen::VectorXd& eta) const override;

 private:
  const ObjectiveBundle& bundle_;
};

/// Full-rank SAA objective over packed FullRankLayout coordinates.
class FullRankObjective final : public DifferentiableObjective {
 public:
  FullRankObjective(const ObjectiveBundle& bundle, FullRankLayout layout);
  std::size_t dim() const override { return layout_.size(); }
  double value(const Eigen::VectorXd& packed) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& packed) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& packed,
                      const Eigen::VectorXd& v) const override;
  EvaluationCounts evaluations() const override { return bundle_.counts(); }
  const FullRankLayout& layout() const noexcept { return layout_; }

 private:
  const ObjectiveBundle& bundle_;
  FullRankLayout layout_;
};

struct FitResult {
  MeanFieldParams eta_hat;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  FitStatus status = FitStatus::kMaxIterations;
  std::size_t iterations = 0;
  EvaluationCounts evaluations;
  OptimizationTrace trace;
};

/// Minimizes the mean-field SAA objective of `bundle` from eta0.
FitResult dadvi_fit(const ObjectiveBundle& bundle, const MeanFieldParams& eta0,
                    const OptimizerConfig& config = {});

struct FullRankOptions {
  bool diagonal_only = false;
  /// A run whose objective drops below this is reported as diverged.
  double objective_floor = -1e9;
};

struct FullRankFitResult {
  FullRankParams eta_hat;
  Eigen::VectorXd packed;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  FitStatus status = FitStatus::kMaxIterations;
  std::size_t iterations = 0;
  EvaluationCounts evaluations;
  OptimizationTrace trace;
};

/// eta0.r must be lower-triangular with a positive diagonal.
FullRankFitResult dadvi_fit_fullrank(const ObjectiveBundle& bundle,
                                     const FullRankParams& eta0,
                                     const OptimizerConfig& config = {},
                                     const FullRankOptions& options = {});

/// Stochastic-gradient ADVI settings.
struct SGConfig {
  double step_size = 0.1;            ///< alpha_0 in alpha_t = alpha_0 / (1 + t)^decay
  double decay = 0.5;
  std::size_t draws_per_step = 1;
  std::size_t window = 100;          ///< compare eta with eta `window` steps ago
  double threshold = 1e-3;           ///< max relative change that counts as converged
  double relative_floor = 1.0;       ///< change_k / (|eta_prev_k| + floor)
  std::size_t max_iterations = 100000;
  std::size_t averaging = 1;         ///< return the mean of the last M iterates
  std::size_t trace_every = 50;

  void validate() const;
};

/// Thrown when SG produces a non-finite objective, gradient or iterate.
class SgDiverged : public Error {
 public:
  SgDiverged(const std::string& what, OptimizationTrace trace);
  const OptimizationTrace& trace() const noexcept { return trace_; }

 private:
  OptimizationTrace trace_;
};

/**
 * SG ADVI: at step t draw fresh standard normals from the
 * (seed, stochastic-gradient, t) substream and take
 * eta <- eta - alpha_t * grad K(eta | z_t). Every `window` steps the
 * per-parameter relative change against the iterate `window` steps earlier is
 * checked; the run converges when its maximum falls below `threshold`. The
 * trace objective is the stochastic estimate at the recorded step.
 */
FitResult sg_fit(const ModelPtr& model, const MeanFieldParams& eta0,
                 const SGConfig& config, std::uint64_t seed);

}  // namespace dadvi

#endif  // DADVI_OPTIMIZE_HPP

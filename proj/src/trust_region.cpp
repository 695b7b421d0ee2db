#include "dadvi/optimize.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <limits>

namespace dadvi {

namespace {

constexpr double kEta = 0.15;          // acceptance threshold on rho
constexpr double kShrinkBelow = 0.25;
constexpr double kGrowAbove = 0.75;

struct Subproblem {
  Eigen::VectorXd step;
  double scaled_norm = 0.0;   // norm in the variables the region is measured in
  double model_change = 0.0;  // m(p) - m(0), negative for a useful step
  bool on_boundary = false;
};

// Largest tau >= 0 with ||p + tau d|| = radius.
double to_boundary(const Eigen::VectorXd& p, const Eigen::VectorXd& d, double radius) {
  const double a = d.squaredNorm();
  const double b = 2.0 * p.dot(d);
  const double c = p.squaredNorm() - radius * radius;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  // Numerically stable positive root.
  return b >= 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
}

// Steihaug-CG on the model g'p + p'Hp/2 within ||p|| <= radius.
Subproblem steihaug(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& hvp,
                    const Eigen::VectorXd& g, double radius, double forcing_cap) {
  const double g_norm = g.norm();
  const double eps = std::min(forcing_cap, std::sqrt(g_norm)) * g_norm;
  const auto n = g.size();
  Subproblem out;
  out.step = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = g;
  Eigen::VectorXd d = -r;
  double rr = r.squaredNorm();
  const std::size_t max_cg = 2 * static_cast<std::size_t>(n) + 10;

  for (std::size_t j = 0; j < max_cg; ++j) {
    const Eigen::VectorXd hd = hvp(d);
    const double dhd = d.dot(hd);
    if (!(dhd > 0.0)) {
      // Negative curvature (or a NaN): follow d to the boundary.
      const double tau = to_boundary(out.step, d, radius);
      out.model_change += tau * r.dot(d) + 0.5 * tau * tau * (std::isfinite(dhd) ? dhd : 0.0);
      out.step += tau * d;
      out.on_boundary = true;
      out.scaled_norm = out.step.norm();
      return out;
    }
    const double alpha = rr / dhd;
    const Eigen::VectorXd next = out.step + alpha * d;
    if (next.norm() >= radius) {
      const double tau = to_boundary(out.step, d, radius);
      out.model_change += tau * r.dot(d) + 0.5 * tau * tau * dhd;
      out.step += tau * d;
      out.on_boundary = true;
      out.scaled_norm = out.step.norm();
      return out;
    }
    out.model_change -= 0.5 * alpha * rr;
    out.step = next;
    r += alpha * hd;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= eps) {
      out.scaled_norm = out.step.norm();
      return out;
    }
    d = -r + (rr_next / rr) * d;
    rr = rr_next;
  }
  out.scaled_norm = out.step.norm();
  return out;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(gtol > 0.0) || !(initial_radius > 0.0) || !(max_radius > 0.0) ||
      !(cg_tolerance > 0.0)) {
    throw InvalidConfiguration("optimizer tolerances and radii must be positive");
  }
  if (initial_radius > max_radius) {
    throw InvalidConfiguration("optimizer initial_radius exceeds max_radius");
  }
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::kConverged: return "converged";
    case FitStatus::kMaxIterations: return "max_iterations";
    case FitStatus::kStalled: return "stalled";
    case FitStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

FitStatus fit_status_from_string(const std::string& name) {
  for (FitStatus s : {FitStatus::kConverged, FitStatus::kMaxIterations,
                      FitStatus::kStalled, FitStatus::kDiverged}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  throw InvalidConfiguration(fmt::format("unknown fit status '{}'", name));
}

EvaluationCounts OptimizationTrace::total_evaluations() const {
  EvaluationCounts total;
  for (const auto& p : points) {
    total += p.step_evaluations;
  }
  return total;
}

MinimizeResult minimize_trust_region(const DifferentiableObjective& f,
                                     const Eigen::VectorXd& x0,
                                     const OptimizerConfig& config,
                                     const std::string& method,
                                     std::optional<double> objective_floor) {
  config.validate();
  if (x0.size() != static_cast<Eigen::Index>(f.dim())) {
    throw ContractViolation(fmt::format(
        "initial point has length {}, objective dimension {}", x0.size(), f.dim()));
  }
  if (!x0.allFinite()) {
    throw ContractViolation("initial point is not finite");
  }

  MinimizeResult result;
  result.trace.method = method;
  const EvaluationCounts start = f.evaluations();
  EvaluationCounts last = start;
  std::uint64_t cumulative = 0;

  auto record = [&](std::size_t step, const Eigen::VectorXd& x, double value,
                    double grad_norm) {
    const EvaluationCounts now = f.evaluations();
    TracePoint point;
    point.step = step;
    point.step_evaluations = now - last;
    cumulative += point.step_evaluations.total();
    point.cumulative_evaluations = cumulative;
    point.eta = x;
    point.objective = value;
    point.grad_norm = grad_norm;
    result.trace.points.push_back(std::move(point));
    last = now;
  };

  Eigen::VectorXd x = x0;
  double fx = f.value(x);
  if (!std::isfinite(fx)) {
    throw NonFiniteObjective(fmt::format("objective is {} at the initial point", fx), -1);
  }
  Eigen::VectorXd g = f.gradient(x);
  double g_norm = g.norm();
  record(0, x, fx, g_norm);

  double radius = config.initial_radius;
  const double roundoff = 100.0 * std::numeric_limits<double>::epsilon();
  FitStatus status = FitStatus::kMaxIterations;
  std::size_t iter = 0;

  while (true) {
    if (g_norm <= config.gtol) {
      status = FitStatus::kConverged;
      break;
    }
    if (objective_floor && fx < *objective_floor) {
      status = FitStatus::kDiverged;
      break;
    }
    if (iter >= config.max_iterations) {
      status = FitStatus::kMaxIterations;
      break;
    }
    if (radius < 1e-14 * std::max(1.0, x.norm())) {
      status = FitStatus::kStalled;
      break;
    }
    ++iter;

    // With scaling S the subproblem is solved for q = S^-1 p, which turns the
    // spherical region on q into an ellipsoid on p.
    const std::optional<Eigen::VectorXd> scale = f.scaling(x);
    Subproblem sub;
    if (scale) {
      const Eigen::VectorXd s = scale->cwiseSqrt();
      const auto scaled_hvp = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return s.cwiseProduct(f.hvp(x, s.cwiseProduct(v)));
      };
      sub = steihaug(scaled_hvp, s.cwiseProduct(g), radius, config.cg_tolerance);
      sub.step = s.cwiseProduct(sub.step);
    } else {
      sub = steihaug([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return f.hvp(x, v); },
                     g, radius, config.cg_tolerance);
    }
    const double predicted = -sub.model_change;
    const double step_norm = std::min(radius, sub.scaled_norm);
    const Eigen::VectorXd trial = x + sub.step;

    double f_trial = std::numeric_limits<double>::infinity();
    try {
      f_trial = f.value(trial);
    } catch (const NonFiniteObjective&) {
      // Treated as a failed step: the radius shrinks below.
    }
    if (!std::isfinite(f_trial)) {
      f_trial = std::numeric_limits<double>::infinity();
    }

    bool accept = false;
    Eigen::VectorXd g_trial;
    if (std::isfinite(f_trial) &&
        predicted <= roundoff * std::max(1.0, std::abs(fx))) {
      // The model decrease is at rounding level, so rho is noise; take the
      // step if the objective stays within rounding and stationarity improves.
      g_trial = f.gradient(trial);
      accept = f_trial <= fx + roundoff * std::max(1.0, std::abs(fx)) &&
               g_trial.norm() < g_norm;
      radius = accept ? radius : 0.25 * step_norm;
    } else {
      const double rho = predicted > 0.0 ? (fx - f_trial) / predicted : -1.0;
      if (rho < kShrinkBelow) {
        radius = 0.25 * step_norm;
      } else if (rho > kGrowAbove && sub.on_boundary) {
        radius = std::min(2.0 * radius, config.max_radius);
      }
      accept = rho > kEta;
      if (accept) {
        g_trial = f.gradient(trial);
      }
    }

    if (accept) {
      x = trial;
      fx = f_trial;
      g = std::move(g_trial);
      g_norm = g.norm();
    }
    record(iter, x, fx, g_norm);
  }

  result.x = x;
  result.value = fx;
  result.grad_norm = g_norm;
  result.status = status;
  result.iterations = iter;
  result.evaluations = f.evaluations() - start;
  return result;
}

}  // namespace dadvi

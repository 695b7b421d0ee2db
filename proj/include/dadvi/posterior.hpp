#ifndef DADVI_POSTERIOR_HPP
#define DADVI_POSTERIOR_HPP

#include "dadvi/linear_solve.hpp"
#include "dadvi/objective.hpp"
#include "dadvi/qoi.hpp"
#include "dadvi/variational.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dadvi {

/// v -> saa_hvp(eta_hat, v) at a fixed point; symmetric by construction.
class HessianOperator {
 public:
  HessianOperator(const ObjectiveBundle& bundle, MeanFieldParams eta_hat);

  std::size_t size() const noexcept { return 2 * eta_hat_.dim(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  LinearOperator as_operator() const;
  /// Dense Hessian by applying to unit vectors; a test oracle for small D.
  Eigen::MatrixXd dense() const;

 private:
  const ObjectiveBundle& bundle_;
  MeanFieldParams eta_hat_;
};

/// Diagonal approximation of H^-1: exp(2 xi) on the mu-block, 1 on the xi-block.
Eigen::VectorXd dadvi_preconditioner(const MeanFieldParams& eta_hat);

struct PosteriorConfig {
  CGConfig cg;
  double se_flag_fraction = 0.5;   ///< flag when mc_se > fraction * lr_sd
  double optimum_gtol = 1e-6;
  std::size_t curvature_probes = 5;
  std::uint64_t probe_seed = 0;
  bool verify = true;              ///< check optimality before post-processing
};

/**
 * Refuses (NotAtOptimum) unless ||saa_gradient|| <= gtol and v'Hv > 0 for
 * `probes` random directions drawn from the curvature-probe substream.
 */
void verify_optimum(const MeanFieldParams& eta_hat, const ObjectiveBundle& bundle,
                    double gtol = 1e-6, std::size_t probes = 5,
                    std::uint64_t seed = 0);

/// Linear-response covariance g1' H^-1 g2 with fixed-draw moment gradients.
double lr_covariance(const QuantityOfInterest& phi1, const QuantityOfInterest& phi2,
                     const MeanFieldParams& eta_hat, const ObjectiveBundle& bundle,
                     const PosteriorConfig& config = {});

/// LR covariance over all pairs; one CG solve per quantity.
Eigen::MatrixXd lr_covariance_matrix(const std::vector<QuantityOfInterest>& quantities,
                                     const MeanFieldParams& eta_hat,
                                     const ObjectiveBundle& bundle,
                                     const PosteriorConfig& config = {});

/**
 * Monte Carlo standard error of the fixed-draw estimate of E_q[phi]:
 * sqrt((1/N) x' Gamma x) with x = H^-1 grad f and
 * Gamma = (1/N) sum_n g_n g_n', g_n the single-draw objective gradients.
 */
double mc_error(const QuantityOfInterest& phi, const MeanFieldParams& eta_hat,
                const ObjectiveBundle& bundle, const PosteriorConfig& config = {});

struct QoIRow {
  std::string name;
  double mean = 0.0;
  double mf_sd = 0.0;   ///< delta-method SD under q (exact for linear phi)
  double lr_sd = 0.0;
  double mc_se = 0.0;
  std::size_t cg_iters = 0;
  bool se_flag = false;
  std::optional<std::string> error;  ///< set when this row could not be computed
};

struct QoIReport {
  std::vector<QoIRow> rows;
};

/// One row per quantity. Optimality is verified once up front; failures of a
/// single quantity are recorded in its row without aborting the others.
QoIReport build_qoi_report(const std::vector<QuantityOfInterest>& quantities,
                           const MeanFieldParams& eta_hat,
                           const ObjectiveBundle& bundle,
                           const PosteriorConfig& config = {});

}  // namespace dadvi

#endif  // DADVI_POSTERIOR_HPP

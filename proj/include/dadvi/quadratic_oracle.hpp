#ifndef DADVI_QUADRATIC_ORACLE_HPP
#define DADVI_QUADRATIC_ORACLE_HPP

#include "dadvi/draws.hpp"
#include "dadvi/quadratic_model.hpp"
#include "dadvi/variational.hpp"

#include <Eigen/Dense>

namespace dadvi {

// Closed-form mean-field solutions for QuadraticModel.

/// Exact mean-field optimum: mu* = A^-1 B, sigma*_d = A_dd^-1/2.
MeanFieldParams quadratic_exact_optimum(const QuadraticModel& model);

/**
 * Minimizer of the SAA objective for a given draw set.
 *
 * Profiling out mu gives mu = mu* - sigma .* zbar, and sigma minimizes the
 * strictly convex 1/2 sigma' (A o C) sigma - sum_d log sigma_d, where C is
 * the (1/N) sample covariance of the draws. For diagonal A this is
 * sigma_d^-2 = A_dd C_dd. Requires N >= 2; a zero sample variance in any
 * coordinate throws DegenerateDraws.
 */
MeanFieldParams quadratic_saa_optimum(const QuadraticModel& model,
                                      const DrawSet& draws);

/**
 * sigma_d^-2 = (R C R)_dd with R the symmetric square root of A. Equal in
 * distribution to the SAA optimum's sigma (and equal to it for diagonal A),
 * but not draw-by-draw in general.
 */
Eigen::VectorXd quadratic_saa_sigma_in_distribution(const QuadraticModel& model,
                                                    const DrawSet& draws);

/// (1/N) sum_n (z_n - zbar)(z_n - zbar)'.
Eigen::MatrixXd draw_covariance(const DrawSet& draws);

/// Exact mean-field objective for the quadratic model, constants dropped:
/// 1/2 mu'A mu + 1/2 sum_d A_dd sigma_d^2 - B'mu - sum_d xi_d.
double quadratic_exact_objective(const QuadraticModel& model,
                                 const MeanFieldParams& eta);

}  // namespace dadvi

#endif  // DADVI_QUADRATIC_ORACLE_HPP

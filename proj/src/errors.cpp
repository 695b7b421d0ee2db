#include "dadvi/errors.hpp"

#include <utility>

namespace dadvi {

NonFiniteObjective::NonFiniteObjective(const std::string& what,
                                       std::ptrdiff_t draw_index)
    : Error(what), draw_index_(draw_index) {}

CgNotConverged::CgNotConverged(const std::string& what, Eigen::VectorXd best,
                               double relative_residual,
                               std::size_t iterations)
    : Error(what),
      best_(std::move(best)),
      residual_(relative_residual),
      iterations_(iterations) {}

NotAtOptimum::NotAtOptimum(const std::string& what, double gradient_norm)
    : Error(what), gradient_norm_(gradient_norm) {}

}  // namespace dadvi

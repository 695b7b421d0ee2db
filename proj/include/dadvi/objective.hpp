#ifndef DADVI_OBJECTIVE_HPP
#define DADVI_OBJECTIVE_HPP

#include "dadvi/draws.hpp"
#include "dadvi/model.hpp"
#include "dadvi/variational.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace dadvi {

enum class Family { kMeanField, kFullRank };

/// Model evaluations, counted per draw.
struct EvaluationCounts {
  std::uint64_t value = 0;
  std::uint64_t gradient = 0;
  std::uint64_t hvp = 0;

  std::uint64_t total() const noexcept { return value + gradient + hvp; }
  EvaluationCounts& operator+=(const EvaluationCounts& other) noexcept;
  friend EvaluationCounts operator+(EvaluationCounts a, const EvaluationCounts& b) {
    return a += b;
  }
  friend EvaluationCounts operator-(const EvaluationCounts& a,
                                    const EvaluationCounts& b) noexcept;
  friend bool operator==(const EvaluationCounts&, const EvaluationCounts&) = default;
};

/**
 * A model, a fixed DrawSet and the variational family: everything that
 * defines one deterministic SAA objective.
 *
 * Immutable apart from the evaluation counters, which are atomic. Per-draw
 * work can be spread over `threads` workers; draws are grouped into blocks
 * whose boundaries depend only on N, and block partial sums are reduced in
 * block order, so every result is bit-identical for any thread count.
 */
class ObjectiveBundle {
 public:
  ObjectiveBundle(ModelPtr model, DrawSet draws,
                  Family family = Family::kMeanField, std::size_t threads = 1);
  ~ObjectiveBundle();
  ObjectiveBundle(ObjectiveBundle&&) noexcept;
  ObjectiveBundle& operator=(ObjectiveBundle&&) noexcept;

  const Model& model() const noexcept { return *model_; }
  const ModelPtr& model_ptr() const noexcept { return model_; }
  const DrawSet& draws() const noexcept { return draws_; }
  Family family() const noexcept { return family_; }
  std::size_t threads() const noexcept { return threads_; }
  std::size_t num_draws() const noexcept { return draws_.num_draws(); }

  EvaluationCounts counts() const noexcept;
  void record(const EvaluationCounts& delta) const noexcept;

  using PerDraw = std::function<void(std::size_t n, Eigen::VectorXd& accumulator)>;
  /// Sum over draws of per_draw contributions into a zero-initialized
  /// vector of length `size`. Exceptions from a draw are rethrown; the
  /// lowest-numbered failing block wins, independent of scheduling.
  Eigen::VectorXd sum_over_draws(Eigen::Index size, const PerDraw& per_draw) const;

 private:
  struct Counters;
  struct Workers;

  ModelPtr model_;
  DrawSet draws_;
  Family family_;
  std::size_t threads_;
  std::unique_ptr<Counters> counters_;
  std::unique_ptr<Workers> workers_;
};

// Mean-field SAA objective
//   K(eta | Z) = -sum_d xi_d - (1/N) sum_n log p(mu + z_n .* exp(xi))
// and its exact derivatives in eta = (mu, xi).

double saa_objective(const MeanFieldParams& eta, const ObjectiveBundle& bundle);
Eigen::VectorXd saa_gradient(const MeanFieldParams& eta,
                             const ObjectiveBundle& bundle);
Eigen::VectorXd saa_hvp(const MeanFieldParams& eta, const Eigen::VectorXd& v,
                        const ObjectiveBundle& bundle);

/// K(eta | z_n) for every draw n, i.e. the single-draw objectives.
std::vector<double> per_draw_objective(const MeanFieldParams& eta,
                                       const ObjectiveBundle& bundle);
/// grad_eta K(eta | z_n) for a single draw.
Eigen::VectorXd single_draw_gradient(const MeanFieldParams& eta, std::size_t n,
                                     const ObjectiveBundle& bundle);

/// The two pieces of the full-rank objective.
struct FullRankObjectiveTerms {
  double neg_entropy;           ///< -log |det R|
  double neg_mean_log_density;  ///< -(1/N) sum_n log p(mu + R z_n)
  double total() const noexcept { return neg_entropy + neg_mean_log_density; }
};

/// Full-rank objective for an arbitrary square R. Throws NonFiniteObjective
/// for singular R.
FullRankObjectiveTerms saa_objective_fullrank_terms(const FullRankParams& eta,
                                                    const ObjectiveBundle& bundle);
double saa_objective_fullrank(const FullRankParams& eta,
                              const ObjectiveBundle& bundle);

// Derivatives of the full-rank objective in the packed lower-triangular
// coordinates of FullRankLayout.
double saa_objective_fullrank_packed(const Eigen::VectorXd& packed,
                                     const FullRankLayout& layout,
                                     const ObjectiveBundle& bundle);
Eigen::VectorXd saa_gradient_fullrank(const Eigen::VectorXd& packed,
                                      const FullRankLayout& layout,
                                      const ObjectiveBundle& bundle);
Eigen::VectorXd saa_hvp_fullrank(const Eigen::VectorXd& packed,
                                 const Eigen::VectorXd& v,
                                 const FullRankLayout& layout,
                                 const ObjectiveBundle& bundle);

}  // namespace dadvi

#endif  // DADVI_OBJECTIVE_HPP

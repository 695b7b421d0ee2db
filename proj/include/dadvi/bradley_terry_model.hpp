#ifndef DADVI_BRADLEY_TERRY_MODEL_HPP
#define DADVI_BRADLEY_TERRY_MODEL_HPP

#include "dadvi/model.hpp"

#include <cstdint>
#include <vector>

namespace dadvi {

struct Match {
  std::size_t winner;
  std::size_t loser;
};

/**
 * Bradley-Terry rating model on the constrained space (theta_1..theta_M, sigma):
 *
 *   theta_i ~ Normal(0, sigma^2),  sigma ~ HalfNormal(1),
 *   P(winner beats loser) = logistic(theta_winner - theta_loser).
 *
 * Use make_bradley_terry for the unconstrained (log sigma) version that the
 * variational machinery expects.
 */
class BradleyTerryModel final : public Model {
 public:
  BradleyTerryModel(std::size_t num_players, std::vector<Match> matches);

  std::size_t dim() const override { return num_players_ + 1; }
  std::string name() const override { return "bradley_terry"; }
  /// -inf when sigma <= 0.
  double log_density(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x,
                      const Eigen::VectorXd& v) const override;

  std::size_t num_players() const noexcept { return num_players_; }
  const std::vector<Match>& matches() const noexcept { return matches_; }

 private:
  std::size_t num_players_;
  std::vector<Match> matches_;
};

/// Seeded synthetic season: true ratings drawn from Normal(0, 1), each match
/// between two distinct uniformly chosen players.
std::vector<Match> synthesize_matches(std::size_t num_players,
                                      std::size_t num_matches,
                                      std::uint64_t seed);

/// Bradley-Terry on the unconstrained space (theta, log sigma); dim = M + 1.
ModelPtr make_bradley_terry(std::size_t num_players, std::size_t num_matches,
                            std::uint64_t seed);

/// Numerically stable log(logistic(x)).
double log_logistic(double x);
double logistic(double x);

}  // namespace dadvi

#endif  // DADVI_BRADLEY_TERRY_MODEL_HPP

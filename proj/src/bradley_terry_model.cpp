#include "dadvi/bradley_terry_model.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/random.hpp"
#include "dadvi/transform.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace dadvi {

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

}  // namespace

double log_logistic(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

BradleyTerryModel::BradleyTerryModel(std::size_t num_players,
                                     std::vector<Match> matches)
    : num_players_(num_players), matches_(std::move(matches)) {
  if (num_players_ < 2) {
    throw InvalidConfiguration("Bradley-Terry model needs at least two players");
  }
  for (const Match& match : matches_) {
    if (match.winner >= num_players_ || match.loser >= num_players_ ||
        match.winner == match.loser) {
      throw InvalidConfiguration(fmt::format(
          "Bradley-Terry model: invalid match ({}, {}) for {} players",
          match.winner, match.loser, num_players_));
    }
  }
}

double BradleyTerryModel::log_density(const Eigen::VectorXd& x) const {
  check_dim(x);
  const auto m = static_cast<Eigen::Index>(num_players_);
  const double sigma = x[m];
  if (!(sigma > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  const auto ratings = x.head(m);
  const double n = static_cast<double>(num_players_);
  double lp = -0.5 * n * kLogTwoPi - n * std::log(sigma) -
              0.5 * ratings.squaredNorm() / (sigma * sigma);
  lp += 0.5 * std::log(2.0 / std::numbers::pi) - 0.5 * sigma * sigma;
  for (const Match& match : matches_) {
    lp += log_logistic(x[static_cast<Eigen::Index>(match.winner)] -
                       x[static_cast<Eigen::Index>(match.loser)]);
  }
  return lp;
}

Eigen::VectorXd BradleyTerryModel::gradient(const Eigen::VectorXd& x) const {
  check_dim(x);
  const auto m = static_cast<Eigen::Index>(num_players_);
  const double sigma = x[m];
  const double s2 = sigma * sigma;
  const auto ratings = x.head(m);
  Eigen::VectorXd g(x.size());
  g.head(m) = -ratings / s2;
  g[m] = -static_cast<double>(num_players_) / sigma +
         ratings.squaredNorm() / (s2 * sigma) - sigma;
  for (const Match& match : matches_) {
    const auto w = static_cast<Eigen::Index>(match.winner);
    const auto l = static_cast<Eigen::Index>(match.loser);
    const double upset = logistic(x[l] - x[w]);
    g[w] += upset;
    g[l] -= upset;
  }
  return g;
}

Eigen::VectorXd BradleyTerryModel::hvp(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& v) const {
  check_dim(x);
  check_dim(v, "v");
  const auto m = static_cast<Eigen::Index>(num_players_);
  const double sigma = x[m];
  const double s2 = sigma * sigma;
  const auto ratings = x.head(m);
  const auto v_ratings = v.head(m);
  const double v_sigma = v[m];
  Eigen::VectorXd out(x.size());
  out.head(m) = -v_ratings / s2 + (2.0 * v_sigma / (s2 * sigma)) * ratings;
  out[m] = 2.0 * ratings.dot(v_ratings) / (s2 * sigma) +
           (static_cast<double>(num_players_) / s2 -
            3.0 * ratings.squaredNorm() / (s2 * s2) - 1.0) *
               v_sigma;
  for (const Match& match : matches_) {
    const auto w = static_cast<Eigen::Index>(match.winner);
    const auto l = static_cast<Eigen::Index>(match.loser);
    const double p = logistic(x[w] - x[l]);
    const double curvature = p * (1.0 - p);
    const double dv = v[w] - v[l];
    out[w] -= curvature * dv;
    out[l] += curvature * dv;
  }
  return out;
}

std::vector<Match> synthesize_matches(std::size_t num_players,
                                      std::size_t num_matches,
                                      std::uint64_t seed) {
  if (num_players < 2) {
    throw InvalidConfiguration("Bradley-Terry model needs at least two players");
  }
  NormalStream stream(derive_seed(seed, Stream::kModelData));
  std::vector<double> skill(num_players);
  for (double& s : skill) {
    s = stream.next();
  }
  const auto pick = [&](std::size_t bound) {
    auto k = static_cast<std::size_t>(stream.uniform() * static_cast<double>(bound));
    return k < bound ? k : bound - 1;
  };
  std::vector<Match> matches;
  matches.reserve(num_matches);
  for (std::size_t k = 0; k < num_matches; ++k) {
    const std::size_t i = pick(num_players);
    std::size_t j = pick(num_players - 1);
    if (j >= i) {
      ++j;
    }
    const bool i_wins = stream.uniform() < logistic(skill[i] - skill[j]);
    matches.push_back(i_wins ? Match{i, j} : Match{j, i});
  }
  return matches;
}

ModelPtr make_bradley_terry(std::size_t num_players, std::size_t num_matches,
                            std::uint64_t seed) {
  auto base = std::make_shared<BradleyTerryModel>(
      num_players, synthesize_matches(num_players, num_matches, seed));
  std::vector<bool> positive(num_players + 1, false);
  positive.back() = true;
  return transform_model(std::move(base), ParameterTransform(std::move(positive)));
}

}  // namespace dadvi

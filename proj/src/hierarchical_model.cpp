#include "dadvi/hierarchical_model.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/random.hpp"

#include <cmath>
#include <numbers>

namespace dadvi {

namespace {

const double kLogTwoPi = std::log(2.0 * std::numbers::pi);
const double kLogHalfNormalConst = 0.5 * std::log(2.0 / std::numbers::pi);

}  // namespace

HierarchicalModel::HierarchicalModel(std::vector<double> observations)
    : y_(std::move(observations)) {
  if (y_.empty()) {
    throw InvalidConfiguration("hierarchical model needs at least one group");
  }
}

double HierarchicalModel::local_term(const Eigen::VectorXd& gamma,
                                     const Eigen::VectorXd& lambda,
                                     std::size_t p) const {
  const double m = gamma[0];
  const double log_tau = gamma[1];
  const double resid = y_[p] - lambda[0];
  const double dev = lambda[0] - m;
  return -kLogTwoPi - 0.5 * resid * resid - log_tau -
         0.5 * dev * dev * std::exp(-2.0 * log_tau);
}

double HierarchicalModel::global_term(const Eigen::VectorXd& gamma) const {
  const double m = gamma[0];
  const double log_tau = gamma[1];
  // Normal(0,1) on m, HalfNormal(1) on tau, plus log|d tau / d log tau|.
  return -0.5 * kLogTwoPi - 0.5 * m * m + kLogHalfNormalConst -
         0.5 * std::exp(2.0 * log_tau) + log_tau;
}

double HierarchicalModel::log_density(const Eigen::VectorXd& theta) const {
  check_dim(theta);
  const double m = theta[0];
  const double log_tau = theta[1];
  const double w = std::exp(-2.0 * log_tau);
  const auto num_groups = static_cast<Eigen::Index>(y_.size());
  double sum_resid2 = 0.0;
  double sum_dev2 = 0.0;
  for (Eigen::Index p = 0; p < num_groups; ++p) {
    const double lambda = theta[2 + p];
    const double resid = y_[static_cast<std::size_t>(p)] - lambda;
    const double dev = lambda - m;
    sum_resid2 += resid * resid;
    sum_dev2 += dev * dev;
  }
  const double n = static_cast<double>(num_groups);
  return -n * kLogTwoPi - 0.5 * sum_resid2 - n * log_tau - 0.5 * w * sum_dev2 +
         global_term(theta.head<2>());
}

Eigen::VectorXd HierarchicalModel::gradient(const Eigen::VectorXd& theta) const {
  check_dim(theta);
  const double m = theta[0];
  const double log_tau = theta[1];
  const double w = std::exp(-2.0 * log_tau);
  const auto num_groups = static_cast<Eigen::Index>(y_.size());
  Eigen::VectorXd g(theta.size());
  double sum_dev = 0.0;
  double sum_dev2 = 0.0;
  for (Eigen::Index p = 0; p < num_groups; ++p) {
    const double lambda = theta[2 + p];
    const double dev = lambda - m;
    sum_dev += dev;
    sum_dev2 += dev * dev;
    g[2 + p] = (y_[static_cast<std::size_t>(p)] - lambda) - w * dev;
  }
  g[0] = -m + w * sum_dev;
  g[1] = -std::exp(2.0 * log_tau) + 1.0 - static_cast<double>(num_groups) +
         w * sum_dev2;
  return g;
}

Eigen::VectorXd HierarchicalModel::hvp(const Eigen::VectorXd& theta,
                                       const Eigen::VectorXd& v) const {
  check_dim(theta);
  check_dim(v, "v");
  const double m = theta[0];
  const double log_tau = theta[1];
  const double w = std::exp(-2.0 * log_tau);
  const double v_m = v[0];
  const double v_rho = v[1];
  const auto num_groups = static_cast<Eigen::Index>(y_.size());
  Eigen::VectorXd out(theta.size());
  double sum_dev = 0.0;
  double sum_dev2 = 0.0;
  double sum_v_lambda = 0.0;
  double sum_dev_v_lambda = 0.0;
  for (Eigen::Index p = 0; p < num_groups; ++p) {
    const double dev = theta[2 + p] - m;
    const double v_lambda = v[2 + p];
    sum_dev += dev;
    sum_dev2 += dev * dev;
    sum_v_lambda += v_lambda;
    sum_dev_v_lambda += dev * v_lambda;
    out[2 + p] = w * v_m + 2.0 * w * dev * v_rho - (1.0 + w) * v_lambda;
  }
  const double n = static_cast<double>(num_groups);
  const double h_m_rho = -2.0 * w * sum_dev;
  out[0] = (-1.0 - n * w) * v_m + h_m_rho * v_rho + w * sum_v_lambda;
  out[1] = h_m_rho * v_m +
           (-2.0 * std::exp(2.0 * log_tau) - 2.0 * w * sum_dev2) * v_rho +
           2.0 * w * sum_dev_v_lambda;
  return out;
}

std::shared_ptr<HierarchicalModel> instantiate_hierarchical(
    std::size_t num_groups, std::uint64_t seed) {
  if (num_groups == 0) {
    throw InvalidConfiguration("hierarchical model: P must be >= 1");
  }
  NormalStream stream(derive_seed(seed, Stream::kModelData));
  std::vector<double> y(num_groups);
  for (double& obs : y) {
    const double lambda =
        HierarchicalModel::kTrueMean + HierarchicalModel::kTrueScale * stream.next();
    obs = lambda + stream.next();
  }
  return std::make_shared<HierarchicalModel>(std::move(y));
}

}  // namespace dadvi

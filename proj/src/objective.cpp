#include "dadvi/objective.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <cmath>
#include <exception>
#include <limits>

namespace dadvi {

namespace {

// Fixed block layout: block boundaries depend on N only.
constexpr std::size_t kMaxBlocks = 64;

std::size_t block_count(std::size_t n) { return std::min(n, kMaxBlocks); }

std::size_t block_begin(std::size_t block, std::size_t blocks, std::size_t n) {
  return block * n / blocks;
}

void check_family(const ObjectiveBundle& bundle, Family expected) {
  if (bundle.family() != expected) {
    throw ContractViolation(expected == Family::kMeanField
                                ? "objective bundle is not mean-field"
                                : "objective bundle is not full-rank");
  }
}

void check_params(const MeanFieldParams& eta, const ObjectiveBundle& bundle) {
  if (eta.mu.size() != eta.xi.size() ||
      eta.dim() != bundle.model().dim()) {
    throw ContractViolation(fmt::format(
        "variational parameters have dimension {}, model {}", eta.dim(),
        bundle.model().dim()));
  }
  if (bundle.draws().dim() != bundle.model().dim()) {
    throw ContractViolation(fmt::format("draws have dimension {}, model {}",
                                        bundle.draws().dim(),
                                        bundle.model().dim()));
  }
}

double checked_log_density(const Model& model, const Eigen::VectorXd& theta,
                           std::size_t n) {
  const double value = model.log_density(theta);
  if (!std::isfinite(value)) {
    throw NonFiniteObjective(
        fmt::format("log density is {} at draw {}", value, n),
        static_cast<std::ptrdiff_t>(n));
  }
  return value;
}

Eigen::VectorXd checked_gradient(const Model& model, const Eigen::VectorXd& theta,
                                 std::size_t n) {
  Eigen::VectorXd g = model.gradient(theta);
  if (!g.allFinite()) {
    throw NonFiniteObjective(fmt::format("non-finite gradient at draw {}", n),
                             static_cast<std::ptrdiff_t>(n));
  }
  return g;
}

double inverse_count(const ObjectiveBundle& bundle) {
  return 1.0 / static_cast<double>(bundle.num_draws());
}

}  // namespace

EvaluationCounts& EvaluationCounts::operator+=(const EvaluationCounts& other) noexcept {
  value += other.value;
  gradient += other.gradient;
  hvp += other.hvp;
  return *this;
}

EvaluationCounts operator-(const EvaluationCounts& a,
                           const EvaluationCounts& b) noexcept {
  return {a.value - b.value, a.gradient - b.gradient, a.hvp - b.hvp};
}

struct ObjectiveBundle::Counters {
  std::atomic<std::uint64_t> value{0};
  std::atomic<std::uint64_t> gradient{0};
  std::atomic<std::uint64_t> hvp{0};
};

struct ObjectiveBundle::Workers {
  explicit Workers(std::size_t threads) : arena(static_cast<int>(threads)) {}
  tbb::task_arena arena;
};

ObjectiveBundle::ObjectiveBundle(ModelPtr model, DrawSet draws, Family family,
                                 std::size_t threads)
    : model_(std::move(model)),
      draws_(std::move(draws)),
      family_(family),
      threads_(threads == 0 ? 1 : threads),
      counters_(std::make_unique<Counters>()) {
  if (!model_) {
    throw ContractViolation("objective bundle needs a model");
  }
  if (draws_.dim() != model_->dim()) {
    throw ContractViolation(fmt::format("draws have dimension {}, model {}",
                                        draws_.dim(), model_->dim()));
  }
  if (threads_ > 1) {
    workers_ = std::make_unique<Workers>(threads_);
  }
}

ObjectiveBundle::~ObjectiveBundle() = default;
ObjectiveBundle::ObjectiveBundle(ObjectiveBundle&&) noexcept = default;
ObjectiveBundle& ObjectiveBundle::operator=(ObjectiveBundle&&) noexcept = default;

EvaluationCounts ObjectiveBundle::counts() const noexcept {
  return {counters_->value.load(), counters_->gradient.load(),
          counters_->hvp.load()};
}

void ObjectiveBundle::record(const EvaluationCounts& delta) const noexcept {
  counters_->value.fetch_add(delta.value);
  counters_->gradient.fetch_add(delta.gradient);
  counters_->hvp.fetch_add(delta.hvp);
}

Eigen::VectorXd ObjectiveBundle::sum_over_draws(Eigen::Index size,
                                                const PerDraw& per_draw) const {
  const std::size_t n = num_draws();
  const std::size_t blocks = block_count(n);
  std::vector<Eigen::VectorXd> partial(blocks);
  std::vector<std::exception_ptr> failures(blocks);

  auto run_block = [&](std::size_t b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(size);
    try {
      const std::size_t end = block_begin(b + 1, blocks, n);
      for (std::size_t i = block_begin(b, blocks, n); i < end; ++i) {
        per_draw(i, acc);
      }
    } catch (...) {
      failures[b] = std::current_exception();
    }
    partial[b] = std::move(acc);
  };

  if (workers_) {
    workers_->arena.execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, blocks, 1),
                        [&](const tbb::blocked_range<std::size_t>& range) {
                          for (std::size_t b = range.begin(); b < range.end(); ++b) {
                            run_block(b);
                          }
                        });
    });
  } else {
    for (std::size_t b = 0; b < blocks; ++b) {
      run_block(b);
      if (failures[b]) {
        break;
      }
    }
  }

  for (const auto& failure : failures) {
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(size);
  for (const auto& p : partial) {
    total += p;
  }
  return total;
}

double saa_objective(const MeanFieldParams& eta, const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kMeanField);
  check_params(eta, bundle);
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const Eigen::VectorXd sigma = eta.sigma();
  const Eigen::VectorXd sum = bundle.sum_over_draws(1, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd theta = eta.mu + z.row(static_cast<Eigen::Index>(n)).transpose().cwiseProduct(sigma);
    acc[0] += checked_log_density(model, theta, n);
  });
  bundle.record({bundle.num_draws(), 0, 0});
  return negative_entropy_term(eta) - sum[0] * inverse_count(bundle);
}

Eigen::VectorXd saa_gradient(const MeanFieldParams& eta,
                             const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kMeanField);
  check_params(eta, bundle);
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const auto d = static_cast<Eigen::Index>(eta.dim());
  const Eigen::VectorXd sigma = eta.sigma();
  // acc = (sum g_n, sum g_n .* z_n)
  const Eigen::VectorXd sum = bundle.sum_over_draws(2 * d, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd zn = z.row(static_cast<Eigen::Index>(n)).transpose();
    const Eigen::VectorXd g = checked_gradient(model, eta.mu + zn.cwiseProduct(sigma), n);
    acc.head(d) += g;
    acc.tail(d) += g.cwiseProduct(zn);
  });
  bundle.record({0, bundle.num_draws(), 0});
  const double inv_n = inverse_count(bundle);
  Eigen::VectorXd grad(2 * d);
  grad.head(d) = -inv_n * sum.head(d);
  grad.tail(d) = -Eigen::VectorXd::Ones(d) - inv_n * sum.tail(d).cwiseProduct(sigma);
  return grad;
}

Eigen::VectorXd saa_hvp(const MeanFieldParams& eta, const Eigen::VectorXd& v,
                        const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kMeanField);
  check_params(eta, bundle);
  const auto d = static_cast<Eigen::Index>(eta.dim());
  if (v.size() != 2 * d) {
    throw ContractViolation(fmt::format(
        "Hessian-vector product: v has length {}, expected {}", v.size(), 2 * d));
  }
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const Eigen::VectorXd sigma = eta.sigma();
  const Eigen::VectorXd v_mu = v.head(d);
  const Eigen::VectorXd v_xi = v.tail(d);
  const Eigen::VectorXd sigma_v_xi = sigma.cwiseProduct(v_xi);
  // acc = (sum h_n, sum h_n .* z_n, sum g_n .* z_n)
  const Eigen::VectorXd sum = bundle.sum_over_draws(3 * d, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd zn = z.row(static_cast<Eigen::Index>(n)).transpose();
    const Eigen::VectorXd theta = eta.mu + zn.cwiseProduct(sigma);
    const Eigen::VectorXd dtheta = v_mu + zn.cwiseProduct(sigma_v_xi);
    const Eigen::VectorXd h = model.hvp(theta, dtheta);
    const Eigen::VectorXd g = checked_gradient(model, theta, n);
    if (!h.allFinite()) {
      throw NonFiniteObjective(
          fmt::format("non-finite Hessian-vector product at draw {}", n),
          static_cast<std::ptrdiff_t>(n));
    }
    acc.segment(0, d) += h;
    acc.segment(d, d) += h.cwiseProduct(zn);
    acc.segment(2 * d, d) += g.cwiseProduct(zn);
  });
  bundle.record({0, 0, bundle.num_draws()});
  const double inv_n = inverse_count(bundle);
  Eigen::VectorXd out(2 * d);
  out.head(d) = -inv_n * sum.segment(0, d);
  out.tail(d) = -inv_n * (sum.segment(d, d).cwiseProduct(sigma) +
                          sum.segment(2 * d, d).cwiseProduct(sigma_v_xi));
  return out;
}

std::vector<double> per_draw_objective(const MeanFieldParams& eta,
                                       const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kMeanField);
  check_params(eta, bundle);
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const Eigen::VectorXd sigma = eta.sigma();
  const double entropy = negative_entropy_term(eta);
  const auto n = static_cast<Eigen::Index>(bundle.num_draws());
  // Each draw writes its own slot, so the block sum is just a scatter.
  const Eigen::VectorXd values = bundle.sum_over_draws(n, [&](std::size_t i, Eigen::VectorXd& acc) {
    const Eigen::VectorXd theta = eta.mu + z.row(static_cast<Eigen::Index>(i)).transpose().cwiseProduct(sigma);
    acc[static_cast<Eigen::Index>(i)] = entropy - checked_log_density(model, theta, i);
  });
  bundle.record({bundle.num_draws(), 0, 0});
  return {values.data(), values.data() + values.size()};
}

Eigen::VectorXd single_draw_gradient(const MeanFieldParams& eta, std::size_t n,
                                     const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kMeanField);
  check_params(eta, bundle);
  if (n >= bundle.num_draws()) {
    throw ContractViolation(fmt::format("draw index {} out of range", n));
  }
  const auto d = static_cast<Eigen::Index>(eta.dim());
  const Eigen::VectorXd sigma = eta.sigma();
  const Eigen::VectorXd zn = bundle.draws().draw(n);
  const Eigen::VectorXd g = checked_gradient(bundle.model(), eta.mu + zn.cwiseProduct(sigma), n);
  bundle.record({0, 1, 0});
  Eigen::VectorXd out(2 * d);
  out.head(d) = -g;
  out.tail(d) = -Eigen::VectorXd::Ones(d) - g.cwiseProduct(sigma).cwiseProduct(zn);
  return out;
}

FullRankObjectiveTerms saa_objective_fullrank_terms(const FullRankParams& eta,
                                                    const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kFullRank);
  const auto d = static_cast<Eigen::Index>(bundle.model().dim());
  if (eta.mu.size() != d || eta.r.rows() != d || eta.r.cols() != d) {
    throw ContractViolation("full-rank parameters do not match the model dimension");
  }
  double log_abs_det = 0.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(eta.r);
  const Eigen::MatrixXd& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double pivot = std::abs(u(i, i));
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NonFiniteObjective("R is singular: log |det R| is not finite", -1);
    }
    log_abs_det += std::log(pivot);
  }
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const Eigen::VectorXd sum = bundle.sum_over_draws(1, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd theta = eta.mu + eta.r * z.row(static_cast<Eigen::Index>(n)).transpose();
    acc[0] += checked_log_density(model, theta, n);
  });
  bundle.record({bundle.num_draws(), 0, 0});
  return {-log_abs_det, -sum[0] * inverse_count(bundle)};
}

double saa_objective_fullrank(const FullRankParams& eta,
                              const ObjectiveBundle& bundle) {
  return saa_objective_fullrank_terms(eta, bundle).total();
}

double saa_objective_fullrank_packed(const Eigen::VectorXd& packed,
                                     const FullRankLayout& layout,
                                     const ObjectiveBundle& bundle) {
  const FullRankParams eta = layout.unpack(packed);
  const auto d = static_cast<Eigen::Index>(layout.dim());
  // The diagonal of R is exp(packed log-diagonal), so log |det R| is exact.
  check_family(bundle, Family::kFullRank);
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  const Eigen::VectorXd sum = bundle.sum_over_draws(1, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd theta =
        eta.mu + eta.r.triangularView<Eigen::Lower>() * z.row(static_cast<Eigen::Index>(n)).transpose();
    acc[0] += checked_log_density(model, theta, n);
  });
  bundle.record({bundle.num_draws(), 0, 0});
  return -packed.segment(d, d).sum() - sum[0] * inverse_count(bundle);
}

Eigen::VectorXd saa_gradient_fullrank(const Eigen::VectorXd& packed,
                                      const FullRankLayout& layout,
                                      const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kFullRank);
  const FullRankParams eta = layout.unpack(packed);
  const auto d = static_cast<Eigen::Index>(layout.dim());
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  // acc = (sum g_n, vec(sum g_n z_n')) with the outer product column-major.
  const Eigen::VectorXd sum = bundle.sum_over_draws(d + d * d, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd zn = z.row(static_cast<Eigen::Index>(n)).transpose();
    const Eigen::VectorXd g =
        checked_gradient(model, eta.mu + eta.r.triangularView<Eigen::Lower>() * zn, n);
    acc.head(d) += g;
    Eigen::Map<Eigen::MatrixXd>(acc.data() + d, d, d).noalias() += g * zn.transpose();
  });
  bundle.record({0, bundle.num_draws(), 0});
  const double inv_n = inverse_count(bundle);
  const Eigen::Map<const Eigen::MatrixXd> gz(sum.data() + d, d, d);
  Eigen::VectorXd grad(static_cast<Eigen::Index>(layout.size()));
  grad.head(d) = -inv_n * sum.head(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    grad[d + i] = -1.0 - inv_n * eta.r(i, i) * gz(i, i);
  }
  if (!layout.diagonal_only()) {
    Eigen::Index k = 2 * d;
    for (Eigen::Index i = 1; i < d; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        grad[k++] = -inv_n * gz(i, j);
      }
    }
  }
  return grad;
}

Eigen::VectorXd saa_hvp_fullrank(const Eigen::VectorXd& packed,
                                 const Eigen::VectorXd& v,
                                 const FullRankLayout& layout,
                                 const ObjectiveBundle& bundle) {
  check_family(bundle, Family::kFullRank);
  if (v.size() != packed.size()) {
    throw ContractViolation("full-rank Hessian-vector product: length mismatch");
  }
  const FullRankParams eta = layout.unpack(packed);
  const auto d = static_cast<Eigen::Index>(layout.dim());
  // Perturbation of R in matrix form: dR_ii = R_ii v_ii, dR_ij = v_ij.
  Eigen::MatrixXd dr = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    dr(i, i) = eta.r(i, i) * v[d + i];
  }
  if (!layout.diagonal_only()) {
    Eigen::Index k = 2 * d;
    for (Eigen::Index i = 1; i < d; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        dr(i, j) = v[k++];
      }
    }
  }
  const Eigen::VectorXd v_mu = v.head(d);
  const Model& model = bundle.model();
  const DrawMatrix& z = bundle.draws().matrix();
  // acc = (sum h_n, vec(sum h_n z_n'), sum g_n .* z_n)
  const Eigen::VectorXd sum = bundle.sum_over_draws(2 * d + d * d, [&](std::size_t n, Eigen::VectorXd& acc) {
    const Eigen::VectorXd zn = z.row(static_cast<Eigen::Index>(n)).transpose();
    const Eigen::VectorXd theta = eta.mu + eta.r.triangularView<Eigen::Lower>() * zn;
    const Eigen::VectorXd h = model.hvp(theta, v_mu + dr * zn);
    if (!h.allFinite()) {
      throw NonFiniteObjective(
          fmt::format("non-finite Hessian-vector product at draw {}", n),
          static_cast<std::ptrdiff_t>(n));
    }
    const Eigen::VectorXd g = checked_gradient(model, theta, n);
    acc.head(d) += h;
    Eigen::Map<Eigen::MatrixXd>(acc.data() + d, d, d).noalias() += h * zn.transpose();
    acc.tail(d) += g.cwiseProduct(zn);
  });
  bundle.record({0, 0, bundle.num_draws()});
  const double inv_n = inverse_count(bundle);
  const Eigen::Map<const Eigen::MatrixXd> hz(sum.data() + d, d, d);
  const Eigen::VectorXd gz = sum.tail(d);
  Eigen::VectorXd out(static_cast<Eigen::Index>(layout.size()));
  out.head(d) = -inv_n * sum.head(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double rii = eta.r(i, i);
    out[d + i] = -inv_n * (rii * hz(i, i) + rii * v[d + i] * gz[i]);
  }
  if (!layout.diagonal_only()) {
    Eigen::Index k = 2 * d;
    for (Eigen::Index i = 1; i < d; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        out[k++] = -inv_n * hz(i, j);
      }
    }
  }
  return out;
}

}  // namespace dadvi

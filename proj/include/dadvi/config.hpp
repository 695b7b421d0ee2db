#ifndef DADVI_CONFIG_HPP
#define DADVI_CONFIG_HPP

#include "dadvi/experiments.hpp"
#include "dadvi/io.hpp"
#include "dadvi/model.hpp"
#include "dadvi/optimize.hpp"
#include "dadvi/posterior.hpp"
#include "dadvi/qoi.hpp"

#include <string>
#include <vector>

namespace dadvi {

/**
 * Resolved run configuration.
 *
 * The file format is JSON. Parsing merges the user's document over the
 * defaults, rejecting unknown keys and values of the wrong type; the stored
 * document is therefore complete and canonical (keys in default order), and
 * serialize(parse(text)) is a fixed point. Model and experiment blocks take
 * their allowed keys from the selected `name`; quantity entries from `kind`.
 */
class RunConfig {
 public:
  /// All defaults: quadratic model with A = [[1]], B = [0].
  RunConfig();

  static RunConfig parse(const std::string& text);
  static RunConfig from_json(const Json& document);

  /// Applies "dotted.path=value"; value is read as JSON when it parses,
  /// otherwise as a string. The result is re-validated.
  void apply_override(const std::string& assignment);

  const Json& document() const noexcept { return doc_; }
  std::string serialize() const;

  std::string model_name() const;
  std::size_t num_draws() const;
  std::uint64_t seed() const;
  std::size_t threads() const;
  std::string output_dir() const;
  std::string experiment_name() const;

  ModelPtr build_model() const;
  /// The configured quantities, or every coordinate when none are listed.
  std::vector<QuantityOfInterest> build_quantities(std::size_t dim) const;
  OptimizerConfig optimizer() const;
  PosteriorConfig posterior() const;

  TraceExperimentConfig trace_experiment() const;
  CoverageExperiment coverage_experiment() const;
  ScalingExperiment scaling_experiment() const;
  struct Degeneracy {
    std::size_t dim;
    std::size_t num_draws;
    double epsilon;
    std::vector<double> log_m_values;
  };
  Degeneracy degeneracy_experiment() const;

 private:
  explicit RunConfig(Json doc) : doc_(std::move(doc)) {}
  Json doc_;
};

/// Names accepted by the `model.name` key.
std::vector<std::string> model_names();
/// Names accepted by the `experiment.name` key ("none" disables it).
std::vector<std::string> experiment_names();

}  // namespace dadvi

#endif  // DADVI_CONFIG_HPP

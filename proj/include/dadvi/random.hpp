#ifndef DADVI_RANDOM_HPP
#define DADVI_RANDOM_HPP

#include <cstdint>
#include <random>

namespace dadvi {

/**
 * Named substreams hanging off a single top-level seed.
 *
 * Every random quantity in a run is generated from
 * derive_seed(top_level_seed, stream, index), so any sub-artifact can be
 * regenerated on its own. The numeric values are part of the artifact
 * format and must not be renumbered.
 */
enum class Stream : std::uint64_t {
  kDraws = 1,              ///< the fixed DrawSet of a DADVI fit
  kStochasticGradient = 2, ///< per-step draws of the SG baseline, index = step
  kCurvatureProbes = 3,    ///< probe vectors for the optimality check
  kIndependentDraws = 4,   ///< Z_indep for trace normalization
  kReplication = 5,        ///< experiment replications, index = replication key
  kModelData = 6,          ///< synthetic data of built-in models
  kInitialization = 7,     ///< random starting points
};

/// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of substream `stream`/`index` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::uint64_t index = 0) noexcept;

/**
 * Standard-normal generator with a documented, platform-independent stream:
 * std::mt19937_64 (whose output is fixed by the C++ standard) turned into
 * uniforms on (0, 1) with 53-bit resolution, then Box-Muller pairs
 * (cos branch first, sin branch cached for the next call).
 */
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next();
  /// Uniform on the open interval (0, 1).
  double uniform();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dadvi

#endif  // DADVI_RANDOM_HPP

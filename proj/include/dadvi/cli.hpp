#ifndef DADVI_CLI_HPP
#define DADVI_CLI_HPP

#include "dadvi/config.hpp"

#include <iosfwd>
#include <string>

namespace dadvi {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitNumericFailure = 1,  ///< non-convergence or refusal; artifacts may exist
  kExitConfigError = 2,     ///< bad configuration; nothing written
};

/// Fits DADVI and writes fit.json and trace.csv to the output directory.
int cmd_fit(const RunConfig& config, std::ostream& log);

/// Reads a fit artifact and writes qoi_report.json next to it (or to the
/// configured output directory). Refuses non-converged fits.
int cmd_postprocess(const RunConfig& config, const Json& fit, std::ostream& log);

/// Runs the configured experiment and writes <name>.csv and <name>.json.
int cmd_experiment(const RunConfig& config, std::ostream& log);

/**
 * Entry point of the `dadvi` tool:
 *
 *   dadvi fit         [--config FILE] [--set path=value ...]
 *   dadvi postprocess --fit FILE [--config FILE] [--set path=value ...]
 *   dadvi experiment  [--config FILE] [--set path=value ...]
 *   dadvi config      [--config FILE] [--set path=value ...]
 *
 * `config` prints the resolved canonical configuration.
 */
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dadvi

#endif  // DADVI_CLI_HPP

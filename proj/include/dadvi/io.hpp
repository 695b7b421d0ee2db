#ifndef DADVI_IO_HPP
#define DADVI_IO_HPP

#include "dadvi/experiments.hpp"
#include "dadvi/optimize.hpp"
#include "dadvi/posterior.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace dadvi {

using Json = nlohmann::ordered_json;

/// "%.17g" rendering; "nan", "inf" or "-inf" for non-finite values.
std::string format_double(double value);

/**
 * JSON text with every floating-point number written to 17 significant
 * digits (non-finite numbers become null). Key order is preserved.
 */
std::string dump_json(const Json& value, int indent = 2);

/// Throws InvalidConfiguration with the parser message on malformed text.
Json parse_json(const std::string& text);

std::string read_text_file(const std::string& path);
/// Creates parent directories as needed.
void write_text_file(const std::string& path, const std::string& content);

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& value, const std::string& what);
Eigen::MatrixXd matrix_from_json(const Json& value, const std::string& what);

Json to_json(const EvaluationCounts& counts);
Json to_json(const MeanFieldParams& eta);
Json to_json(const QoIReport& report);

/// Columns: method, step, cumulative_evaluations, objective, grad_norm.
void write_trace_csv(std::ostream& out, const std::vector<OptimizationTrace>& traces);

/// One row per distinct cumulative evaluation count, one kappa column per
/// method (empty where that method has no point), plus the Z_indep id.
void write_trace_comparison_csv(std::ostream& out, const TraceComparison& comparison);
void write_coverage_csv(std::ostream& out, const CoverageResult& result);
void write_degeneracy_csv(std::ostream& out, const DegeneracyResult& result);
void write_scaling_csv(std::ostream& out, const ScalingResult& result);

}  // namespace dadvi

#endif  // DADVI_IO_HPP

#include "dadvi/io.hpp"

#include "dadvi/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace dadvi {

namespace {

void dump_into(std::string& out, const Json& value, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* newline = indent > 0 ? "\n" : "";
  const char* colon = indent > 0 ? ": " : ":";
  switch (value.type()) {
    case Json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += newline;
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) {
          out += ",";
          out += newline;
        }
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += colon;
        dump_into(out, it.value(), indent, depth + 1);
      }
      out += newline;
      out += close_pad;
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += newline;
      bool first = true;
      for (const auto& item : value) {
        if (!first) {
          out += ",";
          out += newline;
        }
        first = false;
        out += pad;
        dump_into(out, item, indent, depth + 1);
      }
      out += newline;
      out += close_pad;
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = value.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += value.dump();
      return;
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  return fmt::format("{:.17g}", value);
}

std::string dump_json(const Json& value, int indent) {
  std::string out;
  dump_into(out, value, indent, 0);
  out += "\n";
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidConfiguration(fmt::format("malformed JSON: {}", e.what()));
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidConfiguration(fmt::format("cannot open '{}'", path));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(fmt::format("cannot write '{}'", path));
  }
  out << content;
  if (!out) {
    throw Error(fmt::format("failed writing '{}'", path));
  }
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

Eigen::VectorXd vector_from_json(const Json& value, const std::string& what) {
  if (!value.is_array()) {
    throw InvalidConfiguration(fmt::format("{} must be an array of numbers", what));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) {
      throw InvalidConfiguration(fmt::format("{}[{}] is not a number", what, i));
    }
    v[static_cast<Eigen::Index>(i)] = value[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& value, const std::string& what) {
  if (!value.is_array() || value.empty()) {
    throw InvalidConfiguration(fmt::format("{} must be a non-empty array of rows", what));
  }
  const std::size_t rows = value.size();
  const std::size_t cols = value[0].is_array() ? value[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!value[i].is_array() || value[i].size() != cols) {
      throw InvalidConfiguration(fmt::format("{} row {} has the wrong length", what, i));
    }
    m.row(static_cast<Eigen::Index>(i)) =
        vector_from_json(value[i], fmt::format("{}[{}]", what, i)).transpose();
  }
  return m;
}

Json to_json(const EvaluationCounts& counts) {
  return Json{{"value", counts.value}, {"gradient", counts.gradient}, {"hvp", counts.hvp}};
}

Json to_json(const MeanFieldParams& eta) {
  return Json{{"mu", vector_to_json(eta.mu)}, {"xi", vector_to_json(eta.xi)}};
}

Json to_json(const QoIReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json r{{"name", row.name},
           {"mean", row.mean},
           {"mf_sd", row.mf_sd},
           {"lr_sd", row.lr_sd},
           {"mc_se", row.mc_se},
           {"cg_iters", row.cg_iters},
           {"se_flag", row.se_flag}};
    if (row.error) {
      r["error"] = *row.error;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<OptimizationTrace>& traces) {
  out << "method,step,cumulative_evaluations,objective,grad_norm\n";
  for (const auto& trace : traces) {
    for (const auto& p : trace.points) {
      out << trace.method << ',' << p.step << ',' << p.cumulative_evaluations << ','
          << format_double(p.objective) << ',' << format_double(p.grad_norm) << '\n';
    }
  }
}

void write_trace_comparison_csv(std::ostream& out, const TraceComparison& comparison) {
  out << "z_indep_id,cumulative_evaluations";
  for (const auto& s : comparison.series) {
    out << ",kappa_" << s.method;
  }
  out << '\n';
  // evaluations -> per-series kappa (the last point wins on ties).
  std::map<std::uint64_t, std::vector<std::optional<double>>> table;
  for (std::size_t k = 0; k < comparison.series.size(); ++k) {
    const auto& s = comparison.series[k];
    for (std::size_t i = 0; i < s.kappa.size(); ++i) {
      auto& cells = table[s.evaluations[i]];
      cells.resize(comparison.series.size());
      cells[k] = s.kappa[i];
    }
  }
  for (auto& [evals, cells] : table) {
    cells.resize(comparison.series.size());
    out << comparison.z_indep_id << ',' << evals;
    for (const auto& cell : cells) {
      out << ',';
      if (cell) {
        out << format_double(*cell);
      }
    }
    out << '\n';
  }
}

void write_coverage_csv(std::ostream& out, const CoverageResult& result) {
  out << "num_draws,replication,quantity,draw_seed,estimate,reference,se,epsilon,phi\n";
  for (const auto& r : result.rows) {
    out << r.num_draws << ',' << r.replication << ',' << '"' << r.quantity << '"' << ','
        << r.draw_seed << ',' << format_double(r.estimate) << ','
        << format_double(r.reference) << ',' << format_double(r.se) << ','
        << format_double(r.epsilon) << ',' << format_double(r.phi) << '\n';
  }
}

void write_degeneracy_csv(std::ostream& out, const DegeneracyResult& result) {
  out << "log_m,objective,neg_entropy,neg_mean_log_density,direct_objective\n";
  for (const auto& p : result.points) {
    out << format_double(p.log_m) << ',' << format_double(p.objective) << ','
        << format_double(p.neg_entropy) << ',' << format_double(p.neg_mean_log_density)
        << ',';
    if (p.direct_objective) {
      out << format_double(*p.direct_objective);
    }
    out << '\n';
  }
}

void write_scaling_csv(std::ostream& out, const ScalingResult& result) {
  out << "num_groups,replication,converged,error\n";
  for (const auto& r : result.rows) {
    out << r.num_groups << ',' << r.replication << ',' << (r.converged ? 1 : 0) << ','
        << format_double(r.error) << '\n';
  }
}

}  // namespace dadvi

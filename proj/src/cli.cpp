#include "dadvi/cli.hpp"

#include "dadvi/errors.hpp"
#include "dadvi/quadratic_model.hpp"
#include "dadvi/random.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <ostream>
#include <sstream>

namespace dadvi {

namespace {

std::string in_output(const RunConfig& config, const std::string& file) {
  return (std::filesystem::path(config.output_dir()) / file).string();
}

Json draws_json(std::size_t num_draws, std::uint64_t seed, const DrawSet& draws) {
  return Json{{"seed", seed},
              {"num_draws", num_draws},
              {"draw_seed", draws.seed()},
              {"draws_id", draws.fingerprint()}};
}

DrawSet fit_draws(const RunConfig& config, std::size_t dim) {
  return sample_draws(derive_seed(config.seed(), Stream::kDraws), config.num_draws(), dim);
}

Json summary_stats(double mean, double sd) { return Json{{"mean", mean}, {"sd", sd}}; }

}  // namespace

int cmd_fit(const RunConfig& config, std::ostream& log) {
  const ModelPtr model = config.build_model();
  const ObjectiveBundle bundle(model, fit_draws(config, model->dim()), Family::kMeanField,
                               config.threads());
  const FitResult fit = dadvi_fit(bundle, MeanFieldParams::zeros(model->dim()),
                                  config.optimizer());

  Json out{{"eta_hat", to_json(fit.eta_hat)},
           {"objective", fit.objective},
           {"grad_norm", fit.grad_norm},
           {"converged", fit.converged},
           {"status", to_string(fit.status)},
           {"iterations", fit.iterations},
           {"eval_counts", to_json(fit.evaluations)}};
  const Json provenance = draws_json(config.num_draws(), config.seed(), bundle.draws());
  for (const auto& [key, value] : provenance.items()) {
    out[key] = value;
  }
  out["config"] = config.document();
  write_text_file(in_output(config, "fit.json"), dump_json(out));

  std::ostringstream trace;
  write_trace_csv(trace, {fit.trace});
  write_text_file(in_output(config, "trace.csv"), trace.str());

  log << fmt::format("fit {}: objective {} grad_norm {:.3g} after {} iterations\n",
                     to_string(fit.status), format_double(fit.objective), fit.grad_norm,
                     fit.iterations);
  return fit.converged ? kExitSuccess : kExitNumericFailure;
}

int cmd_postprocess(const RunConfig& config, const Json& fit, std::ostream& log) {
  if (!fit.is_object() || !fit.contains("eta_hat") || !fit.contains("converged")) {
    throw InvalidConfiguration("fit artifact lacks eta_hat or converged");
  }
  if (fit.contains("seed") && fit.contains("num_draws") &&
      (fit["seed"].get<std::uint64_t>() != config.seed() ||
       fit["num_draws"].get<std::uint64_t>() != config.num_draws())) {
    throw InvalidConfiguration("fit artifact was produced with a different seed or num_draws");
  }
  if (!fit["converged"].get<bool>()) {
    log << "refusing to post-process: the fit did not converge\n";
    return kExitNumericFailure;
  }
  const MeanFieldParams eta{vector_from_json(fit["eta_hat"]["mu"], "eta_hat.mu"),
                            vector_from_json(fit["eta_hat"]["xi"], "eta_hat.xi")};
  const ModelPtr model = config.build_model();
  if (eta.dim() != model->dim() || eta.xi.size() != eta.mu.size()) {
    throw InvalidConfiguration("fit artifact does not match the configured model");
  }
  const ObjectiveBundle bundle(model, fit_draws(config, model->dim()), Family::kMeanField,
                               config.threads());
  QoIReport report;
  try {
    report = build_qoi_report(config.build_quantities(model->dim()), eta, bundle,
                              config.posterior());
  } catch (const NotAtOptimum& e) {
    log << "refusing to post-process: " << e.what() << '\n';
    return kExitNumericFailure;
  }
  Json out{{"quantities", to_json(report)}};
  const Json provenance = draws_json(config.num_draws(), config.seed(), bundle.draws());
  for (const auto& [key, value] : provenance.items()) {
    out[key] = value;
  }
  out["config"] = config.document();
  write_text_file(in_output(config, "qoi_report.json"), dump_json(out));

  bool failed = false;
  for (const auto& row : report.rows) {
    if (row.error) {
      failed = true;
      log << fmt::format("{}: {}\n", row.name, *row.error);
    }
  }
  log << fmt::format("wrote {} quantities\n", report.rows.size());
  return failed ? kExitNumericFailure : kExitSuccess;
}

int cmd_experiment(const RunConfig& config, std::ostream& log) {
  const std::string name = config.experiment_name();
  Json summary{{"experiment", name}};
  std::ostringstream csv;
  std::string stem = name;

  if (name == "trace") {
    const TraceExperimentResult r = run_trace_experiment(config.trace_experiment());
    write_trace_comparison_csv(csv, r.comparison);
    stem = "trace_comparison";
    Json methods = Json::array();
    for (const auto& s : r.comparison.series) {
      methods.push_back(Json{{"method", s.method},
                             {"points", s.kappa.size()},
                             {"final_evaluations", s.evaluations.empty() ? 0 : s.evaluations.back()},
                             {"final_kappa", s.kappa.empty() ? 0.0 : s.kappa.back()}});
    }
    summary["z_indep_id"] = r.comparison.z_indep_id;
    summary["center"] = r.comparison.center;
    summary["scale"] = r.comparison.scale;
    summary["methods"] = methods;
    summary["dadvi_converged"] = r.dadvi.converged;
    if (r.sg) {
      summary["sg_status"] = to_string(r.sg->status);
      summary["sg_iterations"] = r.sg->iterations;
    }
  } else if (name == "coverage") {
    const CoverageResult r = run_coverage(config.coverage_experiment());
    write_coverage_csv(csv, r);
    Json per_n = Json::array();
    for (const auto& s : r.summary) {
      per_n.push_back(Json{{"num_draws", s.num_draws},
                           {"rows", s.rows},
                           {"excluded", s.excluded},
                           {"epsilon", summary_stats(s.mean_epsilon, s.sd_epsilon)}});
    }
    Json reference = Json::array();
    for (double v : r.reference) {
      reference.push_back(v);
    }
    summary["reference"] = reference;
    summary["summary"] = per_n;
  } else if (name == "degeneracy") {
    const RunConfig::Degeneracy d = config.degeneracy_experiment();
    const auto dim = static_cast<Eigen::Index>(d.dim);
    const auto model = std::make_shared<const QuadraticModel>(Eigen::MatrixXd::Identity(dim, dim),
                                                              Eigen::VectorXd::Zero(dim));
    const DrawSet draws =
        sample_draws(derive_seed(config.seed(), Stream::kDraws), d.num_draws, d.dim);
    const DegeneracyResult r = degeneracy_path(model, draws, d.log_m_values, d.epsilon);
    write_degeneracy_csv(csv, r);
    summary["span_rank"] = r.span_rank;
    summary["draws_id"] = draws.fingerprint();
    summary["final_objective"] = r.points.empty() ? 0.0 : r.points.back().objective;
  } else if (name == "scaling") {
    const ScalingResult r = global_local_scaling(config.scaling_experiment());
    write_scaling_csv(csv, r);
    Json per_p = Json::array();
    for (const auto& s : r.summary) {
      per_p.push_back(Json{{"num_groups", s.num_groups},
                           {"count", s.count},
                           {"error", summary_stats(s.mean_error, s.sd_error)},
                           {"reference_global", vector_to_json(s.reference_global)}});
    }
    summary["summary"] = per_p;
  } else {
    throw InvalidConfiguration(
        fmt::format("no runnable experiment selected (experiment.name = '{}')", name));
  }

  summary["seed"] = config.seed();
  summary["config"] = config.document();
  write_text_file(in_output(config, stem + ".csv"), csv.str());
  write_text_file(in_output(config, stem + ".json"), dump_json(summary));
  log << fmt::format("wrote {}.csv and {}.json\n", stem, stem);
  return kExitSuccess;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic ADVI: fit, post-process and run experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string fit_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON configuration file");
    sub->add_option("-s,--set", overrides, "override a key: dotted.path=value");
  };
  CLI::App* fit = app.add_subcommand("fit", "fit DADVI and write fit.json and trace.csv");
  CLI::App* post = app.add_subcommand("postprocess", "LR covariances and MC errors for a fit");
  CLI::App* experiment = app.add_subcommand("experiment", "run the configured experiment");
  CLI::App* show = app.add_subcommand("config", "print the resolved configuration");
  for (CLI::App* sub : {fit, post, experiment, show}) {
    add_common(sub);
  }
  post->add_option("-f,--fit", fit_path, "fit.json produced by `fit`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitConfigError;
  }

  try {
    Json fit_artifact;
    RunConfig config;
    if (!config_path.empty()) {
      config = RunConfig::parse(read_text_file(config_path));
    } else if (post->parsed()) {
      fit_artifact = parse_json(read_text_file(fit_path));
      if (!fit_artifact.contains("config")) {
        throw InvalidConfiguration("fit artifact embeds no configuration; pass --config");
      }
      config = RunConfig::from_json(fit_artifact["config"]);
    }
    for (const auto& o : overrides) {
      config.apply_override(o);
    }
    if (show->parsed()) {
      out << config.serialize();
      return kExitSuccess;
    }
    if (fit->parsed()) {
      return cmd_fit(config, out);
    }
    if (post->parsed()) {
      if (fit_artifact.is_null()) {
        fit_artifact = parse_json(read_text_file(fit_path));
      }
      return cmd_postprocess(config, fit_artifact, out);
    }
    return cmd_experiment(config, out);
  } catch (const InvalidConfiguration& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumericFailure;
  }
}

}  // namespace dadvi

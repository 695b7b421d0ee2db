#include "dadvi/config.hpp"

#include "dadvi/bradley_terry_model.hpp"
#include "dadvi/errors.hpp"
#include "dadvi/hierarchical_model.hpp"
#include "dadvi/quadratic_model.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dadvi {

namespace {

Json model_defaults(const std::string& name) {
  if (name == "quadratic") {
    return Json{{"name", name},
                {"a", Json::array({Json::array({1.0})})},
                {"b", Json::array({0.0})}};
  }
  if (name == "quadratic-1d") {
    return Json{{"name", name}};
  }
  if (name == "hierarchical") {
    return Json{{"name", name}, {"num_groups", 100u}, {"data_seed", 0u}};
  }
  if (name == "bradley-terry") {
    return Json{{"name", name}, {"num_players", 5u}, {"num_matches", 10u}, {"data_seed", 0u}};
  }
  throw InvalidConfiguration(fmt::format("unknown model '{}'", name));
}

Json sg_defaults() {
  const SGConfig sg;
  return Json{{"step_size", sg.step_size},
              {"decay", sg.decay},
              {"draws_per_step", sg.draws_per_step},
              {"window", sg.window},
              {"threshold", sg.threshold},
              {"relative_floor", sg.relative_floor},
              {"max_iterations", sg.max_iterations},
              {"averaging", sg.averaging},
              {"trace_every", sg.trace_every}};
}

Json experiment_defaults(const std::string& name) {
  if (name == "none") {
    return Json{{"name", name}};
  }
  if (name == "trace") {
    return Json{{"name", name},
                {"methods", Json::array({"dadvi", "sg"})},
                {"independent_draws", 1000u},
                {"sg", sg_defaults()}};
  }
  if (name == "coverage") {
    return Json{{"name", name},
                {"n_values", Json::array({8u, 16u, 32u, 64u})},
                {"replications", 100u},
                {"reference_draws", 64u}};
  }
  if (name == "degeneracy") {
    return Json{{"name", name},
                {"dim", 10u},
                {"num_draws", 3u},
                {"epsilon", 1.0},
                {"log_m_values",
                 Json::array({0.0, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6})}};
  }
  if (name == "scaling") {
    return Json{{"name", name},
                {"p_values", Json::array({10u, 100u, 1000u})},
                {"replications", 20u},
                {"reference_draws", 4096u},
                {"data_seed", 0u}};
  }
  throw InvalidConfiguration(fmt::format("unknown experiment '{}'", name));
}

Json quantity_defaults(const std::string& kind) {
  if (kind == "coordinate" || kind == "coordinate_square") {
    return Json{{"kind", kind}, {"index", 0u}};
  }
  if (kind == "linear") {
    return Json{{"kind", kind}, {"weights", Json::array()}, {"name", ""}};
  }
  if (kind == "constant") {
    return Json{{"kind", kind}, {"value", 0.0}};
  }
  if (kind == "win_probability") {
    return Json{{"kind", kind}, {"i", 0u}, {"j", 1u}};
  }
  throw InvalidConfiguration(fmt::format("unknown quantity kind '{}'", kind));
}

Json base_defaults() {
  const OptimizerConfig opt;
  const PosteriorConfig post;
  return Json{{"model", model_defaults("quadratic")},
              {"num_draws", 30u},
              {"seed", 0u},
              {"threads", 1u},
              {"optimizer",
               {{"gtol", opt.gtol},
                {"max_iterations", opt.max_iterations},
                {"initial_radius", opt.initial_radius},
                {"max_radius", opt.max_radius},
                {"cg_tolerance", opt.cg_tolerance}}},
              {"quantities", Json::array()},
              {"postprocess",
               {{"cg_tolerance", post.cg.tolerance},
                {"cg_max_iterations", post.cg.max_iterations},
                {"precondition", post.cg.precondition},
                {"se_flag_fraction", post.se_flag_fraction},
                {"optimum_gtol", post.optimum_gtol},
                {"curvature_probes", post.curvature_probes}}},
              {"experiment", experiment_defaults("none")},
              {"output_dir", "out"}};
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string name_of(const Json& block, const char* key, const std::string& fallback,
                    const std::string& path) {
  if (!block.is_object() || !block.contains(key)) {
    return fallback;
  }
  if (!block[key].is_string()) {
    throw InvalidConfiguration(fmt::format("{}.{} must be a string", path, key));
  }
  return block[key].get<std::string>();
}

Json merge(const Json& defaults, const Json& user, const std::string& path);

Json merge_leaf(const Json& def, const Json& user, const std::string& path) {
  switch (def.type()) {
    case Json::value_t::number_unsigned:
    case Json::value_t::number_integer:
      if (user.is_number_unsigned()) {
        return user;
      }
      if (user.is_number_integer() && user.get<std::int64_t>() >= 0) {
        return Json(static_cast<std::uint64_t>(user.get<std::int64_t>()));
      }
      if (user.is_number_integer()) {
        throw InvalidConfiguration(fmt::format("{} must be a non-negative integer", path));
      }
      throw InvalidConfiguration(fmt::format("{} must be an integer", path));
    case Json::value_t::number_float:
      if (!user.is_number()) {
        throw InvalidConfiguration(fmt::format("{} must be a number", path));
      }
      return Json(user.get<double>());
    case Json::value_t::boolean:
      if (!user.is_boolean()) {
        throw InvalidConfiguration(fmt::format("{} must be true or false", path));
      }
      return user;
    case Json::value_t::string:
      if (!user.is_string()) {
        throw InvalidConfiguration(fmt::format("{} must be a string", path));
      }
      return user;
    case Json::value_t::array:
      if (!user.is_array()) {
        throw InvalidConfiguration(fmt::format("{} must be an array", path));
      }
      if (!def.empty()) {
        // Elements follow the type of the default's elements.
        Json out = Json::array();
        for (std::size_t i = 0; i < user.size(); ++i) {
          out.push_back(merge_leaf(def[0], user[i], fmt::format("{}[{}]", path, i)));
        }
        return out;
      }
      return user;
    case Json::value_t::object:
      return merge(def, user, path);
    default:
      return user;
  }
}

Json merge(const Json& defaults, const Json& user, const std::string& path) {
  if (!user.is_object()) {
    throw InvalidConfiguration(
        fmt::format("{} must be an object", path.empty() ? "configuration" : path));
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!defaults.contains(it.key())) {
      throw InvalidConfiguration(fmt::format("unknown key '{}'", join(path, it.key())));
    }
  }
  Json out = Json::object();
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    const std::string key_path = join(path, it.key());
    out[it.key()] = user.contains(it.key()) ? merge_leaf(it.value(), user[it.key()], key_path)
                                            : it.value();
  }
  return out;
}

Json resolve(const Json& user) {
  if (!user.is_object()) {
    throw InvalidConfiguration("configuration must be a JSON object");
  }
  Json defaults = base_defaults();
  const Json empty = Json::object();
  const Json& user_model = user.contains("model") ? user["model"] : empty;
  const Json& user_experiment = user.contains("experiment") ? user["experiment"] : empty;
  defaults["model"] = model_defaults(name_of(user_model, "name", "quadratic", "model"));
  defaults["experiment"] =
      experiment_defaults(name_of(user_experiment, "name", "none", "experiment"));
  // Quantities are merged entry by entry, each against its kind's defaults.
  Json without_quantities = user;
  without_quantities.erase("quantities");
  Json out = merge(defaults, without_quantities, "");
  if (user.contains("quantities")) {
    const Json& list = user["quantities"];
    if (!list.is_array()) {
      throw InvalidConfiguration("quantities must be an array");
    }
    Json merged = Json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = fmt::format("quantities[{}]", i);
      if (!list[i].is_object() || !list[i].contains("kind")) {
        throw InvalidConfiguration(fmt::format("{} needs a 'kind'", path));
      }
      merged.push_back(merge(quantity_defaults(name_of(list[i], "kind", "", path)),
                             list[i], path));
    }
    out["quantities"] = merged;
  }
  return out;
}

std::uint64_t get_u64(const Json& j) { return j.get<std::uint64_t>(); }
std::size_t get_size(const Json& j) { return static_cast<std::size_t>(j.get<std::uint64_t>()); }

std::vector<std::size_t> size_list(const Json& j) {
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    out.push_back(get_size(v));
  }
  return out;
}

}  // namespace

std::vector<std::string> model_names() {
  return {"quadratic", "quadratic-1d", "hierarchical", "bradley-terry"};
}

std::vector<std::string> experiment_names() {
  return {"none", "trace", "coverage", "degeneracy", "scaling"};
}

RunConfig::RunConfig() : doc_(base_defaults()) {}

RunConfig RunConfig::parse(const std::string& text) { return from_json(parse_json(text)); }

RunConfig RunConfig::from_json(const Json& document) {
  RunConfig config(resolve(document));
  if (config.num_draws() < 1) {
    throw InvalidConfiguration("invalid draw count: num_draws must be >= 1");
  }
  if (config.threads() < 1) {
    throw InvalidConfiguration("threads must be >= 1");
  }
  config.optimizer().validate();
  const PosteriorConfig post = config.posterior();
  if (!(post.cg.tolerance > 0.0) || !(post.se_flag_fraction >= 0.0) ||
      !(post.optimum_gtol > 0.0)) {
    throw InvalidConfiguration("postprocess tolerances must be positive");
  }
  const ModelPtr model = config.build_model();
  config.build_quantities(model->dim());
  const std::string experiment = config.experiment_name();
  if (experiment == "trace") {
    const TraceExperimentConfig t = config.trace_experiment();
    t.sg.validate();
    for (const auto& m : t.methods) {
      if (m != "dadvi" && m != "sg") {
        throw InvalidConfiguration(fmt::format("unknown trace method '{}'", m));
      }
    }
    if (t.independent_draws < 2) {
      throw InvalidConfiguration("trace experiment needs at least 2 independent draws");
    }
  } else if (experiment == "coverage") {
    const CoverageExperiment c = config.coverage_experiment();
    if (c.replications == 0 || c.n_values.empty() || c.reference_draws == 0 ||
        std::find(c.n_values.begin(), c.n_values.end(), 0u) != c.n_values.end()) {
      throw InvalidConfiguration("coverage experiment needs replications and positive N values");
    }
  } else if (experiment == "degeneracy") {
    const Degeneracy d = config.degeneracy_experiment();
    if (d.num_draws == 0 || d.num_draws >= d.dim) {
      throw InvalidConfiguration("degeneracy experiment needs 1 <= num_draws < dim");
    }
    if (!std::is_sorted(d.log_m_values.begin(), d.log_m_values.end())) {
      throw InvalidConfiguration("degeneracy log_m_values must be increasing");
    }
  } else if (experiment == "scaling") {
    const ScalingExperiment s = config.scaling_experiment();
    if (s.p_values.empty() || s.replications == 0 || s.reference_draws == 0 ||
        std::find(s.p_values.begin(), s.p_values.end(), 0u) != s.p_values.end()) {
      throw InvalidConfiguration("scaling experiment needs positive P values and replications");
    }
  }
  return config;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidConfiguration(
        fmt::format("override '{}' is not of the form path=value", assignment));
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }

  Json doc = doc_;
  if (path == "model.name" || path == "experiment.name") {
    // A new name selects a new key set; start that block from its defaults.
    doc[path.substr(0, path.find('.'))] = Json{{"name", value}};
  } else {
    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (key.empty()) {
        throw InvalidConfiguration(fmt::format("override path '{}' is malformed", path));
      }
      if (node->is_array()) {
        std::size_t index = 0;
        try {
          index = std::stoul(key);
        } catch (const std::exception&) {
          throw InvalidConfiguration(fmt::format("'{}' in '{}' is not an array index", key, path));
        }
        if (index >= node->size()) {
          throw InvalidConfiguration(fmt::format("index {} out of range in '{}'", index, path));
        }
        node = &(*node)[index];
      } else if (node->is_object()) {
        if (!node->contains(key)) {
          throw InvalidConfiguration(fmt::format("unknown key '{}'", path));
        }
        node = &(*node)[key];
      } else {
        throw InvalidConfiguration(fmt::format("'{}' does not name a nested key", path));
      }
      if (dot == std::string::npos) {
        break;
      }
      start = dot + 1;
    }
    *node = value;
  }
  *this = from_json(doc);
}

std::string RunConfig::serialize() const { return dump_json(doc_); }

std::string RunConfig::model_name() const { return doc_["model"]["name"].get<std::string>(); }
std::size_t RunConfig::num_draws() const { return get_size(doc_["num_draws"]); }
std::uint64_t RunConfig::seed() const { return get_u64(doc_["seed"]); }
std::size_t RunConfig::threads() const { return get_size(doc_["threads"]); }
std::string RunConfig::output_dir() const { return doc_["output_dir"].get<std::string>(); }
std::string RunConfig::experiment_name() const {
  return doc_["experiment"]["name"].get<std::string>();
}

ModelPtr RunConfig::build_model() const {
  const Json& m = doc_["model"];
  const std::string name = model_name();
  if (name == "quadratic") {
    Eigen::MatrixXd a = matrix_from_json(m["a"], "model.a");
    if (a.rows() == a.cols() && Eigen::LLT<Eigen::MatrixXd>(a).info() != Eigen::Success) {
      throw InvalidConfiguration("model.a must be symmetric positive definite");
    }
    return std::make_shared<QuadraticModel>(std::move(a), vector_from_json(m["b"], "model.b"));
  }
  if (name == "quadratic-1d") {
    return std::make_shared<QuadraticModel>(Eigen::MatrixXd::Ones(1, 1),
                                            Eigen::VectorXd::Zero(1));
  }
  if (name == "hierarchical") {
    return instantiate_hierarchical(get_size(m["num_groups"]), get_u64(m["data_seed"]));
  }
  if (name == "bradley-terry") {
    if (get_size(m["num_players"]) < 2) {
      throw InvalidConfiguration("bradley-terry needs at least 2 players");
    }
    return make_bradley_terry(get_size(m["num_players"]), get_size(m["num_matches"]),
                              get_u64(m["data_seed"]));
  }
  throw InvalidConfiguration(fmt::format("unknown model '{}'", name));
}

std::vector<QuantityOfInterest> RunConfig::build_quantities(std::size_t dim) const {
  std::vector<QuantityOfInterest> out;
  const Json& list = doc_["quantities"];
  if (list.empty()) {
    for (std::size_t d = 0; d < dim; ++d) {
      out.push_back(coordinate_qoi(d, dim));
    }
    return out;
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& q = list[i];
    const std::string kind = q["kind"].get<std::string>();
    const std::string path = fmt::format("quantities[{}]", i);
    auto index = [&](const char* key) {
      const std::size_t k = get_size(q[key]);
      if (k >= dim) {
        throw InvalidConfiguration(
            fmt::format("{}.{} = {} is out of range for dimension {}", path, key, k, dim));
      }
      return k;
    };
    if (kind == "coordinate") {
      out.push_back(coordinate_qoi(index("index"), dim));
    } else if (kind == "coordinate_square") {
      out.push_back(coordinate_square_qoi(index("index"), dim));
    } else if (kind == "linear") {
      const Eigen::VectorXd w = vector_from_json(q["weights"], path + ".weights");
      if (static_cast<std::size_t>(w.size()) != dim) {
        throw InvalidConfiguration(
            fmt::format("{}.weights has length {}, model dimension {}", path, w.size(), dim));
      }
      out.push_back(linear_qoi(w, q["name"].get<std::string>()));
    } else if (kind == "constant") {
      out.push_back(constant_qoi(q["value"].get<double>(), dim));
    } else if (kind == "win_probability") {
      out.push_back(win_probability_qoi(index("i"), index("j"), dim));
    }
  }
  return out;
}

OptimizerConfig RunConfig::optimizer() const {
  const Json& o = doc_["optimizer"];
  OptimizerConfig c;
  c.gtol = o["gtol"].get<double>();
  c.max_iterations = get_size(o["max_iterations"]);
  c.initial_radius = o["initial_radius"].get<double>();
  c.max_radius = o["max_radius"].get<double>();
  c.cg_tolerance = o["cg_tolerance"].get<double>();
  return c;
}

PosteriorConfig RunConfig::posterior() const {
  const Json& p = doc_["postprocess"];
  PosteriorConfig c;
  c.cg.tolerance = p["cg_tolerance"].get<double>();
  c.cg.max_iterations = get_size(p["cg_max_iterations"]);
  c.cg.precondition = p["precondition"].get<bool>();
  c.se_flag_fraction = p["se_flag_fraction"].get<double>();
  c.optimum_gtol = p["optimum_gtol"].get<double>();
  c.curvature_probes = get_size(p["curvature_probes"]);
  c.probe_seed = seed();
  return c;
}

TraceExperimentConfig RunConfig::trace_experiment() const {
  const Json& e = doc_["experiment"];
  TraceExperimentConfig c;
  c.model = build_model();
  c.num_draws = num_draws();
  c.seed = seed();
  c.independent_draws = get_size(e["independent_draws"]);
  c.methods = e["methods"].get<std::vector<std::string>>();
  c.optimizer = optimizer();
  c.threads = threads();
  const Json& sg = e["sg"];
  c.sg.step_size = sg["step_size"].get<double>();
  c.sg.decay = sg["decay"].get<double>();
  c.sg.draws_per_step = get_size(sg["draws_per_step"]);
  c.sg.window = get_size(sg["window"]);
  c.sg.threshold = sg["threshold"].get<double>();
  c.sg.relative_floor = sg["relative_floor"].get<double>();
  c.sg.max_iterations = get_size(sg["max_iterations"]);
  c.sg.averaging = get_size(sg["averaging"]);
  c.sg.trace_every = get_size(sg["trace_every"]);
  return c;
}

CoverageExperiment RunConfig::coverage_experiment() const {
  const Json& e = doc_["experiment"];
  CoverageExperiment c;
  c.model = build_model();
  c.quantities = build_quantities(c.model->dim());
  c.n_values = size_list(e["n_values"]);
  c.replications = get_size(e["replications"]);
  c.reference_draws = get_size(e["reference_draws"]);
  c.seed = seed();
  c.optimizer = optimizer();
  c.posterior = posterior();
  c.threads = threads();
  return c;
}

ScalingExperiment RunConfig::scaling_experiment() const {
  const Json& e = doc_["experiment"];
  ScalingExperiment c;
  c.p_values = size_list(e["p_values"]);
  c.num_draws = num_draws();
  c.replications = get_size(e["replications"]);
  c.reference_draws = get_size(e["reference_draws"]);
  c.seed = seed();
  c.data_seed = get_u64(e["data_seed"]);
  c.optimizer = optimizer();
  c.threads = threads();
  return c;
}

RunConfig::Degeneracy RunConfig::degeneracy_experiment() const {
  const Json& e = doc_["experiment"];
  return {get_size(e["dim"]), get_size(e["num_draws"]), e["epsilon"].get<double>(),
          e["log_m_values"].get<std::vector<double>>()};
}

}  // namespace dadvi

#include "nlgd/config.hpp"

#include <fstream>
#include <sstream>

namespace nlgd {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "'" + path + "' must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required field '" + join(path, key) + "'");
  return *it;
}

double as_number(const Json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "field '" + field + "' must be a number");
  return v.get<double>();
}

std::int64_t as_integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError(field, "field '" + field + "' must be an integer");
  return v.get<std::int64_t>();
}

bool as_bool(const Json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field, "field '" + field + "' must be true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "field '" + field + "' must be a string");
  return v.get<std::string>();
}

Vector as_vector(const Json& v, const std::string& field) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  if (!v.is_array()) throw ConfigError(field, "field '" + field + "' must be an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = as_number(v[i], field);
  return out;
}

Matrix as_matrix(const Json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "field '" + field + "' must be a nested array");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array()) throw ConfigError(field, "field '" + field + "' must be a nested array");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field, "field '" + field + "' has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = as_number(row[static_cast<std::size_t>(c)], field);
  }
  return out;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

// Wraps library validation errors so the CLI can name the section.
template <typename F>
auto in_section(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, "invalid '" + field + "': " + e.what());
  }
}

ObjectivePtr agent_from_json(const std::string& family, const Json& a, int n, const std::string& field) {
  if (!a.is_object()) throw ConfigError(field, "agent entry '" + field + "' must be an object");
  return in_section(field, [&]() -> ObjectivePtr {
    if (family == "quadratic") {
      const Json& curv = require(a, "a", field);
      const Vector c = a.contains("c") ? as_vector(a["c"], join(field, "c")) : Vector::Zero(n);
      if (curv.is_number()) return quadratic_objective(curv.get<double>(), c);
      return quadratic_objective(as_matrix(curv, join(field, "a")), c);
    }
    if (family == "smart_grid") {
      return smart_grid_objective(as_number(require(a, "a", field), join(field, "a")),
                                  as_number(require(a, "b", field), join(field, "b")), n);
    }
    if (family == "portfolio") {
      return portfolio_objective(as_vector(require(a, "mu", field), join(field, "mu")),
                                 as_matrix(require(a, "sigma", field), join(field, "sigma")),
                                 as_number(require(a, "lambda", field), join(field, "lambda")),
                                 as_number(require(a, "gamma", field), join(field, "gamma")));
    }
    throw ConfigError("problem.family", "unknown family '" + family + "'");
  });
}

Json agent_to_json(const LocalObjective& obj) {
  Json out;
  if (const auto* q = dynamic_cast<const QuadraticObjective*>(&obj)) {
    const Matrix& a = q->curvature();
    const bool isotropic = (a - a(0, 0) * Matrix::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff() == 0.0;
    if (isotropic) {
      out["a"] = a(0, 0);
    } else {
      out["a"] = matrix_json(a);
    }
    out["c"] = vector_json(q->linear());
  } else if (const auto* s = dynamic_cast<const SmartGridObjective*>(&obj)) {
    out["a"] = s->a();
    out["b"] = s->b();
  } else if (const auto* p = dynamic_cast<const PortfolioObjective*>(&obj)) {
    out["mu"] = vector_json(p->mu());
    out["sigma"] = matrix_json(p->sigma());
    out["lambda"] = p->risk_aversion();
    out["gamma"] = p->regularization();
  } else {
    throw InvalidArgument("objective family '" + obj.family() + "' cannot be written to a config file");
  }
  return out;
}

Graph graph_from_json(const Json& net, int m, std::uint64_t seed, const std::filesystem::path& base_dir) {
  const std::string type = as_string(require(net, "type", "network"), "network.type");
  return in_section("network", [&]() -> Graph {
    if (type == "watts_strogatz") {
      const int k = net.contains("k") ? static_cast<int>(as_integer(net["k"], "network.k")) : 4;
      const double p = net.contains("p") ? as_number(net["p"], "network.p") : 0.2;
      return watts_strogatz(m, k, p, derive_seed(seed, Stream::kGraph));
    }
    if (type == "edges") {
      const Json& edges = require(net, "edges", "network");
      if (!edges.is_array()) throw ConfigError("network.edges", "field 'network.edges' must be an array of pairs");
      Graph g(m);
      for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("network.edges", "each edge must be a pair [i, j]");
        g.add_edge(static_cast<int>(as_integer(e[0], "network.edges")),
                   static_cast<int>(as_integer(e[1], "network.edges")));
      }
      return g;
    }
    if (type == "edge_list") {
      std::filesystem::path path = as_string(require(net, "path", "network"), "network.path");
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      Graph g = read_edge_list(path);
      if (g.node_count() != m) {
        throw ConfigError("network.path", "edge list has " + std::to_string(g.node_count()) + " nodes, problem has " +
                                              std::to_string(m) + " agents");
      }
      return g;
    }
    if (type == "path") return path_graph(m);
    if (type == "ring") return ring_graph(m);
    if (type == "complete") return complete_graph(m);
    throw ConfigError("network.type", "unknown network type '" + type + "'");
  });
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message, std::optional<std::size_t> line)
    : InvalidArgument(message), field_(std::move(field)), line_(line) {}

Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ConfigError("", source + ":" + std::to_string(line) + ": syntax error: " + e.what(), line);
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path.string());
}

RunConfig run_config_from_json(const Json& s, const std::string& where) {
  if (!s.is_object()) throw ConfigError(where, "'" + where + "' must be an object");
  RunConfig c;
  c.algorithm = in_section(join(where, "algorithm"), [&] {
    return parse_algorithm(as_string(require(s, "algorithm", where), join(where, "algorithm")));
  });
  c.step_size = as_number(require(s, "step_size", where), join(where, "step_size"));
  c.max_iters = as_integer(require(s, "max_iters", where), join(where, "max_iters"));
  if (s.contains("noise_std") && s.contains("noise_variance")) {
    throw ConfigError(join(where, "noise_std"), "give either noise_std or noise_variance, not both");
  }
  if (s.contains("noise_std")) {
    const double sd = as_number(s["noise_std"], join(where, "noise_std"));
    c.noise_variance = sd * sd;
  } else if (s.contains("noise_variance")) {
    c.noise_variance = as_number(s["noise_variance"], join(where, "noise_variance"));
  }
  if (s.contains("record_every")) c.record_every = as_integer(s["record_every"], join(where, "record_every"));
  if (s.contains("track_auxiliary")) c.track_auxiliary = as_bool(s["track_auxiliary"], join(where, "track_auxiliary"));
  if (s.contains("record_curvature")) {
    c.record_curvature = as_bool(s["record_curvature"], join(where, "record_curvature"));
  }
  if (s.contains("monitor_descent")) c.monitor_descent = as_bool(s["monitor_descent"], join(where, "monitor_descent"));
  if (s.contains("escape_margin")) c.escape_margin = as_number(s["escape_margin"], join(where, "escape_margin"));
  if (s.contains("early_exit")) {
    const std::string f = join(where, "early_exit");
    c.early_exit = StopCriterion{as_number(require(s["early_exit"], "epsilon", f), join(f, "epsilon")),
                                 as_number(require(s["early_exit"], "gamma", f), join(f, "gamma"))};
  }
  in_section(where, [&] {
    c.validate();
    return 0;
  });
  return c;
}

Json run_config_to_json(const RunConfig& c) {
  Json out;
  out["algorithm"] = std::string(to_string(c.algorithm));
  out["step_size"] = c.step_size;
  out["noise_variance"] = c.noise_variance;
  out["max_iters"] = c.max_iters;
  out["record_every"] = c.record_every;
  out["track_auxiliary"] = c.track_auxiliary;
  out["record_curvature"] = c.record_curvature;
  out["monitor_descent"] = c.monitor_descent;
  if (c.escape_margin) out["escape_margin"] = *c.escape_margin;
  if (c.early_exit) out["early_exit"] = Json{{"epsilon", c.early_exit->epsilon}, {"gamma", c.early_exit->gamma}};
  return out;
}

Scenario scenario_from_json(const Json& j, std::optional<std::uint64_t> seed_override,
                            const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("", "config root must be an object");
  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("seed", "field 'seed' must be a non-negative integer");
    }
    seed = j["seed"].get<std::uint64_t>();
  }
  if (seed_override) seed = *seed_override;

  const Json& prob = require(j, "problem", "");
  const std::string family = as_string(require(prob, "family", "problem"), "problem.family");
  if (family != "quadratic" && family != "smart_grid" && family != "portfolio") {
    throw ConfigError("problem.family", "unknown family '" + family + "' (expected quadratic, smart_grid or portfolio)");
  }
  const Json* agents = prob.contains("agents") ? &prob["agents"] : nullptr;
  if (agents && !agents->is_array()) throw ConfigError("problem.agents", "field 'problem.agents' must be an array");
  int m = 0;
  if (prob.contains("m")) {
    m = static_cast<int>(as_integer(prob["m"], "problem.m"));
  } else if (agents) {
    m = static_cast<int>(agents->size());
  } else {
    throw ConfigError("problem.m", "missing required field 'problem.m'");
  }
  if (m < 2) throw ConfigError("problem.m", "field 'problem.m' must be at least 2");
  if (agents && static_cast<int>(agents->size()) != m) {
    throw ConfigError("problem.agents", "problem.agents lists " + std::to_string(agents->size()) +
                                            " agents but problem.m is " + std::to_string(m));
  }
  Vector demand;
  int n = 1;
  if (prob.contains("demand")) {
    demand = as_vector(prob["demand"], "problem.demand");
    n = static_cast<int>(demand.size());
    if (prob.contains("n") && as_integer(prob["n"], "problem.n") != n) {
      throw ConfigError("problem.demand", "problem.demand length differs from problem.n");
    }
  } else {
    if (prob.contains("n")) n = static_cast<int>(as_integer(prob["n"], "problem.n"));
    if (n < 1) throw ConfigError("problem.n", "field 'problem.n' must be positive");
    demand = Vector::Zero(n);
  }

  std::vector<ObjectivePtr> objectives;
  if (agents) {
    for (int i = 0; i < m; ++i) {
      objectives.push_back(agent_from_json(family, (*agents)[static_cast<std::size_t>(i)], n,
                                           "problem.agents[" + std::to_string(i) + "]"));
    }
  } else {
    Rng rng(derive_seed(seed, Stream::kParameters));
    if (family == "quadratic") objectives = sample_quadratic_agents(m, n, rng);
    if (family == "smart_grid") objectives = sample_smart_grid_agents(m, n, rng);
    if (family == "portfolio") objectives = sample_portfolio_agents(m, n, rng);
  }
  ProblemInstance problem = in_section("problem", [&] { return ProblemInstance(objectives, demand); });

  Graph graph = graph_from_json(require(j, "network", ""), m, seed, base_dir);
  NetworkOperator net = NetworkOperator::from_graph(graph, n);

  Vector base(problem.stacked_size());
  for (int i = 0; i < m; ++i) base.segment(static_cast<Eigen::Index>(i) * n, n) = demand / static_cast<double>(m);
  double perturbation = 0.0;
  if (j.contains("initial")) {
    const Json& init = j["initial"];
    if (!init.is_object()) throw ConfigError("initial", "field 'initial' must be an object");
    if (init.contains("point")) {
      base = as_vector(init["point"], "initial.point");
      if (base.size() != problem.stacked_size()) {
        throw ConfigError("initial.point", "initial.point has length " + std::to_string(base.size()) +
                                               ", expected m*n = " + std::to_string(problem.stacked_size()));
      }
    }
    if (init.contains("perturbation_norm")) {
      perturbation = as_number(init["perturbation_norm"], "initial.perturbation_norm");
      if (!(perturbation >= 0.0)) throw ConfigError("initial.perturbation_norm", "perturbation norm must be >= 0");
    }
  }
  Vector reference = base;
  if (j.contains("reference")) {
    reference = as_vector(j["reference"], "reference");
    if (reference.size() != problem.stacked_size()) throw ConfigError("reference", "reference has the wrong length");
  }

  std::vector<RunVariant> variants;
  if (j.contains("variants")) {
    const Json& vs = j["variants"];
    if (!vs.is_array()) throw ConfigError("variants", "field 'variants' must be an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string where = "variants[" + std::to_string(i) + "]";
      RunConfig c = run_config_from_json(vs[i], where);
      const std::string label =
          vs[i].contains("label") ? as_string(vs[i]["label"], where + ".label") : std::string(to_string(c.algorithm));
      variants.push_back({label, c});
    }
  } else if (j.contains("run")) {
    RunConfig c = run_config_from_json(j["run"], "run");
    variants.push_back({std::string(to_string(c.algorithm)), c});
  }

  const std::string name = j.contains("name") ? as_string(j["name"], "name") : family;
  return Scenario{name,  seed,       family,    std::move(problem), std::move(graph), std::move(net),
                  base, perturbation, reference, std::move(variants)};
}

Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return scenario_from_json(read_json_file(path), seed_override, path.parent_path());
}

Json scenario_to_json(const Scenario& s) {
  Json out;
  out["name"] = s.name;
  out["seed"] = s.seed;
  Json prob;
  prob["family"] = s.family;
  prob["m"] = s.problem.agent_count();
  prob["n"] = s.problem.agent_dim();
  prob["demand"] = vector_json(s.problem.demand());
  Json agents = Json::array();
  for (const auto& obj : s.problem.objectives()) agents.push_back(agent_to_json(*obj));
  prob["agents"] = agents;
  out["problem"] = prob;
  Json edges = Json::array();
  for (const auto& [a, b] : s.graph.edges()) edges.push_back(Json::array({a, b}));
  out["network"] = Json{{"type", "edges"}, {"edges", edges}};
  out["initial"] = Json{{"point", vector_json(s.base_point)}, {"perturbation_norm", s.perturbation_norm}};
  out["reference"] = vector_json(s.reference);
  Json variants = Json::array();
  for (const auto& v : s.variants) {
    Json entry;
    entry["label"] = v.label;
    const Json config = run_config_to_json(v.config);
    for (const auto& [key, value] : config.items()) entry[key] = value;
    variants.push_back(entry);
  }
  out["variants"] = variants;
  return out;
}

Vector read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state file " + path.string());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    for (char& c : token) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(token);
    double v = 0.0;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw IoError(path.string() + ": '" + token + "' is not a number");
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace nlgd

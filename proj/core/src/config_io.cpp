#include "mpgame/config_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mpgame/analysis.hpp"

namespace mpgame {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config: " + field + ": " + why);
}

Vector to_vector(const json& j, const std::string& field, Eigen::Index n = -1) {
  if (j.is_number()) {
    if (n < 0) bad(field, "scalar given where the length is unknown");
    return Vector::Constant(n, j.get<double>());
  }
  if (!j.is_array()) bad(field, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad(field, "expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  if (n >= 0 && v.size() != n) bad(field, "expected length " + std::to_string(n));
  return v;
}

json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix to_matrix(const json& j, const std::string& field, Eigen::Index n) {
  if (j.is_object()) {
    if (!j.contains("scaled_identity")) bad(field, "unknown matrix shorthand");
    if (n < 1) bad(field, "scaled_identity needs a known dimension");
    return j.at("scaled_identity").get<double>() * Matrix::Identity(n, n);
  }
  if (!j.is_array() || j.empty()) bad(field, "expected nested arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = to_vector(j[static_cast<std::size_t>(r)], field, rows);
    m.row(r) = row.transpose();
  }
  return m;
}

json from_matrix(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(from_vector(m.row(r).transpose()));
  return out;
}

StepSchedule schedule_from(const json& j) {
  const std::string kind = j.value("kind", "harmonic");
  try {
    if (kind == "harmonic") {
      return StepSchedule::harmonic(j.value("offset", 1.0), j.value("scale", 1.0));
    }
    if (kind == "power") {
      return StepSchedule::power(j.at("exponent").get<double>(), j.value("scale", 1.0),
                                 j.value("offset", 1.0));
    }
    if (kind == "custom") {
      return StepSchedule::custom(j.at("values").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    bad("schedule", e.what());
  }
  bad("schedule", "unknown kind '" + kind + "'");
}

json schedule_to(const StepSchedule& schedule) {
  json out;
  if (const auto* h = std::get_if<StepSchedule::Harmonic>(&schedule.kind())) {
    out = {{"kind", "harmonic"}, {"offset", h->offset}, {"scale", h->scale}};
  } else if (const auto* p = std::get_if<StepSchedule::Power>(&schedule.kind())) {
    out = {{"kind", "power"},
           {"exponent", p->exponent},
           {"scale", p->scale},
           {"offset", p->offset}};
  } else {
    const auto& c = std::get<StepSchedule::Custom>(schedule.kind());
    out = {{"kind", "custom"}, {"values", c.values}};
  }
  return out;
}

RunSettings run_from(const json& j, RunSettings s) {
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.stop_consensus_tol = j.value("stop_consensus_tol", s.stop_consensus_tol);
  s.stop_fixed_point_tol = j.value("stop_fixed_point_tol", s.stop_fixed_point_tol);
  s.record_every = j.value("record_every", s.record_every);
  s.seed = j.value("seed", s.seed);
  s.parallel = j.value("parallel", s.parallel);
  s.threads = j.value("threads", s.threads);
  s.init_perturbation = j.value("init_perturbation", s.init_perturbation);
  s.validate();
  return s;
}

json run_to(const RunSettings& s) {
  return {{"max_iterations", s.max_iterations},
          {"stop_consensus_tol", s.stop_consensus_tol},
          {"stop_fixed_point_tol", s.stop_fixed_point_tol},
          {"record_every", s.record_every},
          {"seed", s.seed},
          {"parallel", s.parallel},
          {"threads", s.threads},
          {"init_perturbation", s.init_perturbation}};
}

GraphSpec graph_from(const json& j) {
  GraphSpec g;
  g.kind = j.value("kind", g.kind);
  g.period = j.value("period", g.period);
  g.edge_probability = j.value("edge_probability", g.edge_probability);
  g.seed = j.value("seed", g.seed);
  g.file = j.value("file", g.file);
  g.mu = j.value("mu", g.mu);
  g.allow_invalid = j.value("allow_invalid", g.allow_invalid);
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) bad("graph.edges", "expected [a, b] pairs");
      g.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
  }
  return g;
}

json graph_to(const GraphSpec& g) {
  json edges = json::array();
  for (auto [a, b] : g.edges) edges.push_back({a, b});
  return {{"kind", g.kind},
          {"period", g.period},
          {"edge_probability", g.edge_probability},
          {"seed", g.seed},
          {"edges", edges},
          {"file", g.file},
          {"mu", g.mu},
          {"allow_invalid", g.allow_invalid}};
}

EvScenarioParams scenario_from(const json& j) {
  const std::string name = j.value("name", "ev-default");
  if (name != "ev-default") bad("scenario.name", "unknown scenario '" + name + "'");
  EvScenarioParams p = build_default(j.value("paper_scale", false));
  p.n = j.value("n", p.n);
  const auto n = static_cast<Eigen::Index>(p.n);
  if (p.n != 14) {
    // Resizing the horizon invalidates the 14-slot defaults unless overridden.
    p.p = Vector::Constant(n, p.p(0));
    p.x_lower = Vector::Constant(n, p.x_lower(0));
    p.x_upper = Vector::Constant(n, p.x_upper(0));
    if (!j.contains("d")) bad("scenario.d", "required when n != 14");
    if (!j.contains("caps")) bad("scenario.caps", "required when n != 14");
  }
  p.L = j.value("L", p.L);
  p.agents_per_population = j.value("agents_per_population", p.agents_per_population);
  p.q = j.value("q", p.q);
  p.a = j.value("a", p.a);
  p.b = j.value("b", p.b);
  if (j.contains("p")) p.p = to_vector(j.at("p"), "scenario.p", n);
  if (j.contains("d")) p.d = to_vector(j.at("d"), "scenario.d", n);
  if (j.contains("x_lower")) p.x_lower = to_vector(j.at("x_lower"), "scenario.x_lower", n);
  if (j.contains("x_upper")) p.x_upper = to_vector(j.at("x_upper"), "scenario.x_upper", n);
  if (j.contains("caps")) p.caps = to_vector(j.at("caps"), "scenario.caps", n);
  if (j.contains("beta_range")) {
    const auto range = j.at("beta_range").get<std::vector<double>>();
    if (range.size() != 2) bad("scenario.beta_range", "expected [min, max]");
    p.beta_min = range[0];
    p.beta_max = range[1];
  }
  p.seed = j.value("seed", p.seed);
  p.k_scale = j.value("k_scale", p.k_scale);
  p.eta = j.value("eta", p.eta);
  if (j.contains("schedule")) p.schedule = schedule_from(j.at("schedule"));
  return p;
}

AgentProfile agent_from(const json& j, Eigen::Index n, const std::string& where) {
  AgentProfile a;
  a.quad = j.at("quad").get<double>();
  a.lin = to_vector(j.at("lin"), where + ".lin", n);
  a.lower = to_vector(j.at("lower"), where + ".lower", n);
  a.upper = to_vector(j.at("upper"), where + ".upper", n);
  a.budget = j.at("budget").get<double>();
  return a;
}

json agent_to(const AgentProfile& a) {
  return {{"quad", a.quad},
          {"lin", from_vector(a.lin)},
          {"lower", from_vector(a.lower)},
          {"upper", from_vector(a.upper)},
          {"budget", a.budget}};
}

json game_json(const GameConfig& g) {
  json pops = json::array();
  for (const auto& pop : g.populations) {
    json agents = json::array();
    for (const auto& a : pop.agents) agents.push_back(agent_to(a));
    pops.push_back({{"agents", agents}, {"delta", from_vector(pop.delta)}});
  }
  return {{"C", from_matrix(g.C)},
          {"K", from_matrix(g.K)},
          {"eta", g.eta},
          {"coupling_lower", from_vector(g.coupling_lower)},
          {"coupling_upper", from_vector(g.coupling_upper)},
          {"populations", pops},
          {"schedule", schedule_to(g.schedule)}};
}

// Applies top-level game fields onto `game` (which may be a scenario build).
void apply_game_fields(const json& j, GameConfig& game, bool require_all) {
  auto need = [&](const char* key) {
    if (require_all && !j.contains(key)) bad(key, "missing (no scenario given)");
    return j.contains(key);
  };
  Eigen::Index n = game.dim();
  if (need("coupling_upper")) {
    game.coupling_upper = to_vector(j.at("coupling_upper"), "coupling_upper",
                                    require_all ? -1 : n);
    n = game.coupling_upper.size();
  }
  if (need("coupling_lower")) {
    game.coupling_lower = to_vector(j.at("coupling_lower"), "coupling_lower", n);
  }
  if (need("C")) game.C = to_matrix(j.at("C"), "C", n);
  if (need("K")) game.K = to_matrix(j.at("K"), "K", n);
  if (j.contains("eta")) game.eta = j.at("eta").get<double>();
  if (j.contains("schedule")) game.schedule = schedule_from(j.at("schedule"));
  if (need("populations")) {
    game.populations.clear();
    const auto& pops = j.at("populations");
    if (!pops.is_array()) bad("populations", "expected an array");
    for (std::size_t l = 0; l < pops.size(); ++l) {
      const std::string where = "populations[" + std::to_string(l) + "]";
      std::vector<AgentProfile> agents;
      const auto& list = pops[l].at("agents");
      for (std::size_t i = 0; i < list.size(); ++i) {
        agents.push_back(agent_from(list[i], n, where + ".agents[" + std::to_string(i) + "]"));
      }
      PopulationSpec pop = PopulationSpec::uniform(std::move(agents));
      if (pops[l].contains("delta")) {
        pop.delta = to_vector(pops[l].at("delta"), where + ".delta",
                              static_cast<Eigen::Index>(pop.size()));
      }
      game.populations.push_back(std::move(pop));
    }
  }
}

}  // namespace

GraphSequence make_graph(const GraphSpec& spec, std::size_t num_nodes) {
  if (spec.kind == "path") return GraphSequence::path(num_nodes);
  if (spec.kind == "complete") return GraphSequence::complete(num_nodes);
  if (spec.kind == "ring") return GraphSequence::ring_rotation(num_nodes, spec.period);
  if (spec.kind == "random") {
    return GraphSequence::random_undirected(num_nodes, spec.edge_probability, spec.seed);
  }
  if (spec.kind == "static") return {num_nodes, GraphSequence::Static{spec.edges}};
  if (spec.kind == "file") {
    GraphSequence seq = load_custom_sequence(spec.file, spec.allow_invalid, spec.mu);
    if (seq.num_nodes() != num_nodes) {
      throw std::invalid_argument("graph file has " + std::to_string(seq.num_nodes()) +
                                  " nodes, expected " + std::to_string(num_nodes));
    }
    return seq;
  }
  throw std::invalid_argument("unknown graph kind '" + spec.kind + "'");
}

ConfigDocument scenario_document(const EvScenarioParams& params) {
  ConfigDocument doc;
  doc.scenario = params;
  doc.game = to_canonical(params);
  doc.run.seed = params.seed;
  doc.run.max_iterations = kScenarioMaxIterations;
  doc.run.stop_consensus_tol = kScenarioConsensusTol;
  return doc;
}

ConfigDocument parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("document", "expected a JSON object");
  ConfigDocument doc;
  try {
    if (j.contains("scenario")) {
      doc = scenario_document(scenario_from(j.at("scenario")));
      apply_game_fields(j, doc.game, false);
    } else {
      apply_game_fields(j, doc.game, true);
    }
    if (j.contains("run")) doc.run = run_from(j.at("run"), doc.run);
    if (j.contains("graph")) doc.graph = graph_from(j.at("graph"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return doc;
}

ConfigDocument load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string game_to_json(const GameConfig& config) { return game_json(config).dump(2); }

GameConfig game_from_json(const std::string& json_text) {
  return parse_config(json_text).game;
}

std::string document_to_json(const ConfigDocument& doc) {
  json out = game_json(doc.game);
  out["run"] = run_to(doc.run);
  out["graph"] = graph_to(doc.graph);
  return out.dump(2);
}

std::string result_to_json(const RunResult& result, const GameConfig& config) {
  auto state = [](const IncentiveState& y) {
    return json{{"sigma", from_vector(y.sigma())}, {"lambda", from_vector(y.lambda())}};
  };
  json states = json::array();
  for (const auto& y : result.final_states) states.push_back(state(y));
  json strategies = json::array();
  for (const auto& pop : result.final_strategies) {
    json list = json::array();
    for (const auto& x : pop) list.push_back(from_vector(x));
    strategies.push_back(list);
  }
  json out{{"termination", to_string(result.termination)},
           {"iterations", result.iterations},
           {"average_state", state(result.average_state)},
           {"final_states", states},
           {"final_strategies", strategies}};
  if (config.num_populations() == result.final_strategies.size()) {
    const Vector load = profile_aggregate(config, result.final_strategies);
    out["aggregate_load"] = from_vector(load);
    out["slot_violation"] = from_vector(slot_violations(load, config.coupling_upper));
  }
  if (!result.trace.empty()) {
    const auto& r = result.trace.back();
    out["last_record"] = {{"k", r.k},
                          {"alpha", r.alpha},
                          {"consensus_residual", r.consensus_residual},
                          {"fixed_point_residual", r.fixed_point_residual},
                          {"perturbation_pnorm", r.perturbation_pnorm},
                          {"constraint_violation", r.constraint_violation}};
    const PerturbationSums sums = perturbation_sums(result.trace);
    out["perturbation_sum"] = sums.total;
    out["perturbation_tail_fraction"] = sums.tail_fraction();
  }
  return out.dump(2);
}

}  // namespace mpgame

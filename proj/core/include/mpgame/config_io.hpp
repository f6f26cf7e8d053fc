#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpgame/engine.hpp"
#include "mpgame/ev_scenario.hpp"
#include "mpgame/network.hpp"

namespace mpgame {

/// Which communication graph a document asks for.
struct GraphSpec {
  std::string kind = "path";  ///< path | complete | ring | random | static | file
  std::size_t period = 0;
  double edge_probability = 0.3;
  std::uint64_t seed = 42;
  std::vector<UndirectedEdge> edges;  ///< for "static"
  std::string file;                   ///< for "file"
  double mu = kDefaultMu;
  bool allow_invalid = false;
};

GraphSequence make_graph(const GraphSpec& spec, std::size_t num_nodes);

/// Everything a run needs. JSON layout:
///
///   {
///     "scenario": {"name": "ev-default", "paper_scale": false, ...overrides},
///     "C": [[...], ...] | {"scaled_identity": a},
///     "K": ...,
///     "eta": 0.1,
///     "coupling_lower": [...], "coupling_upper": [...],
///     "populations": [{"agents": [{"quad", "lin", "lower", "upper", "budget"}],
///                      "delta": [...]}],
///     "schedule": {"kind": "harmonic", "offset": 1, "scale": 1},
///     "run": {"max_iterations": ..., ...},
///     "graph": {"kind": "path", ...}
///   }
///
/// With "scenario" the EV instance is generated first and top-level game
/// fields override it; without it C, K, the coupling bounds and the
/// populations are required. Scenario overrides: n, L,
/// agents_per_population, q, p, a, b, d, x_lower, x_upper, beta_range,
/// caps, seed, k_scale, eta, schedule (vectors may be given as scalars).
struct ConfigDocument {
  GameConfig game;
  std::optional<EvScenarioParams> scenario;
  RunSettings run;
  GraphSpec graph;
};

/// Throws std::invalid_argument with the offending field on malformed input.
ConfigDocument parse_config(const std::string& json_text);
ConfigDocument load_config(const std::string& path);

/// Consensus with diminishing steps shrinks like alpha_k, so scenario
/// documents stop on a looser consensus tolerance than the library default.
inline constexpr double kScenarioConsensusTol = 1e-3;
inline constexpr std::size_t kScenarioMaxIterations = 60000;

/// Document for an EV instance with the scenario run defaults above.
ConfigDocument scenario_document(const EvScenarioParams& params);

/// Fully explicit document (no scenario section) that reproduces the run.
std::string document_to_json(const ConfigDocument& doc);
std::string game_to_json(const GameConfig& config);
GameConfig game_from_json(const std::string& json_text);

std::string result_to_json(const RunResult& result, const GameConfig& config);

}  // namespace mpgame

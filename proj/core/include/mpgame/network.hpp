#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mpgame/types.hpp"

namespace mpgame {

using UndirectedEdge = std::pair<std::size_t, std::size_t>;

/// Information flows from `from` to `to`: row `to` of W gets `weight` in
/// column `from`. A self entry (from == to) sets the diagonal explicitly.
struct WeightedEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;
};

/// Metropolis-Hastings weights: w_ij = 1/(1 + max(deg_i, deg_j)) on edges,
/// diagonal takes the remainder. Symmetric and doubly stochastic.
/// Self-loops and out-of-range endpoints throw std::invalid_argument;
/// duplicate edges are merged.
Matrix metropolis_weights(const std::vector<UndirectedEdge>& edges,
                          std::size_t num_nodes);

/// Edge list of the path 0-1-...-(L-1).
std::vector<UndirectedEdge> path_edges(std::size_t num_nodes);
std::vector<UndirectedEdge> complete_edges(std::size_t num_nodes);

/// Time-indexed weight matrices W^k among the coordinators.
///
/// Built-in generators emit symmetric gossip:
///  - Static: Metropolis weights of a fixed undirected graph.
///  - RingRotation: at step k only the ring pair {j, j+1 mod L} with
///    j = k mod period averages (weights 1/2), everyone else holds.
///  - RandomUndirected: each pair joins with the given probability, plus the
///    rotating ring pair so that every window of L steps is connected;
///    a deterministic function of (seed, k).
///  - Custom: explicit per-step weighted directed edges; steps cycle.
class GraphSequence {
 public:
  struct Static {
    std::vector<UndirectedEdge> edges;
  };
  struct RingRotation {
    std::size_t period = 0;  ///< 0 means L
  };
  struct RandomUndirected {
    double edge_probability = 0.3;
    std::uint64_t seed = 42;
  };
  struct Custom {
    std::vector<std::vector<WeightedEdge>> steps;
  };
  using Generator = std::variant<Static, RingRotation, RandomUndirected, Custom>;

  GraphSequence(std::size_t num_nodes, Generator generator);

  static GraphSequence path(std::size_t num_nodes);
  static GraphSequence complete(std::size_t num_nodes);
  static GraphSequence ring_rotation(std::size_t num_nodes, std::size_t period = 0);
  static GraphSequence random_undirected(std::size_t num_nodes, double p,
                                         std::uint64_t seed);

  std::size_t num_nodes() const { return num_nodes_; }
  const Generator& generator() const { return generator_; }

  /// W^k. Static sequences return a cached matrix.
  Matrix weights(std::size_t k) const;

  std::string describe() const;

 private:
  std::size_t num_nodes_;
  Generator generator_;
  Matrix static_weights_;
};

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kDefaultMu = 0.05;

/// Checks per step k < horizon: "doubly stochastic" (1e-12), "mu bound"
/// (diagonal and every positive entry >= mu, no negative entries), and
/// "windowed strong connectivity" (union digraph over each window of
/// `window` consecutive steps is strongly connected).
ValidationReport validate_sequence(const GraphSequence& seq, std::size_t horizon,
                                   double mu = kDefaultMu, std::size_t window = 0);

/// phi^{k_to, k_from} = W^{k_to} W^{k_to - 1} ... W^{k_from}; phi^{k,k} = W^k.
Matrix transition_product(const GraphSequence& seq, std::size_t k_from,
                          std::size_t k_to);

/// Strong connectivity of the digraph with an edge j -> i whenever
/// adjacency(i, j) > 0 for i != j.
bool strongly_connected(const Matrix& adjacency);

/// Loads {"num_nodes": L, "steps": [[{"from":..,"to":..,"weight":..}, ...], ...]}.
/// Unless allow_invalid is set, the sequence must pass validate_sequence over
/// one full cycle of steps (window = L, capped at the cycle length);
/// failures throw std::invalid_argument with the report summary.
GraphSequence load_custom_sequence(const std::string& path, bool allow_invalid = false,
                                   double mu = kDefaultMu);

}  // namespace mpgame

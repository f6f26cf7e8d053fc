#include "mpgame/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mpgame {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

UndirectedEdge ring_pair(std::size_t k, std::size_t period, std::size_t num_nodes) {
  const std::size_t j = k % period;
  return {j, (j + 1) % num_nodes};
}

Matrix custom_weights(const std::vector<WeightedEdge>& step, std::size_t num_nodes) {
  const auto L = static_cast<Eigen::Index>(num_nodes);
  Matrix W = Matrix::Zero(L, L);
  std::vector<bool> diagonal_set(num_nodes, false);
  for (const auto& e : step) {
    if (e.from >= num_nodes || e.to >= num_nodes) {
      throw std::invalid_argument("custom graph: node index out of range");
    }
    const auto to = static_cast<Eigen::Index>(e.to);
    const auto from = static_cast<Eigen::Index>(e.from);
    W(to, from) += e.weight;
    if (e.from == e.to) diagonal_set[e.to] = true;
  }
  for (Eigen::Index i = 0; i < L; ++i) {
    if (!diagonal_set[static_cast<std::size_t>(i)]) {
      W(i, i) = 1.0 - (W.row(i).sum() - W(i, i));
    }
  }
  return W;
}

}  // namespace

Matrix metropolis_weights(const std::vector<UndirectedEdge>& edges,
                          std::size_t num_nodes) {
  std::set<UndirectedEdge> unique;
  for (auto [a, b] : edges) {
    if (a == b) throw std::invalid_argument("metropolis_weights: self-loop");
    if (a >= num_nodes || b >= num_nodes) {
      throw std::invalid_argument("metropolis_weights: node out of range");
    }
    unique.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<std::size_t> degree(num_nodes, 0);
  for (auto [a, b] : unique) {
    ++degree[a];
    ++degree[b];
  }
  const auto L = static_cast<Eigen::Index>(num_nodes);
  Matrix W = Matrix::Zero(L, L);
  for (auto [a, b] : unique) {
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(degree[a], degree[b])));
    W(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
    W(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = w;
  }
  for (Eigen::Index i = 0; i < L; ++i) W(i, i) = 1.0 - W.row(i).sum();
  return W;
}

std::vector<UndirectedEdge> path_edges(std::size_t num_nodes) {
  std::vector<UndirectedEdge> edges;
  for (std::size_t i = 0; i + 1 < num_nodes; ++i) edges.emplace_back(i, i + 1);
  return edges;
}

std::vector<UndirectedEdge> complete_edges(std::size_t num_nodes) {
  std::vector<UndirectedEdge> edges;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    for (std::size_t j = i + 1; j < num_nodes; ++j) edges.emplace_back(i, j);
  }
  return edges;
}

GraphSequence::GraphSequence(std::size_t num_nodes, Generator generator)
    : num_nodes_(num_nodes), generator_(std::move(generator)) {
  if (num_nodes_ == 0) throw std::invalid_argument("GraphSequence: no nodes");
  if (auto* ring = std::get_if<RingRotation>(&generator_)) {
    if (ring->period == 0) ring->period = num_nodes_;
    if (ring->period > num_nodes_) {
      throw std::invalid_argument("GraphSequence: ring period exceeds node count");
    }
  }
  if (const auto* rnd = std::get_if<RandomUndirected>(&generator_)) {
    if (rnd->edge_probability < 0.0 || rnd->edge_probability > 1.0) {
      throw std::invalid_argument("GraphSequence: edge probability outside [0,1]");
    }
  }
  if (const auto* custom = std::get_if<Custom>(&generator_)) {
    if (custom->steps.empty()) throw std::invalid_argument("GraphSequence: no steps");
  }
  if (const auto* st = std::get_if<Static>(&generator_)) {
    static_weights_ = metropolis_weights(st->edges, num_nodes_);
  }
}

GraphSequence GraphSequence::path(std::size_t num_nodes) {
  return {num_nodes, Static{path_edges(num_nodes)}};
}

GraphSequence GraphSequence::complete(std::size_t num_nodes) {
  return {num_nodes, Static{complete_edges(num_nodes)}};
}

GraphSequence GraphSequence::ring_rotation(std::size_t num_nodes, std::size_t period) {
  return {num_nodes, RingRotation{period}};
}

GraphSequence GraphSequence::random_undirected(std::size_t num_nodes, double p,
                                               std::uint64_t seed) {
  return {num_nodes, RandomUndirected{p, seed}};
}

Matrix GraphSequence::weights(std::size_t k) const {
  const std::size_t L = num_nodes_;
  return std::visit(
      Overloaded{
          [this](const Static&) { return static_weights_; },
          [&](const RingRotation& ring) {
            if (L == 1) return Matrix::Identity(1, 1).eval();
            return metropolis_weights({ring_pair(k, ring.period, L)}, L);
          },
          [&](const RandomUndirected& rnd) {
            if (L == 1) return Matrix::Identity(1, 1).eval();
            std::mt19937_64 rng(splitmix64(rnd.seed ^ splitmix64(k)));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::vector<UndirectedEdge> edges{ring_pair(k, L, L)};
            for (std::size_t i = 0; i < L; ++i) {
              for (std::size_t j = i + 1; j < L; ++j) {
                if (unit(rng) < rnd.edge_probability) edges.emplace_back(i, j);
              }
            }
            return metropolis_weights(edges, L);
          },
          [&](const Custom& custom) {
            return custom_weights(custom.steps[k % custom.steps.size()], L);
          },
      },
      generator_);
}

std::string GraphSequence::describe() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const Static& s) {
                   out << "static(" << s.edges.size() << " edges)";
                 },
                 [&](const RingRotation& r) { out << "ring(period " << r.period << ")"; },
                 [&](const RandomUndirected& r) {
                   out << "random(p=" << r.edge_probability << ", seed=" << r.seed << ")";
                 },
                 [&](const Custom& c) { out << "custom(" << c.steps.size() << " steps)"; },
             },
             generator_);
  out << " on " << num_nodes_ << " nodes";
  return out.str();
}

bool strongly_connected(const Matrix& adjacency) {
  const Eigen::Index L = adjacency.rows();
  if (L <= 1) return true;
  auto reach_all = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(L), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < L; ++v) {
        if (v == u || seen[static_cast<std::size_t>(v)]) continue;
        // adjacency(i, j) > 0 is an edge j -> i.
        const double w = forward ? adjacency(v, u) : adjacency(u, v);
        if (w > 0.0) {
          seen[static_cast<std::size_t>(v)] = true;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == static_cast<std::size_t>(L);
  };
  return reach_all(true) && reach_all(false);
}

ValidationReport validate_sequence(const GraphSequence& seq, std::size_t horizon,
                                   double mu, std::size_t window) {
  if (window == 0) window = seq.num_nodes();
  if (horizon < window || window < 1) {
    throw std::invalid_argument("validate_sequence: need horizon >= window >= 1");
  }
  const auto L = static_cast<Eigen::Index>(seq.num_nodes());
  std::vector<Matrix> steps;
  steps.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) steps.push_back(seq.weights(k));

  ValidationReport report;
  std::string stochastic_detail;
  std::string mu_detail;
  for (std::size_t k = 0; k < horizon; ++k) {
    const Matrix& W = steps[k];
    const double row_err = (W.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (W.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (stochastic_detail.empty() &&
        (row_err > kStochasticTol || col_err > kStochasticTol)) {
      std::ostringstream msg;
      msg << "step " << k << ": row err " << row_err << ", col err " << col_err;
      stochastic_detail = msg.str();
    }
    if (mu_detail.empty()) {
      for (Eigen::Index i = 0; i < L && mu_detail.empty(); ++i) {
        for (Eigen::Index j = 0; j < L; ++j) {
          const double w = W(i, j);
          const bool bad = w < 0.0 || (i == j && w < mu) || (w > 0.0 && w < mu);
          if (bad) {
            std::ostringstream msg;
            msg << "step " << k << ": w(" << i << "," << j << ") = " << w;
            mu_detail = msg.str();
            break;
          }
        }
      }
    }
  }
  report.add("doubly stochastic", stochastic_detail.empty(), stochastic_detail);
  report.add("mu bound", mu_detail.empty(), mu_detail);

  std::string connect_detail;
  for (std::size_t start = 0; start + window <= horizon; ++start) {
    Matrix uni = Matrix::Zero(L, L);
    for (std::size_t k = start; k < start + window; ++k) {
      uni += (steps[k].array() > 0.0).cast<double>().matrix();
    }
    if (!strongly_connected(uni)) {
      connect_detail = "window starting at step " + std::to_string(start);
      break;
    }
  }
  report.add("windowed strong connectivity", connect_detail.empty(), connect_detail);
  return report;
}

Matrix transition_product(const GraphSequence& seq, std::size_t k_from,
                          std::size_t k_to) {
  if (k_from > k_to) throw std::invalid_argument("transition_product: k_from > k_to");
  Matrix phi = seq.weights(k_from);
  for (std::size_t k = k_from + 1; k <= k_to; ++k) phi = seq.weights(k) * phi;
  return phi;
}

GraphSequence load_custom_sequence(const std::string& path, bool allow_invalid,
                                   double mu) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file " + path);
  const nlohmann::json doc = nlohmann::json::parse(in);
  const auto L = doc.at("num_nodes").get<std::size_t>();
  GraphSequence::Custom custom;
  for (const auto& step : doc.at("steps")) {
    std::vector<WeightedEdge> edges;
    for (const auto& e : step) {
      edges.push_back({e.at("from").get<std::size_t>(), e.at("to").get<std::size_t>(),
                       e.at("weight").get<double>()});
    }
    custom.steps.push_back(std::move(edges));
  }
  const std::size_t cycle = custom.steps.size();
  GraphSequence seq(L, std::move(custom));
  if (!allow_invalid) {
    const std::size_t window = L;
    const ValidationReport report = validate_sequence(seq, cycle + window - 1, mu, window);
    if (!report.ok()) {
      throw std::invalid_argument("graph " + path + " violates the weight assumptions:\n" +
                                  report.summary());
    }
  }
  return seq;
}

}  // namespace mpgame

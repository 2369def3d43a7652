#pragma once

#include "emsim/errors.hpp"
#include "emsim/kernel/simulation.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace emsim::scenarios {

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  std::int64_t weight = 0;

  auto operator<=>(const WeightedEdge&) const = default;
};

struct Graph {
  std::size_t nodes = 0;
  std::vector<WeightedEdge> edges;

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(nodes);
    for (const auto& e : edges) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
    return adj;
  }

  bool connected() const {
    if (nodes == 0) return true;
    auto adj = adjacency();
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> todo{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!todo.empty()) {
      auto at = todo.back();
      todo.pop_back();
      for (auto next : adj[at])
        if (!seen[next]) {
          seen[next] = true;
          ++reached;
          todo.push_back(next);
        }
    }
    return reached == nodes;
  }
};

/// Unbiased draw from [0, n) that depends only on the raw generator output,
/// so runs replay identically across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below(0)");
  const std::uint64_t limit = Rng::max() - (Rng::max() % n + 1) % n;
  for (;;) {
    std::uint64_t x = rng();
    if (x <= limit) return x % n;
  }
}

template <class T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

inline std::size_t max_edges(std::size_t n) { return n * (n - 1) / 2; }

/// Uniform random graph with exactly `m` edges on `n` nodes, redrawn until
/// connected. Weights are a random permutation of 1..m, so they are distinct.
inline Graph random_connected_graph(std::size_t n, std::size_t m, Rng& rng, int max_attempts = 10000) {
  if (n < 2) throw ScenarioError("graph needs at least 2 nodes, got " + std::to_string(n));
  if (m < n - 1 || m > max_edges(n))
    throw ScenarioError("a connected simple graph on " + std::to_string(n) + " nodes needs between " +
                        std::to_string(n - 1) + " and " + std::to_string(max_edges(n)) + " edges, got " +
                        std::to_string(m));
  std::vector<std::pair<std::size_t, std::size_t>> all;
  all.reserve(max_edges(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) all.emplace_back(u, v);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) std::swap(all[i], all[i + uniform_below(rng, all.size() - i)]);
    Graph g{n, {}};
    for (std::size_t i = 0; i < m; ++i) g.edges.push_back({all[i].first, all[i].second, 0});
    if (!g.connected()) continue;
    std::vector<std::int64_t> weights(m);
    std::iota(weights.begin(), weights.end(), 1);
    shuffle_in_place(weights, rng);
    for (std::size_t i = 0; i < m; ++i) g.edges[i].weight = weights[i];
    std::sort(g.edges.begin(), g.edges.end());
    return g;
  }
  throw ScenarioError("no connected graph found after " + std::to_string(max_attempts) + " attempts");
}

/// 0 - 1 - 2 - ... - (n-1), weight i+1 on edge (i, i+1).
inline Graph line_graph(std::size_t n) {
  Graph g{n, {}};
  for (std::size_t i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, static_cast<std::int64_t>(i + 1)});
  return g;
}

/// Edge set as normalized (min, max) node pairs.
inline std::set<std::pair<std::size_t, std::size_t>> edge_pairs(const std::vector<WeightedEdge>& edges) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : edges) out.emplace(std::min(e.u, e.v), std::max(e.u, e.v));
  return out;
}

}  // namespace emsim::scenarios

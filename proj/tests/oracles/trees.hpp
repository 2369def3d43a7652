#pragma once

// Random rooted trees and their sizes and weight sums, computed directly.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

struct Tree {
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::int64_t> weight;

  std::size_t size() const { return children.size(); }
};

/// Random recursive tree: node i > 0 hangs under a uniform earlier node.
inline Tree random_tree(std::size_t n, std::mt19937_64& rng) {
  Tree t;
  t.children.resize(n);
  t.weight.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.weight[i] = static_cast<std::int64_t>(rng() % 1000);
    if (i > 0) t.children[rng() % i].push_back(i);
  }
  return t;
}

/// Complete binary tree on n nodes.
inline Tree balanced_binary_tree(std::size_t n) {
  Tree t;
  t.children.resize(n);
  t.weight.assign(n, 1);
  for (std::size_t i = 1; i < n; ++i) t.children[(i - 1) / 2].push_back(i);
  return t;
}

inline std::size_t subtree_size(const Tree& t, std::size_t root = 0) {
  std::size_t n = 1;
  for (auto c : t.children[root]) n += subtree_size(t, c);
  return n;
}

inline std::int64_t subtree_weight(const Tree& t, std::size_t root = 0) {
  std::int64_t w = t.weight[root];
  for (auto c : t.children[root]) w += subtree_weight(t, c);
  return w;
}

}  // namespace oracle

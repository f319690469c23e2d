#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "aag/algo/types.hpp"

namespace aag::algo {

enum class ComponentMode { Weak, Strong };

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Smaller id always becomes the root, so roots are component minima.
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

// Iterative Tarjan. Returns, for each node, the smallest id in its SCC.
inline std::vector<std::uint32_t> strong_components(const CsrGraph& g) {
  const std::uint32_t n = g.n;
  constexpr std::uint32_t kUnvisited = ~0u;
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0), label(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> scc_stack;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> call;
  std::uint32_t counter = 0;

  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, g.offsets[root]});
    index[root] = low[root] = counter++;
    scc_stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next < g.offsets[v + 1]) {
        const auto w = g.targets[next++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          scc_stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, g.offsets[w]});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const auto done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::uint32_t> members;
        std::uint32_t w;
        do {
          w = scc_stack.back();
          scc_stack.pop_back();
          on_stack[w] = false;
          members.push_back(w);
        } while (w != done);
        const auto rep = *std::min_element(members.begin(), members.end());
        for (auto m : members) label[m] = rep;
      }
    }
  }
  return label;
}

}  // namespace detail

/// Component labelling; each node's score is the smallest node id in its
/// component. Weak ignores edge direction, Strong uses Tarjan's SCCs.
inline NodeScores connected_components(const CsrGraph& g, ComponentMode mode = ComponentMode::Weak) {
  NodeScores out;
  out.universe = g.universe;
  out.semantics = "component";
  out.scores.resize(g.n);
  if (mode == ComponentMode::Weak) {
    detail::DisjointSets ds(g.n);
    for (std::uint32_t u = 0; u < g.n; ++u)
      for (auto v : g.neighbors(u)) ds.unite(u, v);
    for (std::uint32_t u = 0; u < g.n; ++u) out.scores[u] = ds.find(u);
  } else {
    auto label = detail::strong_components(g);
    for (std::uint32_t u = 0; u < g.n; ++u) out.scores[u] = label[u];
  }
  return out;
}

inline std::size_t component_count(const NodeScores& labels) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < labels.scores.size(); ++i)
    if (labels.scores[i] == static_cast<double>(i)) ++count;
  return count;
}

}  // namespace aag::algo

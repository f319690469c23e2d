#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "aag/algo/types.hpp"
#include "aag/core/error.hpp"
#include "aag/graph/property_graph.hpp"

namespace aag::algo {

struct WeightFilter {
  graph::FilterOp op = graph::FilterOp::Ge;
  double value = 0.0;

  bool admits(double w) const {
    switch (op) {
      case graph::FilterOp::Ge: return w >= value;
      case graph::FilterOp::Le: return w <= value;
      case graph::FilterOp::Eq: return w == value;
      case graph::FilterOp::Ne: return w != value;
    }
    return false;
  }
};

struct CycleOptions {
  int min_len = 2;
  int max_len = 6;
  std::optional<std::uint32_t> anchor;
  std::optional<WeightFilter> edge_filter;
  std::size_t max_cycles = 10'000;
  int length_cap = 8;
};

namespace detail {

/// Deduplicated simple adjacency (no self loops, one entry per target) after
/// applying the edge filter. Parallel edges collapse to their largest weight.
struct SimpleAdjacency {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::vector<double>> weight;
  std::vector<std::vector<std::uint32_t>> in;
};

inline SimpleAdjacency simple_adjacency(const CsrGraph& g, const std::optional<WeightFilter>& filter) {
  SimpleAdjacency adj;
  adj.out.resize(g.n);
  adj.weight.resize(g.n);
  adj.in.resize(g.n);
  for (std::uint32_t u = 0; u < g.n; ++u) {
    std::map<std::uint32_t, double> best;
    for (auto i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      const auto v = g.targets[i];
      if (v == u) continue;
      const double w = g.weights ? (*g.weights)[i] : 1.0;
      if (filter && !filter->admits(w)) continue;
      auto [it, inserted] = best.emplace(v, w);
      if (!inserted) it->second = std::max(it->second, w);
    }
    for (const auto& [v, w] : best) {
      adj.out[u].push_back(v);
      adj.weight[u].push_back(w);
      adj.in[v].push_back(u);
    }
  }
  return adj;
}

constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Edge distance from every node to `target` over nodes admitted by `allowed`,
/// explored no deeper than `limit`.
template <typename Allowed>
std::vector<int> distance_to(const SimpleAdjacency& adj, std::uint32_t target, int limit, Allowed allowed) {
  std::vector<int> dist(adj.out.size(), kUnreachable);
  std::deque<std::uint32_t> queue{target};
  dist[target] = 0;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    if (dist[v] >= limit) continue;
    for (auto u : adj.in[v]) {
      if (!allowed(u) || dist[u] != kUnreachable) continue;
      dist[u] = dist[v] + 1;
      queue.push_back(u);
    }
  }
  return dist;
}

}  // namespace detail

/// All simple directed cycles with min_len <= length <= max_len, found by a
/// depth-bounded search rooted at each cycle's smallest node (or at the
/// anchor) and pruned by distance-to-root. Output cycles are in canonical
/// rotation and sorted lexicographically; at most max_cycles are kept.
inline CycleSet enumerate_cycles(const CsrGraph& g, const CycleOptions& opt = {}) {
  if (opt.min_len < 2 || opt.min_len > opt.max_len || opt.max_len > opt.length_cap)
    fail(ErrorCode::LengthBoundError,
         "need 2 <= min_len <= max_len <= " + std::to_string(opt.length_cap) + ", got min_len=" +
             std::to_string(opt.min_len) + " max_len=" + std::to_string(opt.max_len),
         "max_len");
  if (opt.anchor && *opt.anchor >= g.n)
    fail(ErrorCode::InvalidNode, "anchor " + std::to_string(*opt.anchor) + " is not a node", "anchor");

  const auto adj = detail::simple_adjacency(g, opt.edge_filter);
  CycleSet result;
  result.universe = g.universe;
  std::vector<std::vector<std::uint32_t>> found;

  std::vector<bool> on_path(g.n, false);
  std::vector<std::uint32_t> path;
  bool stop = false;

  auto search = [&](std::uint32_t root, const std::vector<int>& dist, auto allowed) {
    // Iterative DFS; frame = (node, next neighbour index).
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{root, 0}};
    path.assign(1, root);
    on_path[root] = true;
    while (!stack.empty() && !stop) {
      auto& [v, next] = stack.back();
      if (next == adj.out[v].size()) {
        on_path[v] = false;
        path.pop_back();
        stack.pop_back();
        continue;
      }
      const auto w = adj.out[v][next++];
      const int len = static_cast<int>(path.size());
      if (w == root) {
        if (len >= opt.min_len) {
          found.push_back(path);
          if (found.size() >= opt.max_cycles) stop = true;
        }
        continue;
      }
      if (on_path[w] || !allowed(w) || dist[w] == detail::kUnreachable) continue;
      if (len + dist[w] > opt.max_len) continue;
      on_path[w] = true;
      path.push_back(w);
      stack.push_back({w, 0});
    }
    for (auto v : path) on_path[v] = false;
    path.clear();
  };

  if (opt.anchor) {
    const auto a = *opt.anchor;
    auto all = [](std::uint32_t) { return true; };
    auto dist = detail::distance_to(adj, a, opt.max_len, all);
    search(a, dist, all);
  } else {
    for (std::uint32_t s = 0; s < g.n && !stop; ++s) {
      auto above = [s](std::uint32_t v) { return v > s; };
      auto dist = detail::distance_to(adj, s, opt.max_len, above);
      search(s, dist, above);
    }
  }
  result.truncated = stop;

  for (auto& c : found) {
    auto smallest = std::min_element(c.begin(), c.end());
    std::rotate(c.begin(), smallest, c.end());
  }
  std::sort(found.begin(), found.end());

  auto weight_of = [&](std::uint32_t u, std::uint32_t v) {
    auto it = std::lower_bound(adj.out[u].begin(), adj.out[u].end(), v);
    return adj.weight[u][static_cast<std::size_t>(it - adj.out[u].begin())];
  };
  for (auto& nodes : found) {
    Cycle c{std::move(nodes), std::nullopt, std::nullopt};
    if (g.weights) {
      double lo = std::numeric_limits<double>::infinity(), sum = 0.0;
      for (std::size_t i = 0; i < c.nodes.size(); ++i) {
        double w = weight_of(c.nodes[i], c.nodes[(i + 1) % c.nodes.size()]);
        lo = std::min(lo, w);
        sum += w;
      }
      c.min_weight = lo;
      c.total_flow = sum;
    }
    result.cycles.push_back(std::move(c));
  }
  return result;
}

}  // namespace aag::algo

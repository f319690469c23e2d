#pragma once

#include <algorithm>
#include <deque>
#include <span>
#include <vector>

#include "aag/algo/types.hpp"
#include "aag/core/error.hpp"

namespace aag::algo {

/// Every node within `k` out-hops of any seed, seeds included, ascending ids.
inline NodeSet khop(const CsrGraph& g, std::span<const std::uint32_t> seeds, int k) {
  if (k < 0) fail(ErrorCode::SchemaViolation, "k must be >= 0", "k");
  std::vector<int> dist(g.n, -1);
  std::deque<std::uint32_t> queue;
  for (auto s : seeds) {
    if (s >= g.n) fail(ErrorCode::InvalidNode, "seed " + std::to_string(s) + " is not a node", std::to_string(s));
    if (dist[s] == -1) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    if (dist[u] == k) continue;
    for (auto v : g.neighbors(u)) {
      if (dist[v] != -1) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  NodeSet out;
  out.universe = g.universe;
  for (std::uint32_t v = 0; v < g.n; ++v)
    if (dist[v] != -1) out.ids.push_back(v);
  return out;
}

struct RankedNode {
  std::uint32_t id = 0;
  double score = 0.0;
};

/// Descending by score, ascending id among equal scores; min(k, n) entries.
inline std::vector<RankedNode> top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1) fail(ErrorCode::SchemaViolation, "k must be >= 1", "k");
  std::vector<RankedNode> all;
  all.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) all.push_back({static_cast<std::uint32_t>(i), scores[i]});
  auto better = [](const RankedNode& a, const RankedNode& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  const auto keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
  all.resize(keep);
  return all;
}

/// 1-based position of `id` in the full descending order (same tie rule).
inline std::size_t rank_of(std::span<const double> scores, std::uint32_t id) {
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == id) continue;
    if (scores[i] > scores[id] || (scores[i] == scores[id] && i < id)) ++rank;
  }
  return rank;
}

}  // namespace aag::algo

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aag/graph/csr.hpp"

namespace aag::algo {

using graph::CsrGraph;
using graph::UniversePtr;

struct NodeScores {
  std::vector<double> scores;
  UniversePtr universe;
  std::string semantics = "score";  // "pagerank", "personalized_pagerank", "component"
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;
};

/// Node ids in meaningful order (rank order for top_k, ascending otherwise).
struct NodeSet {
  std::vector<std::uint32_t> ids;
  UniversePtr universe;
};

struct Cycle {
  std::vector<std::uint32_t> nodes;  // canonical rotation, smallest id first
  std::optional<double> min_weight;  // bottleneck edge
  std::optional<double> total_flow;  // sum of edge weights along the cycle
};

struct CycleSet {
  std::vector<Cycle> cycles;
  bool truncated = false;
  UniversePtr universe;
};

struct FlowRow {
  std::string group;
  double in_total = 0.0;
  double out_total = 0.0;
  std::uint64_t in_count = 0;
  std::uint64_t out_count = 0;
  double net = 0.0;
};

struct FlowSummary {
  std::vector<FlowRow> rows;
};

inline std::string key_of(const UniversePtr& u, std::uint32_t id) {
  return u && id < u->keys.size() ? u->keys[id] : std::to_string(id);
}

}  // namespace aag::algo

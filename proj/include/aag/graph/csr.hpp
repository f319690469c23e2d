#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/graph/property_graph.hpp"

namespace aag::graph {

/// Dense node id space of an execution graph: position i is CSR node i.
/// `refs` maps back into the PropertyGraph, `keys` holds display keys.
struct Universe {
  std::vector<std::string> keys;
  std::vector<NodeRef> refs;
  std::shared_ptr<const PropertyGraph> base;  // set when built from a shared property graph
  std::string relation;

  std::uint32_t size() const { return static_cast<std::uint32_t>(keys.size()); }

  std::optional<std::uint32_t> find_key(std::string_view key) const {
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == key) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }
};

using UniversePtr = std::shared_ptr<const Universe>;

struct CsrGraph {
  std::uint32_t n = 0;
  std::vector<std::uint64_t> offsets{0};
  std::vector<std::uint32_t> targets;
  std::optional<std::vector<double>> weights;
  bool directed = true;
  UniversePtr universe;

  std::uint64_t edge_count() const { return offsets.back(); }
  std::uint64_t degree(std::uint32_t u) const { return offsets[u + 1] - offsets[u]; }
  std::span<const std::uint32_t> neighbors(std::uint32_t u) const {
    return {targets.data() + offsets[u], static_cast<std::size_t>(offsets[u + 1] - offsets[u])};
  }
  std::span<const double> neighbor_weights(std::uint32_t u) const {
    return {weights->data() + offsets[u], static_cast<std::size_t>(offsets[u + 1] - offsets[u])};
  }
};

struct WeightedEdge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 1.0;
  friend auto operator<=>(const WeightedEdge&, const WeightedEdge&) = default;
};

enum class Direction { Out, In, Symmetrized };
enum class Weighting { None, Column, Count };

/// Generic builder over an explicit edge list. Out keeps parallel edges (each
/// with its own weight); Count collapses parallel edges into multiplicities;
/// Symmetrized inserts both directions and de-duplicates (Column weights of
/// merged entries are summed, Count counts originals in either direction).
/// Rows are sorted by target id; ties keep input order.
inline CsrGraph build_csr(std::uint32_t n, std::vector<WeightedEdge> edges, Direction direction, Weighting weighting,
                          UniversePtr universe = nullptr) {
  for (const auto& e : edges)
    if (e.src >= n || e.dst >= n) fail(ErrorCode::InvalidNode, "edge endpoint out of range");

  if (direction == Direction::In)
    for (auto& e : edges) std::swap(e.src, e.dst);

  std::vector<WeightedEdge> entries;
  if (direction == Direction::Symmetrized) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    for (const auto& e : edges) {
      double w = weighting == Weighting::Column ? e.weight : 1.0;
      merged[{e.src, e.dst}] += w;
      if (e.src != e.dst) merged[{e.dst, e.src}] += w;
    }
    for (const auto& [k, w] : merged) entries.push_back({k.first, k.second, w});
  } else if (weighting == Weighting::Count) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    for (const auto& e : edges) merged[{e.src, e.dst}] += 1.0;
    for (const auto& [k, w] : merged) entries.push_back({k.first, k.second, w});
  } else {
    entries = std::move(edges);
    std::stable_sort(entries.begin(), entries.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
      return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
    });
  }

  CsrGraph g;
  g.n = n;
  g.directed = direction != Direction::Symmetrized;
  g.offsets.assign(n + 1, 0);
  for (const auto& e : entries) ++g.offsets[e.src + 1];
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.targets.reserve(entries.size());
  if (weighting != Weighting::None) g.weights.emplace().reserve(entries.size());
  for (const auto& e : entries) {
    g.targets.push_back(e.dst);
    if (g.weights) g.weights->push_back(e.weight);
  }
  g.universe = std::move(universe);
  return g;
}

/// Edge list in CSR order, weight 1 when unweighted.
inline std::vector<WeightedEdge> edge_list(const CsrGraph& g) {
  std::vector<WeightedEdge> out;
  out.reserve(g.targets.size());
  for (std::uint32_t u = 0; u < g.n; ++u)
    for (auto i = g.offsets[u]; i < g.offsets[u + 1]; ++i)
      out.push_back({u, g.targets[i], g.weights ? (*g.weights)[i] : 1.0});
  return out;
}

/// Universe of a relation: its source table's nodes, followed by the target
/// table's nodes when the relation is bipartite.
inline UniversePtr relation_universe(const PropertyGraph& pg, const EdgeTable& rel) {
  auto u = std::make_shared<Universe>();
  auto add_table = [&](std::uint32_t t) {
    for (std::uint32_t i = 0; i < pg.nodes[t].size(); ++i) {
      u->keys.push_back(pg.nodes[t].keys[i]);
      u->refs.push_back({t, i});
    }
  };
  add_table(rel.src_table);
  if (rel.dst_table != rel.src_table) add_table(rel.dst_table);
  return u;
}

inline std::uint32_t relation_dst_offset(const PropertyGraph& pg, const EdgeTable& rel) {
  return rel.dst_table == rel.src_table ? 0 : pg.nodes[rel.src_table].size();
}

inline std::vector<WeightedEdge> relation_edges(const PropertyGraph& pg, const EdgeTable& rel, Weighting weighting,
                                                std::span<const std::size_t> subset = {}, bool use_subset = false) {
  if (weighting == Weighting::Column && !rel.weights)
    fail(ErrorCode::MissingWeightColumn, "relation " + rel.label + " has no weight column", rel.label);
  const auto off = relation_dst_offset(pg, rel);
  std::vector<WeightedEdge> edges;
  auto push = [&](std::size_t i) {
    edges.push_back({rel.src[i], rel.dst[i] + off, rel.weights ? (*rel.weights)[i] : 1.0});
  };
  if (use_subset)
    for (auto i : subset) push(i);
  else
    for (std::size_t i = 0; i < rel.size(); ++i) push(i);
  return edges;
}

inline CsrGraph to_csr(const PropertyGraph& pg, std::string_view relation, Direction direction, Weighting weighting) {
  const auto& rel = pg.relation(relation);
  auto universe = relation_universe(pg, rel);
  const auto n = universe->size();
  auto g = build_csr(n, relation_edges(pg, rel, weighting), direction, weighting, std::move(universe));
  if (!rel.directed) g.directed = false;
  return g;
}

/// Same as to_csr, but the universe keeps `pg` alive so downstream node sets
/// can be materialized back into stage views.
inline CsrGraph to_csr(std::shared_ptr<const PropertyGraph> pg, std::string_view relation, Direction direction,
                       Weighting weighting) {
  const auto& rel = pg->relation(relation);
  auto universe = std::const_pointer_cast<Universe>(relation_universe(*pg, rel));
  universe->base = pg;
  universe->relation = std::string(relation);
  const auto n = universe->size();
  auto g = build_csr(n, relation_edges(*pg, rel, weighting), direction, weighting, std::move(universe));
  if (!rel.directed) g.directed = false;
  return g;
}

// ---------------------------------------------------------------------------
// Stage views

/// Induced subgraph of one relation: an edge is kept iff both endpoints are
/// in the node subset.
struct StageGraphView {
  std::shared_ptr<const PropertyGraph> base;
  std::string relation;
  std::vector<NodeRef> nodes;       // sorted, unique
  std::vector<std::size_t> edges;   // ascending indices into the relation's edge table
  std::string provenance;           // producing stage node id
};

inline StageGraphView induced_view(std::shared_ptr<const PropertyGraph> base, std::string relation,
                                   std::vector<NodeRef> subset, std::string provenance) {
  const auto& rel = base->relation(relation);
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

  std::vector<std::vector<bool>> member(base->nodes.size());
  for (std::size_t t = 0; t < base->nodes.size(); ++t) member[t].assign(base->nodes[t].size(), false);
  for (const auto& r : subset) {
    if (r.table >= base->nodes.size() || r.id >= base->nodes[r.table].size())
      fail(ErrorCode::InvalidNode, "node reference outside the base graph");
    member[r.table][r.id] = true;
  }

  StageGraphView view{std::move(base), std::move(relation), std::move(subset), {}, std::move(provenance)};
  for (std::size_t i = 0; i < rel.size(); ++i)
    if (member[rel.src_table][rel.src[i]] && member[rel.dst_table][rel.dst[i]]) view.edges.push_back(i);
  return view;
}

/// Compact CSR over the view: node i is view.nodes[i].
inline CsrGraph to_csr(const StageGraphView& view, Direction direction, Weighting weighting) {
  const auto& pg = *view.base;
  const auto& rel = pg.relation(view.relation);
  if (weighting == Weighting::Column && !rel.weights)
    fail(ErrorCode::MissingWeightColumn, "relation " + rel.label + " has no weight column", rel.label);

  auto universe = std::make_shared<Universe>();
  universe->base = view.base;
  universe->relation = view.relation;
  std::map<NodeRef, std::uint32_t> compact;
  for (const auto& r : view.nodes) {
    compact.emplace(r, universe->size());
    universe->keys.push_back(pg.key(r));
    universe->refs.push_back(r);
  }
  std::vector<WeightedEdge> edges;
  for (auto i : view.edges)
    edges.push_back({compact.at({rel.src_table, rel.src[i]}), compact.at({rel.dst_table, rel.dst[i]}),
                     rel.weights ? (*rel.weights)[i] : 1.0});
  const auto n = universe->size();
  auto g = build_csr(n, std::move(edges), direction, weighting, std::move(universe));
  if (!rel.directed) g.directed = false;
  return g;
}

// ---------------------------------------------------------------------------
// Two-hop projection

struct ProjectionSpec {
  std::string first;   // relation outer_a -- middle
  std::string second;  // relation outer_b -- middle
  std::size_t tau = 1;
  std::string output_label = "projected";
};

/// Connects outer endpoints of two relations that share at least `tau`
/// distinct middle neighbours; the new edge weight is the shared count. When
/// both relations are the same the result is undirected with one edge per
/// unordered pair.
inline PropertyGraph project(const PropertyGraph& pg, const ProjectionSpec& spec) {
  const auto& r1 = pg.relation(spec.first);
  const auto& r2 = pg.relation(spec.second);
  if (pg.has_relation(spec.output_label))
    fail(ErrorCode::ProjectionMismatch, "relation " + spec.output_label + " already exists", spec.output_label);

  // Middle = shared table; prefer the destination side.
  std::optional<std::uint32_t> middle;
  for (auto cand : {r1.dst_table, r1.src_table})
    if (cand == r2.dst_table || cand == r2.src_table) {
      middle = cand;
      break;
    }
  if (!middle)
    fail(ErrorCode::ProjectionMismatch, spec.first + " and " + spec.second + " share no entity", spec.output_label);

  auto sides = [&](const EdgeTable& r) {
    bool middle_is_dst = r.dst_table == *middle;
    return std::pair{middle_is_dst ? r.src_table : r.dst_table, middle_is_dst};
  };
  auto [outer_a, mid_dst1] = sides(r1);
  auto [outer_b, mid_dst2] = sides(r2);
  const bool same_relation = spec.first == spec.second;

  auto neighbours = [&](const EdgeTable& r, bool mid_is_dst) {
    std::map<std::uint32_t, std::set<std::uint32_t>> out;  // middle -> outer
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto m = mid_is_dst ? r.dst[i] : r.src[i];
      auto o = mid_is_dst ? r.src[i] : r.dst[i];
      out[m].insert(o);
    }
    return out;
  };
  auto by_mid_a = neighbours(r1, mid_dst1);
  auto by_mid_b = neighbours(r2, mid_dst2);

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> shared;
  for (const auto& [m, as] : by_mid_a) {
    auto it = by_mid_b.find(m);
    if (it == by_mid_b.end()) continue;
    for (auto a : as)
      for (auto b : it->second) {
        if (outer_a == outer_b && a == b) continue;
        if (same_relation && a > b) continue;
        ++shared[{a, b}];
      }
  }

  PropertyGraph out = pg;
  EdgeTable et;
  et.label = spec.output_label;
  et.src_table = outer_a;
  et.dst_table = outer_b;
  et.directed = !same_relation;
  et.weights.emplace();
  for (const auto& [pair, count] : shared) {
    if (count < spec.tau) continue;
    et.src.push_back(pair.first);
    et.dst.push_back(pair.second);
    et.weights->push_back(static_cast<double>(count));
    et.source_rows.push_back(0);
  }
  out.edges.push_back(std::move(et));
  return out;
}

}  // namespace aag::graph

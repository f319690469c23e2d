#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aag/algo/types.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/graph/csr.hpp"

namespace aag::tools {

enum class Kind { Graph, NodeScores, NodeSet, CycleSet, Table, Scalar };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::Graph: return "Graph";
    case Kind::NodeScores: return "NodeScores";
    case Kind::NodeSet: return "NodeSet";
    case Kind::CycleSet: return "CycleSet";
    case Kind::Table: return "Table";
    case Kind::Scalar: return "Scalar";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (auto k : {Kind::Graph, Kind::NodeScores, Kind::NodeSet, Kind::CycleSet, Kind::Table, Kind::Scalar})
    if (to_string(k) == s) return k;
  fail(ErrorCode::SchemaViolation, "unknown value kind '" + s + "'", s);
}

struct GraphValue {
  std::shared_ptr<const graph::CsrGraph> csr;
};

using Cell = std::variant<std::string, double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    return std::nullopt;
  }
};

struct Scalar {
  json value;
};

using Value = std::variant<GraphValue, algo::NodeScores, algo::NodeSet, algo::CycleSet, Table, Scalar>;

inline Kind kind_of(const Value& v) { return static_cast<Kind>(v.index()); }

inline Table flow_table(const algo::FlowSummary& s) {
  Table t{{"group", "in_total", "out_total", "in_count", "out_count", "net"}, {}};
  for (const auto& r : s.rows)
    t.rows.push_back({r.group, r.in_total, r.out_total, static_cast<double>(r.in_count),
                      static_cast<double>(r.out_count), r.net});
  return t;
}

/// Number of reportable items: nodes, cycles, rows; 1 for a scalar, edge
/// count for a graph.
inline std::size_t item_count(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::size_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GraphValue>) return x.csr ? x.csr->edge_count() : 0;
        else if constexpr (std::is_same_v<T, algo::NodeScores>) return x.scores.size();
        else if constexpr (std::is_same_v<T, algo::NodeSet>) return x.ids.size();
        else if constexpr (std::is_same_v<T, algo::CycleSet>) return x.cycles.size();
        else if constexpr (std::is_same_v<T, Table>) return x.rows.size();
        else return x.value.is_null() ? 0 : 1;
      },
      v);
}

// ---------------------------------------------------------------------------
// JSON encoding (raw.json and the wire protocol share it)

inline json cell_json(const Cell& c) {
  return std::holds_alternative<std::string>(c) ? json(std::get<std::string>(c)) : json(std::get<double>(c));
}

inline json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, GraphValue>) {
          const auto& g = *x.csr;
          json nodes = json::array(), edges = json::array();
          for (std::uint32_t i = 0; i < g.n; ++i) nodes.push_back(algo::key_of(g.universe, i));
          for (const auto& e : graph::edge_list(g)) {
            json je = {e.src, e.dst};
            if (g.weights) je.push_back(e.weight);
            edges.push_back(je);
          }
          return {{"kind", "Graph"}, {"directed", g.directed}, {"weighted", g.weights.has_value()},
                  {"nodes", nodes}, {"edges", edges}};
        } else if constexpr (std::is_same_v<T, algo::NodeScores>) {
          json nodes = json::array();
          for (std::size_t i = 0; i < x.scores.size(); ++i)
            nodes.push_back(algo::key_of(x.universe, static_cast<std::uint32_t>(i)));
          return {{"kind", "NodeScores"}, {"semantics", x.semantics}, {"nodes", nodes}, {"scores", x.scores},
                  {"iterations", x.iterations}, {"converged", x.converged}, {"residual", x.residual}};
        } else if constexpr (std::is_same_v<T, algo::NodeSet>) {
          json nodes = json::array();
          for (auto id : x.ids) nodes.push_back(algo::key_of(x.universe, id));
          return {{"kind", "NodeSet"}, {"nodes", nodes}};
        } else if constexpr (std::is_same_v<T, algo::CycleSet>) {
          json cycles = json::array();
          for (const auto& c : x.cycles) {
            json nodes = json::array();
            for (auto id : c.nodes) nodes.push_back(algo::key_of(x.universe, id));
            json jc = {{"nodes", nodes}};
            if (c.min_weight) jc["min_weight"] = *c.min_weight;
            if (c.total_flow) jc["total_flow"] = *c.total_flow;
            cycles.push_back(jc);
          }
          return {{"kind", "CycleSet"}, {"truncated", x.truncated}, {"cycles", cycles}};
        } else if constexpr (std::is_same_v<T, Table>) {
          json rows = json::array();
          for (const auto& r : x.rows) {
            json jr = json::array();
            for (const auto& c : r) jr.push_back(cell_json(c));
            rows.push_back(jr);
          }
          return {{"kind", "Table"}, {"columns", x.columns}, {"rows", rows}};
        } else {
          return {{"kind", "Scalar"}, {"value", x.value}};
        }
      },
      v);
}

namespace detail {

/// Universe made of display keys only (values decoded from JSON).
inline graph::UniversePtr key_universe(const std::vector<std::string>& keys) {
  auto u = std::make_shared<graph::Universe>();
  u->keys = keys;
  u->refs.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) u->refs[i] = {0, static_cast<std::uint32_t>(i)};
  return u;
}

/// Assigns ids to keys in first-seen order.
struct KeyInterner {
  std::vector<std::string> keys;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::uint32_t operator()(const std::string& k) {
    auto [it, inserted] = ids.try_emplace(k, static_cast<std::uint32_t>(keys.size()));
    if (inserted) keys.push_back(k);
    return it->second;
  }
};

}  // namespace detail

/// Decodes a value; inverse of to_json up to universe identity.
inline Value value_from_json(const json& j) {
  try {
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    switch (kind) {
      case Kind::Graph: {
        auto keys = j.at("nodes").get<std::vector<std::string>>();
        const auto n = static_cast<std::uint32_t>(keys.size());
        const bool weighted = j.value("weighted", false);
        std::vector<graph::WeightedEdge> edges;
        for (const auto& e : j.at("edges")) {
          graph::WeightedEdge we{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>(), 1.0};
          if (weighted) we.weight = e.at(2).get<double>();
          edges.push_back(we);
        }
        auto g = graph::build_csr(n, std::move(edges), graph::Direction::Out,
                                  weighted ? graph::Weighting::Column : graph::Weighting::None,
                                  detail::key_universe(keys));
        g.directed = j.value("directed", true);
        return GraphValue{std::make_shared<const graph::CsrGraph>(std::move(g))};
      }
      case Kind::NodeScores: {
        algo::NodeScores s;
        s.universe = detail::key_universe(j.at("nodes").get<std::vector<std::string>>());
        s.scores = j.at("scores").get<std::vector<double>>();
        if (s.scores.size() != s.universe->keys.size())
          fail(ErrorCode::SchemaViolation, "NodeScores nodes/scores length mismatch");
        s.semantics = j.value("semantics", "score");
        s.iterations = j.value("iterations", 0);
        s.converged = j.value("converged", true);
        s.residual = j.value("residual", 0.0);
        return s;
      }
      case Kind::NodeSet: {
        auto keys = j.at("nodes").get<std::vector<std::string>>();
        algo::NodeSet s;
        s.universe = detail::key_universe(keys);
        for (std::uint32_t i = 0; i < keys.size(); ++i) s.ids.push_back(i);
        return s;
      }
      case Kind::CycleSet: {
        detail::KeyInterner intern;
        algo::CycleSet cs;
        cs.truncated = j.value("truncated", false);
        for (const auto& jc : j.at("cycles")) {
          algo::Cycle c;
          for (const auto& k : jc.at("nodes")) c.nodes.push_back(intern(k.get<std::string>()));
          if (jc.contains("min_weight")) c.min_weight = jc.at("min_weight").get<double>();
          if (jc.contains("total_flow")) c.total_flow = jc.at("total_flow").get<double>();
          cs.cycles.push_back(std::move(c));
        }
        cs.universe = detail::key_universe(intern.keys);
        return cs;
      }
      case Kind::Table: {
        Table t;
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& jr : j.at("rows")) {
          std::vector<Cell> row;
          for (const auto& c : jr) row.push_back(c.is_string() ? Cell(c.get<std::string>()) : Cell(c.get<double>()));
          if (row.size() != t.columns.size()) fail(ErrorCode::SchemaViolation, "table row width mismatch");
          t.rows.push_back(std::move(row));
        }
        return t;
      }
      case Kind::Scalar:
        return Scalar{j.at("value")};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("malformed value: ") + e.what());
  }
  fail(ErrorCode::SchemaViolation, "malformed value");
}

// ---------------------------------------------------------------------------
// Resolving node references against a graph

/// Ids of `keys` in `g`'s universe; InvalidNode names the first unknown key.
inline std::vector<std::uint32_t> resolve_keys(const graph::CsrGraph& g, const std::vector<std::string>& keys) {
  std::unordered_map<std::string_view, std::uint32_t> index;
  if (g.universe)
    for (std::uint32_t i = 0; i < g.universe->keys.size(); ++i) index.emplace(g.universe->keys[i], i);
  std::vector<std::uint32_t> out;
  for (const auto& k : keys) {
    auto it = index.find(k);
    if (it == index.end()) fail(ErrorCode::InvalidNode, "node '" + k + "' is not in the graph", k);
    out.push_back(it->second);
  }
  return out;
}

/// Node set ids translated into `g`'s id space (identity when they share a universe).
inline std::vector<std::uint32_t> resolve(const graph::CsrGraph& g, const algo::NodeSet& s) {
  if (s.universe == g.universe) return s.ids;
  std::vector<std::string> keys;
  for (auto id : s.ids) keys.push_back(algo::key_of(s.universe, id));
  return resolve_keys(g, keys);
}

inline std::string scalar_text(const Scalar& s) {
  return s.value.is_string() ? s.value.get<std::string>() : dump(s.value);
}

// ---------------------------------------------------------------------------
// Stage inputs built from upstream outputs

/// Node union of a NodeSet or CycleSet as references into the base graph.
inline std::vector<graph::NodeRef> node_refs(const Value& upstream) {
  std::vector<graph::NodeRef> refs;
  graph::UniversePtr u;
  if (auto* ns = std::get_if<algo::NodeSet>(&upstream)) {
    u = ns->universe;
    for (auto id : ns->ids) refs.push_back(u->refs.at(id));
  } else if (auto* cs = std::get_if<algo::CycleSet>(&upstream)) {
    u = cs->universe;
    for (const auto& c : cs->cycles)
      for (auto id : c.nodes) refs.push_back(u->refs.at(id));
  } else {
    fail(ErrorCode::KindMismatch,
         "stage input must come from a NodeSet or CycleSet, got " + std::string(to_string(kind_of(upstream))));
  }
  return refs;
}

inline graph::UniversePtr universe_of(const Value& v) {
  if (auto* ns = std::get_if<algo::NodeSet>(&v)) return ns->universe;
  if (auto* cs = std::get_if<algo::CycleSet>(&v)) return cs->universe;
  if (auto* sc = std::get_if<algo::NodeScores>(&v)) return sc->universe;
  if (auto* g = std::get_if<GraphValue>(&v)) return g->csr->universe;
  return nullptr;
}

/// Induced subgraph of the upstream node set (CycleSets are flattened to
/// their node union) over the relation the upstream stage computed on.
inline graph::StageGraphView materialize_stage_input(const Value& upstream, std::string provenance) {
  auto refs = node_refs(upstream);
  auto u = universe_of(upstream);
  if (!u || !u->base)
    fail(ErrorCode::KindMismatch, "upstream value is not attached to a property graph", provenance);
  return graph::induced_view(u->base, u->relation, std::move(refs), std::move(provenance));
}

// ---------------------------------------------------------------------------
// Output selectors applied along DAG edges

inline const std::set<std::string>& known_selectors() {
  static const std::set<std::string> s{"", "induced_subgraph", "nodes", "top1", "nonempty"};
  return s;
}

/// Kind a selector yields from `producer`, or nullopt when not applicable.
inline std::optional<Kind> selector_kind(Kind producer, const std::string& selector) {
  if (selector.empty()) return producer;
  if (selector == "induced_subgraph" && (producer == Kind::NodeSet || producer == Kind::CycleSet)) return Kind::Graph;
  if (selector == "nodes" && (producer == Kind::NodeSet || producer == Kind::CycleSet)) return Kind::NodeSet;
  if (selector == "top1" && (producer == Kind::NodeScores || producer == Kind::NodeSet)) return Kind::Scalar;
  if (selector == "nonempty") return Kind::Scalar;
  return std::nullopt;
}

inline Value apply_selector(const Value& v, const std::string& selector, const std::string& provenance) {
  if (selector.empty()) return v;
  if (selector == "nonempty") return Scalar{json(item_count(v) > 0)};
  if (selector == "induced_subgraph") {
    auto view = materialize_stage_input(v, provenance);
    const bool weighted = view.base->relation(view.relation).weights.has_value();
    auto csr = graph::to_csr(view, graph::Direction::Out, weighted ? graph::Weighting::Column : graph::Weighting::None);
    return GraphValue{std::make_shared<const graph::CsrGraph>(std::move(csr))};
  }
  if (selector == "nodes") {
    if (auto* cs = std::get_if<algo::CycleSet>(&v)) {
      std::set<std::uint32_t> ids;
      for (const auto& c : cs->cycles) ids.insert(c.nodes.begin(), c.nodes.end());
      return algo::NodeSet{{ids.begin(), ids.end()}, cs->universe};
    }
    if (std::holds_alternative<algo::NodeSet>(v)) return v;
  }
  if (selector == "top1") {
    if (auto* sc = std::get_if<algo::NodeScores>(&v)) {
      if (sc->scores.empty()) return Scalar{json(nullptr)};
      std::uint32_t best = 0;
      for (std::uint32_t i = 1; i < sc->scores.size(); ++i)
        if (sc->scores[i] > sc->scores[best]) best = i;
      return Scalar{json(algo::key_of(sc->universe, best))};
    }
    if (auto* ns = std::get_if<algo::NodeSet>(&v))
      return Scalar{ns->ids.empty() ? json(nullptr) : json(algo::key_of(ns->universe, ns->ids.front()))};
  }
  fail(ErrorCode::KindMismatch,
       "selector '" + selector + "' does not apply to " + std::string(to_string(kind_of(v))), provenance);
}

}  // namespace aag::tools

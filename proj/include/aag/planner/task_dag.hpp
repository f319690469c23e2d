#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/algo/components.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/tools/distill.hpp"
#include "aag/tools/registry.hpp"
#include "aag/tools/value.hpp"

namespace aag::planner {

using tools::Kind;

inline constexpr std::string_view kReportNode = "report";
inline constexpr std::string_view kReportTool = "report";

enum class BindingKind { SourceDataset, StageOutput, Literal };

struct Binding {
  BindingKind kind = BindingKind::Literal;
  std::string ref;       // dataset id or producer node id
  std::string selector;  // StageOutput only
  json literal;

  static Binding source(std::string dataset) { return {BindingKind::SourceDataset, std::move(dataset), {}, nullptr}; }
  static Binding stage(std::string node, std::string selector = {}) {
    return {BindingKind::StageOutput, std::move(node), std::move(selector), nullptr};
  }
  static Binding value(json v) { return {BindingKind::Literal, {}, {}, std::move(v)}; }

  friend bool operator==(const Binding& a, const Binding& b) {
    return a.kind == b.kind && a.ref == b.ref && a.selector == b.selector && a.literal == b.literal;
  }
};

inline json to_json(const Binding& b) {
  switch (b.kind) {
    case BindingKind::SourceDataset: return {{"source", b.ref}};
    case BindingKind::StageOutput: {
      json j = {{"stage", b.ref}};
      if (!b.selector.empty()) j["selector"] = b.selector;
      return j;
    }
    case BindingKind::Literal: return {{"literal", b.literal}};
  }
  return nullptr;
}

inline Binding binding_from_json(const json& j) {
  if (j.contains("source")) return Binding::source(j.at("source").get<std::string>());
  if (j.contains("stage")) return Binding::stage(j.at("stage").get<std::string>(), j.value("selector", ""));
  if (j.contains("literal")) return Binding::value(j.at("literal"));
  fail(ErrorCode::SchemaViolation, "binding needs source, stage or literal: " + dump(j));
}

enum class DepKind { Data, Parameter, Decision };

inline std::string_view to_string(DepKind k) {
  switch (k) {
    case DepKind::Data: return "Data";
    case DepKind::Parameter: return "Parameter";
    case DepKind::Decision: return "Decision";
  }
  return "?";
}

inline DepKind parse_dep_kind(const std::string& s) {
  for (auto k : {DepKind::Data, DepKind::Parameter, DepKind::Decision})
    if (to_string(k) == s) return k;
  fail(ErrorCode::SchemaViolation, "unknown dependency kind '" + s + "'", s);
}

struct DagEdge {
  std::string producer;
  std::string consumer;
  DepKind kind = DepKind::Data;
  friend auto operator<=>(const DagEdge&, const DagEdge&) = default;
};

struct TaskNode {
  std::string id;
  std::string goal;
  std::string tool;
  std::string family;
  std::string algorithm;
  json params = json::object();
  std::map<std::string, Binding> inputs;
  std::optional<Binding> gate;  // Decision dependency; node runs only when it yields true
  std::optional<tools::DistillDirective> directive;
  std::string output_name;
  bool terminal = false;
  bool adapter = false;
};

struct TaskDag {
  std::vector<TaskNode> nodes;
  std::vector<DagEdge> edges;
  std::optional<std::string> focus;

  const TaskNode* find(std::string_view id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
  TaskNode* find(std::string_view id) {
    for (auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }
  const TaskNode* terminal() const {
    for (const auto& n : nodes)
      if (n.terminal) return &n;
    return nullptr;
  }
  /// Non-terminal nodes in declaration order.
  std::vector<const TaskNode*> stages() const {
    std::vector<const TaskNode*> out;
    for (const auto& n : nodes)
      if (!n.terminal) out.push_back(&n);
    return out;
  }
};

// ---------------------------------------------------------------------------
// JSON layout of plan.json's "dag" member

inline json to_json(const TaskNode& n) {
  json inputs = json::object();
  for (const auto& [slot, b] : n.inputs) inputs[slot] = to_json(b);
  json j = {{"id", n.id},         {"goal", n.goal},     {"tool", n.tool},     {"family", n.family},
            {"algorithm", n.algorithm}, {"params", n.params}, {"inputs", inputs}, {"output_name", n.output_name}};
  if (n.gate) j["gate"] = to_json(*n.gate);
  if (n.directive) j["directive"] = tools::to_json(*n.directive);
  if (n.terminal) j["terminal"] = true;
  if (n.adapter) j["adapter"] = true;
  return j;
}

inline json to_json(const TaskDag& dag) {
  json nodes = json::array(), edges = json::array();
  for (const auto& n : dag.nodes) nodes.push_back(to_json(n));
  for (const auto& e : dag.edges)
    edges.push_back({{"from", e.producer}, {"to", e.consumer}, {"kind", to_string(e.kind)}});
  return {{"nodes", nodes}, {"edges", edges}, {"focus", dag.focus ? json(*dag.focus) : json(nullptr)}};
}

inline TaskDag dag_from_json(const json& j) {
  try {
    TaskDag dag;
    for (const auto& jn : j.at("nodes")) {
      TaskNode n;
      n.id = jn.at("id").get<std::string>();
      n.goal = jn.value("goal", "");
      n.tool = jn.value("tool", "");
      n.family = jn.value("family", "");
      n.algorithm = jn.value("algorithm", "");
      n.params = jn.value("params", json::object());
      const json inputs = jn.value("inputs", json::object());
      for (const auto& [slot, b] : inputs.items()) n.inputs[slot] = binding_from_json(b);
      if (jn.contains("gate")) n.gate = binding_from_json(jn["gate"]);
      if (jn.contains("directive")) n.directive = tools::directive_from_json(jn["directive"]);
      n.output_name = jn.value("output_name", "");
      n.terminal = jn.value("terminal", false);
      n.adapter = jn.value("adapter", false);
      dag.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.value("edges", json::array()))
      dag.edges.push_back({je.at("from").get<std::string>(), je.at("to").get<std::string>(),
                           parse_dep_kind(je.at("kind").get<std::string>())});
    if (j.contains("focus") && j["focus"].is_string()) dag.focus = j["focus"].get<std::string>();
    return dag;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("malformed dag: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Edges implied by bindings

/// Output kind of a producer node, or nullopt when unknown.
inline std::optional<Kind> output_kind(const TaskDag& dag, const tools::ToolRegistry& registry,
                                       std::string_view node_id) {
  const auto* n = dag.find(node_id);
  if (!n || n->terminal || !registry.contains(n->tool)) return std::nullopt;
  return registry.describe(n->tool).output_kind;
}

inline std::optional<Kind> binding_kind(const TaskDag& dag, const tools::ToolRegistry& registry, const Binding& b) {
  switch (b.kind) {
    case BindingKind::SourceDataset: return Kind::Graph;
    case BindingKind::Literal: return Kind::Scalar;
    case BindingKind::StageOutput: {
      auto k = output_kind(dag, registry, b.ref);
      if (!k) return std::nullopt;
      return tools::selector_kind(*k, b.selector);
    }
  }
  return std::nullopt;
}

/// Every StageOutput binding induces a Data edge, or a Parameter edge when
/// it carries a scalar; every gate induces a Decision edge.
inline std::vector<DagEdge> derive_edges(const TaskDag& dag, const tools::ToolRegistry& registry) {
  std::set<DagEdge> edges;
  for (const auto& n : dag.nodes) {
    for (const auto& [slot, b] : n.inputs) {
      if (b.kind != BindingKind::StageOutput) continue;
      const auto k = n.terminal ? std::optional<Kind>{} : binding_kind(dag, registry, b);
      edges.insert({b.ref, n.id, k == Kind::Scalar ? DepKind::Parameter : DepKind::Data});
    }
    if (n.gate && n.gate->kind == BindingKind::StageOutput) edges.insert({n.gate->ref, n.id, DepKind::Decision});
  }
  return {edges.begin(), edges.end()};
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string kind;  // CycleViolation, KindMismatch, UnknownTool, UnknownSlot, UnboundSlot, DanglingBinding,
                     // SchemaViolation, ConstraintViolation, EdgeInconsistency, TerminalViolation, DuplicateId
  std::string message;
  std::vector<std::string> nodes;
};

inline json to_json(const Violation& v) { return {{"kind", v.kind}, {"message", v.message}, {"nodes", v.nodes}}; }

struct SourceTraits {
  bool directed = true;
  bool weighted = false;
};

using SourceMap = std::map<std::string, SourceTraits>;

namespace detail {

/// Directedness and weighting of the graph a Graph-valued binding yields,
/// when it can be known before execution.
inline std::optional<SourceTraits> graph_traits(const TaskDag& dag, const Binding& b, const SourceMap* sources,
                                                int depth = 0) {
  if (depth > static_cast<int>(dag.nodes.size())) return std::nullopt;
  if (b.kind == BindingKind::SourceDataset) {
    if (!sources) return std::nullopt;
    auto it = sources->find(b.ref);
    return it == sources->end() ? std::nullopt : std::optional(it->second);
  }
  if (b.kind == BindingKind::StageOutput && b.selector == "induced_subgraph") {
    const auto* producer = dag.find(b.ref);
    if (!producer) return std::nullopt;
    auto g = producer->inputs.find("graph");
    if (g == producer->inputs.end()) return std::nullopt;
    return graph_traits(dag, g->second, sources, depth + 1);
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks a DAG and returns every violation found (empty = valid). Shares
/// the registry's parameter, kind and constraint checks.
inline std::vector<Violation> validate_dag(const TaskDag& dag, const tools::ToolRegistry& registry,
                                           const SourceMap* sources = nullptr) {
  std::vector<Violation> out;
  auto add = [&](std::string kind, std::string msg, std::vector<std::string> nodes) {
    out.push_back({std::move(kind), std::move(msg), std::move(nodes)});
  };

  std::map<std::string, int> seen;
  for (const auto& n : dag.nodes) ++seen[n.id];
  for (const auto& [id, count] : seen)
    if (count > 1) add("DuplicateId", "node id '" + id + "' is used " + std::to_string(count) + " times", {id});

  std::vector<std::string> terminals;
  for (const auto& n : dag.nodes)
    if (n.terminal) terminals.push_back(n.id);
  if (terminals.size() != 1)
    add("TerminalViolation", "expected exactly one terminal report node, found " + std::to_string(terminals.size()),
        terminals);

  auto check_binding_ref = [&](const TaskNode& n, const Binding& b, const std::string& where) {
    if (b.kind == BindingKind::StageOutput) {
      const auto* producer = dag.find(b.ref);
      if (!producer) {
        add("DanglingBinding", n.id + "." + where + " refers to missing node '" + b.ref + "'", {n.id});
        return false;
      }
      if (producer->terminal) {
        add("TerminalViolation", n.id + "." + where + " consumes the terminal node", {n.id, b.ref});
        return false;
      }
      if (!tools::known_selectors().count(b.selector)) {
        add("KindMismatch", n.id + "." + where + " uses unknown selector '" + b.selector + "'", {n.id});
        return false;
      }
    } else if (b.kind == BindingKind::SourceDataset && sources && !sources->count(b.ref)) {
      add("DanglingBinding", n.id + "." + where + " refers to unknown dataset '" + b.ref + "'", {n.id});
      return false;
    }
    return true;
  };

  for (const auto& n : dag.nodes) {
    if (n.terminal) {
      for (const auto& [slot, b] : n.inputs) check_binding_ref(n, b, slot);
      continue;
    }
    if (!registry.contains(n.tool)) {
      add("UnknownTool", n.id + " uses unregistered tool '" + n.tool + "'", {n.id});
      continue;
    }
    const auto& d = registry.describe(n.tool);
    try {
      tools::check_params(d, n.params);
    } catch (const Error& e) {
      add("SchemaViolation", n.id + ": " + e.detail(), {n.id});
    }
    std::set<std::string> bound;
    for (const auto& [slot, b] : n.inputs) {
      bound.insert(slot);
      const auto* s = d.slot(slot);
      if (!s) {
        add("UnknownSlot", n.id + " binds slot '" + slot + "' which " + n.tool + " does not declare", {n.id});
        continue;
      }
      if (!check_binding_ref(n, b, slot)) continue;
      const auto k = binding_kind(dag, registry, b);
      if (!k) {
        const auto producer_kind = output_kind(dag, registry, b.ref);
        add("KindMismatch",
            n.id + "." + slot + ": selector '" + b.selector + "' does not apply to " +
                (producer_kind ? std::string(tools::to_string(*producer_kind)) : std::string("an unknown kind")),
            {b.ref, n.id});
        continue;
      }
      if (*k != s->kind) {
        add("KindMismatch",
            n.id + "." + slot + " expects " + std::string(tools::to_string(s->kind)) + " but receives " +
                std::string(tools::to_string(*k)) + (b.kind == BindingKind::StageOutput ? " from " + b.ref : ""),
            b.kind == BindingKind::StageOutput ? std::vector<std::string>{b.ref, n.id} : std::vector<std::string>{n.id});
        continue;
      }
      if (s->kind == Kind::Graph)
        if (auto traits = detail::graph_traits(dag, b, sources)) try {
            tools::check_constraints(d, slot, traits->directed, traits->weighted);
          } catch (const Error& e) {
            add("ConstraintViolation", n.id + ": " + e.detail(), {n.id});
          }
    }
    for (const auto& s : d.inputs)
      if (s.required && !bound.count(s.name))
        add("UnboundSlot", n.id + ": required slot '" + s.name + "' of " + n.tool + " is not bound", {n.id});
    if (n.gate && check_binding_ref(n, *n.gate, "gate")) {
      const auto k = binding_kind(dag, registry, *n.gate);
      if (k != Kind::Scalar) add("KindMismatch", n.id + ".gate must yield a Scalar", {n.id});
    }
  }

  // Declared edges must match the bindings.
  const auto derived = derive_edges(dag, registry);
  std::set<DagEdge> declared(dag.edges.begin(), dag.edges.end());
  std::set<DagEdge> implied(derived.begin(), derived.end());
  for (const auto& e : implied)
    if (!declared.count(e))
      add("EdgeInconsistency",
          "binding implies " + std::string(to_string(e.kind)) + " edge " + e.producer + " -> " + e.consumer +
              " which is not declared",
          {e.producer, e.consumer});
  for (const auto& e : declared)
    if (!implied.count(e))
      add("EdgeInconsistency",
          "declared " + std::string(to_string(e.kind)) + " edge " + e.producer + " -> " + e.consumer +
              " has no matching binding",
          {e.producer, e.consumer});
  for (const auto& id : terminals)
    for (const auto& e : declared)
      if (e.producer == id) add("TerminalViolation", "terminal node " + id + " has a consumer", {id, e.consumer});

  // One CycleViolation per strongly connected component with a cycle.
  std::map<std::string, std::uint32_t> index;
  for (const auto& [id, _] : seen) index.emplace(id, static_cast<std::uint32_t>(index.size()));
  std::vector<graph::WeightedEdge> arcs;
  std::set<std::string> self_loops;
  std::set<DagEdge> all = declared;
  all.insert(implied.begin(), implied.end());
  for (const auto& e : all) {
    auto p = index.find(e.producer), c = index.find(e.consumer);
    if (p == index.end() || c == index.end()) continue;
    arcs.push_back({p->second, c->second, 1.0});
    if (p->second == c->second) self_loops.insert(e.producer);
  }
  const auto g = graph::build_csr(static_cast<std::uint32_t>(index.size()), arcs, graph::Direction::Out,
                                  graph::Weighting::None);
  const auto label = algo::detail::strong_components(g);
  std::map<std::uint32_t, std::vector<std::string>> members;
  for (const auto& [id, i] : index) members[label[i]].push_back(id);
  for (auto& [_, ids] : members)
    if (ids.size() > 1 || self_loops.count(ids.front()))
      add("CycleViolation", "dependency cycle among " + text::join(ids, ", "), ids);
  return out;
}

inline std::string describe(const std::vector<Violation>& vs) {
  std::vector<std::string> parts;
  for (const auto& v : vs) parts.push_back(v.kind + ": " + v.message);
  return text::join(parts, "; ");
}

/// Kahn's algorithm with the ready set ordered by node id. Edges come from
/// the declared edge list plus every StageOutput and gate reference.
inline std::vector<std::string> topological_order(const TaskDag& dag) {
  std::map<std::string, std::set<std::string>> consumers;
  std::map<std::string, int> indegree;
  for (const auto& n : dag.nodes) indegree.emplace(n.id, 0);
  auto link = [&](const std::string& p, const std::string& c) {
    if (!indegree.count(p) || !indegree.count(c)) return;
    if (consumers[p].insert(c).second) ++indegree[c];
  };
  for (const auto& e : dag.edges) link(e.producer, e.consumer);
  for (const auto& n : dag.nodes) {
    for (const auto& [_, b] : n.inputs)
      if (b.kind == BindingKind::StageOutput) link(b.ref, n.id);
    if (n.gate && n.gate->kind == BindingKind::StageOutput) link(n.gate->ref, n.id);
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const auto& c : consumers[id])
      if (--indegree[c] == 0) ready.insert(c);
  }
  if (order.size() != indegree.size()) {
    std::vector<std::string> stuck;
    for (const auto& [id, d] : indegree)
      if (d > 0) stuck.push_back(id);
    fail(ErrorCode::CyclicDag, "dependency cycle among " + text::join(stuck, ", "), stuck.front());
  }
  return order;
}

}  // namespace aag::planner

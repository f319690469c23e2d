#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aag/coordinator/coordinator.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/kb/knowledge_base.hpp"
#include "aag/planner/task_dag.hpp"
#include "aag/tools/registry.hpp"

namespace aag::planner {

inline constexpr int kDefaultMaxRounds = 3;

struct PlanContext {
  json catalog = json::array();  // SourceCatalog::describe()
  graph::SchemaSpec schema;
  SourceMap sources;             // relation label -> traits
  int retrieval_k = 4;
  tools::Budget budget;
  std::filesystem::path run_dir;  // where expansion requests are appended
};

struct CandidateTrace {
  std::string algorithm;
  double score = 0.0;
  std::vector<std::string> trail;
  std::string tool;
  std::string verdict;  // "chosen" or the reason for rejection
};

struct StageTrace {
  std::string stage_id;
  std::string goal;
  std::string suggested_family;
  std::string query;
  std::vector<std::string> selected_families;
  std::vector<CandidateTrace> candidates;
  std::string chosen_tool;
  std::string chosen_algorithm;
  std::vector<std::string> trail;
};

struct PlanTrace {
  std::string query;
  std::string coordinator;
  json coordinator_reply;
  json transcript = json::array();
  std::vector<StageTrace> stages;
};

inline json to_json(const PlanTrace& t) {
  json stages = json::array();
  for (const auto& s : t.stages) {
    json cands = json::array();
    for (const auto& c : s.candidates)
      cands.push_back({{"algorithm", c.algorithm}, {"score", c.score}, {"trail", c.trail}, {"tool", c.tool},
                       {"verdict", c.verdict}});
    stages.push_back({{"stage", s.stage_id},
                      {"goal", s.goal},
                      {"suggested_family", s.suggested_family},
                      {"query", s.query},
                      {"selected_families", s.selected_families},
                      {"candidates", cands},
                      {"chosen_tool", s.chosen_tool},
                      {"chosen_algorithm", s.chosen_algorithm},
                      {"trail", s.trail}});
  }
  return {{"query", t.query}, {"coordinator", t.coordinator}, {"coordinator_reply", t.coordinator_reply},
          {"stages", stages}};
}

struct PlanResult {
  TaskDag dag;
  PlanTrace trace;
};

namespace detail {

inline std::string stage_id(std::size_t i) { return "s" + std::to_string(i + 1); }

/// Why `tool` cannot serve a stage with the given bindings and params, or
/// empty when it can.
inline std::string rejection(const tools::ToolDescriptor& d, const std::map<std::string, Binding>& inputs,
                             const json& params) {
  std::set<std::string> bound;
  for (const auto& [slot, b] : inputs) {
    const auto* s = d.slot(slot);
    if (!s) return "no input slot '" + slot + "'";
    if (b.kind == BindingKind::Literal && s->kind != Kind::Scalar) return "slot '" + slot + "' is not a scalar";
    if (b.kind == BindingKind::SourceDataset && s->kind != Kind::Graph) return "slot '" + slot + "' is not a graph";
    bound.insert(slot);
  }
  for (const auto& s : d.inputs)
    if (s.required && !bound.count(s.name)) return "required slot '" + s.name + "' unbound";
  try {
    tools::check_params(d, params);
  } catch (const Error& e) {
    return e.detail();
  }
  return {};
}

inline json families_excerpt(const kb::KnowledgeGraph& kg) {
  json out = json::array();
  for (const auto& f : kg.ids_at(kb::Level::Family)) {
    const auto& n = kg.node(f);
    out.push_back({{"id", f}, {"name", n.name}, {"summary", n.summary}});
  }
  return out;
}

}  // namespace detail

/// Builds a validated task DAG for `query`. `trace` is filled as planning
/// proceeds, so it is usable even when planning fails.
inline TaskDag plan(std::string_view query, const kb::KnowledgeGraph& kg, const tools::ToolRegistry& registry,
                    coord::Coordinator& coordinator, const PlanContext& ctx, PlanTrace& trace) {
  if (registry.size() == 0) fail(ErrorCode::PlanningFailed, "tool registry is empty");
  trace.query = std::string(query);
  trace.coordinator = coordinator.name();

  coord::CoordinatorResponse resp;
  try {
    resp = coordinator.complete({coord::Role::Plan,
                                 {{"query", query},
                                  {"catalog", ctx.catalog},
                                  {"schema", graph::to_json(ctx.schema)},
                                  {"families", detail::families_excerpt(kg)}}});
  } catch (const coord::CoordinatorError& e) {
    trace.transcript = e.transcript();
    throw Error(ErrorCode::PlanningFailed, "coordinator plan invalid after retry: " + e.detail());
  }
  trace.transcript = resp.transcript;
  trace.coordinator_reply = resp.value;

  TaskDag dag;
  if (resp.value.contains("focus") && resp.value["focus"].is_string()) dag.focus = resp.value["focus"].get<std::string>();

  const auto& stages = resp.value["stages"];
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    TaskNode node;
    node.id = detail::stage_id(i);
    node.goal = s["goal"].get<std::string>();
    node.family = s["suggested_family"].get<std::string>();
    for (const auto& [slot, b] : s["bindings"].items()) node.inputs[slot] = binding_from_json(b);
    if (s.contains("gate")) node.gate = binding_from_json(s["gate"]);
    const json given = s.value("params", json::object());

    StageTrace st;
    st.stage_id = node.id;
    st.goal = node.goal;
    st.suggested_family = node.family;
    const auto family_name = kg.contains(node.family) ? kg.node(node.family).name : node.family;
    st.query = node.goal + " " + family_name;

    const auto found = kb::retrieve(kg, st.query, ctx.retrieval_k);
    st.selected_families = found.selected_families;
    for (const auto& c : found.candidates) {
      CandidateTrace ct{c.id, c.score, c.trail, {}, {}};
      const auto& alg = kg.node(c.id);
      auto t = alg.attributes.find("tool");
      if (t == alg.attributes.end()) {
        ct.verdict = "no tool implements this algorithm";
      } else if (ct.tool = t->second; !registry.contains(ct.tool)) {
        ct.verdict = "tool not registered";
      } else if (c.trail.size() < 2 || c.trail[1] != node.family) {
        ct.verdict = "outside suggested family " + node.family;
      } else if (!st.chosen_tool.empty()) {
        ct.verdict = "lower ranked";
      } else if (auto why = detail::rejection(registry.describe(ct.tool), node.inputs, given); !why.empty()) {
        ct.verdict = why;
      } else {
        ct.verdict = "chosen";
        st.chosen_tool = ct.tool;
        st.chosen_algorithm = c.id;
        st.trail = c.trail;
        st.trail.push_back(c.id);
      }
      st.candidates.push_back(std::move(ct));
    }
    trace.stages.push_back(st);

    if (st.chosen_tool.empty()) {
      kb::expand_stub(kg, st.query, node.id, ctx.run_dir);
      std::vector<std::string> considered;
      for (const auto& c : st.candidates) considered.push_back(c.algorithm + " (" + c.verdict + ")");
      fail(ErrorCode::NoToolForStage,
           "stage " + node.id + " '" + node.goal + "': no usable tool among candidates [" +
               text::join(considered, ", ") + "]",
           node.id);
    }
    const auto& d = registry.describe(st.chosen_tool);
    node.tool = st.chosen_tool;
    node.algorithm = st.chosen_algorithm;
    node.params = tools::check_params(d, given);
    if (s.contains("directive")) {
      node.directive = tools::directive_from_json(s["directive"]);
    } else {
      node.directive = tools::default_directive(d.output_kind);
      node.directive->budget = ctx.budget;
    }
    node.output_name = node.id + "." + tools::to_string(d.output_kind).data();
    dag.nodes.push_back(std::move(node));
  }

  TaskNode report;
  report.id = std::string(kReportNode);
  report.goal = "Assemble the report";
  report.tool = std::string(kReportTool);
  report.terminal = true;
  for (const auto* s : dag.stages()) report.inputs[s->id] = Binding::stage(s->id);
  dag.nodes.push_back(std::move(report));
  dag.edges = derive_edges(dag, registry);

  if (auto vs = validate_dag(dag, registry, &ctx.sources); !vs.empty())
    fail(ErrorCode::PlanningFailed, "planned DAG is invalid: " + describe(vs));
  return dag;
}

inline PlanResult plan(std::string_view query, const kb::KnowledgeGraph& kg, const tools::ToolRegistry& registry,
                       coord::Coordinator& coordinator, const PlanContext& ctx) {
  PlanResult r;
  r.dag = plan(query, kg, registry, coordinator, ctx, r.trace);
  return r;
}

// ---------------------------------------------------------------------------
// Refinement

enum class Outcome { Error, LowQuality, Ok };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Error: return "Error";
    case Outcome::LowQuality: return "LowQuality";
    case Outcome::Ok: return "Ok";
  }
  return "?";
}

struct ExecutionFeedback {
  std::string node_id;
  Outcome outcome = Outcome::Ok;
  json detail = json::object();

  static ExecutionFeedback ok(std::string node) { return {std::move(node), Outcome::Ok, json::object()}; }
  static ExecutionFeedback low_quality(std::string node, const std::string& metric, json value) {
    return {std::move(node), Outcome::LowQuality, {{"metrics", {{metric, std::move(value)}}}}};
  }
  /// Error feedback classified from a tool failure. Parameter range problems
  /// (invalid parameter values and length bounds) become ParameterOutOfRange.
  static ExecutionFeedback error(std::string node, const Error& e) {
    json d = {{"error", to_string(e.code())}, {"message", e.detail()}};
    if (e.has_cause()) d["cause"] = to_string(e.cause());
    const auto c = e.cause();
    const bool param_problem = c == ErrorCode::LengthBoundError ||
                               (c == ErrorCode::SchemaViolation && !e.subject().empty());
    d["error_class"] = param_problem ? "ParameterOutOfRange" : std::string(to_string(c));
    if (!e.subject().empty()) d["param"] = e.subject();
    return {std::move(node), Outcome::Error, std::move(d)};
  }
};

inline json to_json(const ExecutionFeedback& f) {
  return {{"node_id", f.node_id}, {"outcome", to_string(f.outcome)}, {"detail", f.detail}};
}

struct RefineResult {
  TaskDag dag;
  std::set<std::string> accepted;             // LowQuality results kept as they are
  std::map<std::string, std::string> failed;  // node -> reason; no fix proposed
  std::map<std::string, std::string> renamed;  // old id -> new id
  json actions = json::array();
  json transcript = json::array();
};

namespace detail {

inline std::string base_id(const std::string& id) {
  auto pos = id.rfind("_r");
  if (pos != std::string::npos && pos + 2 < id.size() &&
      id.find_first_not_of("0123456789", pos + 2) == std::string::npos)
    return id.substr(0, pos);
  return id;
}

inline void rebind(TaskDag& dag, const std::string& from, const std::string& to) {
  for (auto& n : dag.nodes) {
    for (auto& [_, b] : n.inputs)
      if (b.kind == BindingKind::StageOutput && b.ref == from) b.ref = to;
    if (n.gate && n.gate->kind == BindingKind::StageOutput && n.gate->ref == from) n.gate->ref = to;
    if (n.terminal) {
      auto it = n.inputs.find(from);
      if (it != n.inputs.end()) {
        auto b = it->second;
        n.inputs.erase(it);
        n.inputs[to] = b;
      }
    }
  }
}

}  // namespace detail

/// Revises `dag` from execution feedback. Only flagged nodes change; a
/// changed node gets the id `<base>_r<round+1>` so outputs already stored
/// under the old id stay immutable, and its consumers are rebound.
inline RefineResult refine(const TaskDag& dag, const std::vector<ExecutionFeedback>& feedback,
                           const kb::KnowledgeGraph& kg, const tools::ToolRegistry& registry,
                           coord::Coordinator& coordinator, int round, const SourceMap* sources = nullptr,
                           int max_rounds = kDefaultMaxRounds) {
  if (round >= max_rounds)
    fail(ErrorCode::RefinementExhausted,
         "refinement round " + std::to_string(round + 1) + " exceeds the limit of " + std::to_string(max_rounds));
  RefineResult out;
  out.dag = dag;

  std::set<std::string> flagged;
  json fb = json::array();
  for (const auto& f : feedback) {
    if (f.outcome == Outcome::LowQuality && (!f.detail.contains("metrics") || f.detail["metrics"].empty()))
      fail(ErrorCode::PlanningFailed, "LowQuality feedback for " + f.node_id + " names no metric", f.node_id);
    if (f.outcome != Outcome::Ok) flagged.insert(f.node_id);
    fb.push_back(to_json(f));
  }
  if (flagged.empty()) return out;

  json tool_info = json::object();
  for (const auto& id : flagged) {
    const auto* n = dag.find(id);
    if (!n || !registry.contains(n->tool)) continue;
    tool_info[n->tool] = tools::to_json(registry.describe(n->tool));
    json variants = json::array();
    for (const auto& v : kg.contains(n->algorithm) ? kg.variants_of(n->algorithm) : std::vector<std::string>{}) {
      const auto& attrs = kg.node(v).attributes;
      if (auto t = attrs.find("tool"); t != attrs.end() && registry.contains(t->second)) {
        variants.push_back(t->second);
        tool_info[t->second] = tools::to_json(registry.describe(t->second));
      }
    }
    tool_info[n->tool]["variants"] = variants;
  }

  coord::CoordinatorResponse resp;
  try {
    resp = coordinator.complete(
        {coord::Role::Refine, {{"round", round}, {"dag", to_json(dag)}, {"feedback", fb}, {"tools", tool_info}}});
  } catch (const coord::CoordinatorError& e) {
    throw Error(ErrorCode::PlanningFailed, "coordinator refinement invalid after retry: " + e.detail());
  }
  out.transcript = resp.transcript;
  out.actions = resp.value["actions"];

  std::set<std::string> changed;
  auto& work = out.dag;
  for (const auto& a : out.actions) {
    const auto op = a["op"].get<std::string>();
    const auto id = a["node"].get<std::string>();
    auto* n = work.find(id);
    if (!n) fail(ErrorCode::PlanningFailed, "refine action " + op + " targets unknown node " + id, id);
    if (op != "remove_adapter" && !flagged.count(id))
      fail(ErrorCode::PlanningFailed, "refine action " + op + " targets " + id + ", which has no feedback", id);

    if (op == "accept") {
      out.accepted.insert(id);
    } else if (op == "fail") {
      out.failed[id] = a.value("reason", "no fix proposed");
    } else if (op == "set_param" || op == "reset_param") {
      const auto& d = registry.describe(n->tool);
      const auto param = a["param"].get<std::string>();
      const auto* spec = d.param(param);
      if (!spec) fail(ErrorCode::PlanningFailed, n->tool + " has no parameter '" + param + "'", id);
      json params = n->params;
      if (op == "set_param") params[param] = a["value"];
      else if (spec->default_value) params[param] = *spec->default_value;
      else params.erase(param);
      try {
        n->params = tools::check_params(d, params);
      } catch (const Error& e) {
        throw Error(ErrorCode::PlanningFailed, "refined parameters invalid: " + e.detail(), id);
      }
      changed.insert(id);
    } else if (op == "substitute") {
      const auto tool = a["tool"].get<std::string>();
      std::string variant;
      for (const auto& v : kg.contains(n->algorithm) ? kg.variants_of(n->algorithm) : std::vector<std::string>{}) {
        auto t = kg.node(v).attributes.find("tool");
        if (t != kg.node(v).attributes.end() && t->second == tool) variant = v;
      }
      if (variant.empty() || !registry.contains(tool))
        fail(ErrorCode::PlanningFailed, tool + " is not a registered variant of " + n->algorithm, id);
      const auto& d = registry.describe(tool);
      json kept = json::object();
      for (const auto& [k, v] : n->params.items())
        if (d.param(k)) kept[k] = v;
      n->tool = tool;
      n->algorithm = variant;
      n->params = tools::check_params(d, kept);
      changed.insert(id);
    } else if (op == "insert_adapter") {
      const auto slot = a["slot"].get<std::string>();
      const auto tool = a["tool"].get<std::string>();
      auto it = n->inputs.find(slot);
      if (it == n->inputs.end() || !registry.contains(tool))
        fail(ErrorCode::PlanningFailed, "cannot insert " + tool + " before " + id + "." + slot, id);
      const auto& d = registry.describe(tool);
      TaskNode adapter;
      adapter.id = detail::base_id(id) + "_a" + std::to_string(round + 1);
      adapter.goal = "Adapt input '" + slot + "' of " + id;
      adapter.tool = tool;
      adapter.family = d.family;
      adapter.algorithm = d.algorithm;
      adapter.params = tools::check_params(d, a.value("params", json::object()));
      adapter.adapter = true;
      adapter.directive = tools::default_directive(d.output_kind);
      const auto* first = d.inputs.empty() ? nullptr : &d.inputs.front();
      if (!first) fail(ErrorCode::PlanningFailed, tool + " takes no input", id);
      adapter.inputs[first->name] = it->second;
      adapter.output_name = adapter.id + "." + tools::to_string(d.output_kind).data();
      it->second = Binding::stage(adapter.id);
      changed.insert(id);
      work.nodes.insert(work.nodes.end() - 1, std::move(adapter));
    } else if (op == "remove_adapter") {
      if (!n->adapter) fail(ErrorCode::PlanningFailed, id + " is not an adapter", id);
      const auto replacement = n->inputs.begin()->second;
      for (auto& c : work.nodes) {
        if (c.terminal) continue;
        for (auto& [_, b] : c.inputs)
          if (b.kind == BindingKind::StageOutput && b.ref == id) {
            if (!flagged.count(c.id)) fail(ErrorCode::PlanningFailed, "adapter " + id + " feeds unflagged " + c.id, id);
            b = replacement;
            changed.insert(c.id);
          }
      }
      std::erase_if(work.nodes, [&](const TaskNode& x) { return x.id == id; });
      if (auto* term = const_cast<TaskNode*>(work.terminal())) term->inputs.erase(id);
    }
  }

  for (const auto& id : changed) {
    if (out.failed.count(id)) continue;
    const auto fresh = detail::base_id(id) + "_r" + std::to_string(round + 1);
    work.find(id)->id = fresh;
    if (auto* term = const_cast<TaskNode*>(work.terminal()); term && term->inputs.count(id)) {
      term->inputs.erase(id);
      term->inputs[fresh] = Binding::stage(fresh);
    }
    detail::rebind(work, id, fresh);
    out.renamed[id] = fresh;
  }
  for (const auto* n : work.stages())
    if (n->adapter)
      if (auto* term = const_cast<TaskNode*>(work.terminal()); term && !term->inputs.count(n->id))
        term->inputs[n->id] = Binding::stage(n->id);

  work.edges = derive_edges(work, registry);
  if (auto vs = validate_dag(work, registry, sources); !vs.empty())
    fail(ErrorCode::PlanningFailed, "refined DAG is invalid: " + describe(vs));
  return out;
}

}  // namespace aag::planner

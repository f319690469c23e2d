#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/graph/csr.hpp"
#include "aag/pipeline/config.hpp"
#include "aag/pipeline/stage_store.hpp"
#include "aag/planner/planner.hpp"
#include "aag/tools/distill.hpp"
#include "aag/tools/registry.hpp"

namespace aag::pipeline {

using planner::Binding;
using planner::BindingKind;
using planner::ExecutionFeedback;
using planner::TaskDag;
using planner::TaskNode;

/// Execution graphs of every relation in the property graph, built once per
/// run. Weighted relations keep their weight column.
inline std::map<std::string, tools::Value> source_graphs(const std::shared_ptr<const graph::PropertyGraph>& pg) {
  std::map<std::string, tools::Value> out;
  for (const auto& rel : pg->edges) {
    const auto w = rel.weights ? graph::Weighting::Column : graph::Weighting::None;
    out[rel.label] =
        tools::GraphValue{std::make_shared<const graph::CsrGraph>(graph::to_csr(pg, rel.label, graph::Direction::Out, w))};
  }
  return out;
}

inline planner::SourceMap source_traits(const graph::PropertyGraph& pg) {
  planner::SourceMap out;
  for (const auto& rel : pg.edges) out[rel.label] = {rel.directed, rel.weights.has_value()};
  return out;
}

struct ExecContext {
  const tools::ToolRegistry* registry = nullptr;
  std::map<std::string, tools::Value> sources;
  int width = 1;
  std::vector<FaultSpec> faults;  // remaining injections, consumed as they fire
  RunLog* log = nullptr;
};

/// What one execute_dag pass left unresolved.
struct ExecReport {
  std::vector<ExecutionFeedback> feedback;  // non-Ok outcomes of nodes run in this pass
  std::vector<std::string> executed;        // in store order
  std::vector<std::string> blocked;         // waiting on flagged producers
};

/// Nodes whose outcome was not Ok, and the LowQuality ones refinement kept.
/// Carried across refinement rounds.
struct Verdicts {
  std::set<std::string> flagged;
  std::set<std::string> accepted;
};

namespace detail {

inline std::vector<std::string> producers(const TaskNode& n) {
  std::set<std::string> out;
  for (const auto& [_, b] : n.inputs)
    if (b.kind == BindingKind::StageOutput) out.insert(b.ref);
  if (n.gate && n.gate->kind == BindingKind::StageOutput) out.insert(n.gate->ref);
  return {out.begin(), out.end()};
}

inline tools::Value materialize(const Binding& b, const ExecContext& ctx, const StageStore& store) {
  switch (b.kind) {
    case BindingKind::SourceDataset: {
      auto it = ctx.sources.find(b.ref);
      if (it == ctx.sources.end()) fail(ErrorCode::UnknownRelation, "no source relation " + b.ref, b.ref);
      return it->second;
    }
    case BindingKind::StageOutput: {
      auto rec = store.get(b.ref);
      if (!rec || !rec->raw) fail(ErrorCode::KindMismatch, "stage " + b.ref + " has no output", b.ref);
      return tools::apply_selector(rec->raw->value, b.selector, b.ref);
    }
    case BindingKind::Literal: return tools::Scalar{b.literal};
  }
  return tools::Scalar{};
}

inline bool truthy(const tools::Value& v) {
  const auto* s = std::get_if<tools::Scalar>(&v);
  if (!s) return tools::item_count(v) > 0;
  const auto& j = s->value;
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>() != 0.0;
  if (j.is_string()) return !j.get<std::string>().empty();
  return !j.is_null();
}

inline std::string gate_text(const Binding& g) {
  return g.kind == BindingKind::StageOutput ? g.ref + (g.selector.empty() ? "" : "." + g.selector) : dump(to_json(g));
}

/// Runs one node: inputs, invocation, distillation. Never throws for tool
/// failures; they come back as an Error record.
inline StageOutput run_node(const TaskNode& n, const ExecContext& ctx, const StageStore& store,
                            const FaultSpec* fault) {
  StageOutput out;
  out.id = n.id;
  out.tool = n.tool;
  out.params = n.params;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (fault) {
      if (fault->error_class == "ParameterOutOfRange")
        throw Error(ErrorCode::ExecutorError, n.tool + ": injected fault: parameter out of range", fault->param,
                    ErrorCode::SchemaViolation);
      throw Error(ErrorCode::ExecutorError, n.tool + ": injected fault: " + fault->error_class, {},
                  ErrorCode::ExecutorError);
    }
    tools::InvocationRequest req{n.tool, {}, n.params};
    for (const auto& [slot, b] : n.inputs) req.inputs[slot] = materialize(b, ctx, store);
    auto raw = ctx.registry->invoke(req);
    auto dir = n.directive ? *n.directive : tools::default_directive(raw.kind);
    out.distilled = tools::distill(raw.value, dir, n.tool);
    out.params = raw.params;
    out.raw = std::move(raw);
    out.status = StageStatus::Ok;
  } catch (const Error& e) {
    out.status = StageStatus::Error;
    out.raw.reset();
    out.distilled.reset();
    out.error = {{"error", to_string(e.code())}, {"message", e.detail()}, {"subject", e.subject()}};
    if (e.has_cause()) out.error["cause"] = to_string(e.cause());
  }
  out.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline Error error_of(const StageOutput& s) {
  const auto code = s.error.value("error", "ExecutorError");
  const auto cause = s.error.value("cause", "");
  auto parse = [](const std::string& name) {
    for (int c = 0; c <= static_cast<int>(ErrorCode::WriteOnceViolation); ++c)
      if (to_string(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
    return ErrorCode::ExecutorError;
  };
  const auto msg = s.error.value("message", "");
  const auto subject = s.error.value("subject", "");
  if (cause.empty()) return Error(parse(code), msg, subject);
  return Error(parse(code), msg, subject, parse(cause));
}

}  // namespace detail

/// Executes every runnable, not yet stored node of `dag`. A node runs once
/// all producers are stored Ok and unflagged (or flagged but accepted); a
/// Skipped producer or a false gate skips it.
/// Ready nodes run in id order, up to `ctx.width` at a time; results are
/// stored in id order, so the store is the same for every width.
inline ExecReport execute_dag(const TaskDag& dag, ExecContext& ctx, StageStore& store, Verdicts& verdicts) {
  ExecReport report;

  for (;;) {
    report.blocked.clear();
    std::vector<const TaskNode*> ready;
    std::vector<StageOutput> skipped;
    for (const auto* n : dag.stages()) {
      if (store.contains(n->id)) continue;
      bool waiting = false, blocked = false;
      std::string skip;
      for (const auto& p : detail::producers(*n)) {
        auto rec = store.get(p);
        if (!rec) {
          waiting = true;
        } else if (rec->status == StageStatus::Skipped) {
          skip = "producer " + p + " was skipped";
        } else if (rec->status == StageStatus::Error || (verdicts.flagged.count(p) && !verdicts.accepted.count(p))) {
          blocked = true;
        }
      }
      if (blocked) {
        if (!waiting) report.blocked.push_back(n->id);
        continue;
      }
      if (waiting) continue;
      if (skip.empty() && n->gate) {
        auto g = detail::materialize(*n->gate, ctx, store);
        if (!detail::truthy(g)) {
          auto producer = n->gate->kind == BindingKind::StageOutput ? store.get(n->gate->ref) : nullptr;
          skip = "gate " + detail::gate_text(*n->gate) + " is false";
          if (producer && producer->distilled)
            skip += " (" + producer->distilled->summary_text.substr(0, producer->distilled->summary_text.find('\n')) + ")";
        }
      }
      if (!skip.empty()) {
        StageOutput s;
        s.id = n->id;
        s.tool = n->tool;
        s.params = n->params;
        s.status = StageStatus::Skipped;
        s.skip_reason = skip;
        skipped.push_back(std::move(s));
        continue;
      }
      ready.push_back(n);
    }

    if (!skipped.empty()) {
      for (auto& s : skipped) {
        if (ctx.log) ctx.log->event("stage_skipped", {{"node", s.id}, {"reason", s.skip_reason}});
        report.executed.push_back(s.id);
        store.put(std::move(s));
      }
      continue;
    }
    if (ready.empty()) break;

    std::sort(ready.begin(), ready.end(), [](auto* a, auto* b) { return a->id < b->id; });
    if (ready.size() > static_cast<std::size_t>(ctx.width)) ready.resize(ctx.width);

    std::vector<std::optional<FaultSpec>> faults(ready.size());
    for (std::size_t i = 0; i < ready.size(); ++i)
      for (auto& f : ctx.faults)
        if (f.node == ready[i]->id && f.times > 0) {
          --f.times;
          faults[i] = f;
          break;
        }

    std::vector<StageOutput> results(ready.size());
    if (ready.size() == 1) {
      results[0] = detail::run_node(*ready[0], ctx, store, faults[0] ? &*faults[0] : nullptr);
    } else {
      std::vector<std::thread> workers;
      for (std::size_t i = 0; i < ready.size(); ++i)
        workers.emplace_back([&, i] { results[i] = detail::run_node(*ready[i], ctx, store, faults[i] ? &*faults[i] : nullptr); });
      for (auto& w : workers) w.join();
    }

    for (auto& r : results) {
      json ev = {{"node", r.id}, {"tool", r.tool}, {"status", to_string(r.status)}, {"elapsed_ms", r.elapsed_ms}};
      if (r.status == StageStatus::Error) {
        ev["error"] = r.error;
        report.feedback.push_back(ExecutionFeedback::error(r.id, detail::error_of(r)));
        verdicts.flagged.insert(r.id);
      } else if (tools::item_count(r.raw->value) == 0) {
        ev["low_quality"] = "empty_result";
        report.feedback.push_back(ExecutionFeedback::low_quality(r.id, "empty_result", 0));
        verdicts.flagged.insert(r.id);
      } else {
        ev["items"] = r.raw->stats.item_count;
      }
      if (ctx.log) ctx.log->event("stage_done", ev);
      report.executed.push_back(r.id);
      store.put(std::move(r));
    }
  }
  return report;
}

}  // namespace aag::pipeline

namespace aag::pipeline {

inline ExecReport execute_dag(const TaskDag& dag, ExecContext& ctx, StageStore& store) {
  Verdicts v;
  return execute_dag(dag, ctx, store, v);
}

}  // namespace aag::pipeline

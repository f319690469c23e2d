#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "aag/coordinator/coordinator.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/graph/source.hpp"
#include "aag/kb/knowledge_base.hpp"
#include "aag/pipeline/config.hpp"
#include "aag/pipeline/execute.hpp"
#include "aag/pipeline/report.hpp"
#include "aag/pipeline/stage_store.hpp"
#include "aag/planner/planner.hpp"
#include "aag/tools/builtin.hpp"

namespace aag::pipeline {

enum ExitCode { kExitOk = 0, kExitPlanning = 2, kExitExecution = 3, kExitConfig = 4 };

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  std::optional<Report> report;
  std::optional<planner::TaskDag> dag;
  std::string phase;  // where a failure happened
  std::string stage;  // node id or other subject of the failure, if any
  std::string error;
  int refinement_rounds = 0;
};

namespace detail {

inline int exit_for_phase(const std::string& phase) {
  if (phase == "plan") return kExitPlanning;
  if (phase == "execute" || phase == "report") return kExitExecution;
  return kExitConfig;
}

/// Empties a previous run directory; refuses to touch anything else.
inline void prepare_run_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) fail(ErrorCode::ConfigError, dir.string() + " is not a directory", dir.string());
    const bool empty = fs::directory_iterator(dir) == fs::directory_iterator();
    if (!empty && !fs::exists(dir / "run.log") && !fs::exists(dir / "plan.json"))
      fail(ErrorCode::ConfigError, dir.string() + " exists and is not a run directory", dir.string());
    fs::remove_all(dir);
  }
  fs::create_directories(dir / "stages");
}

}  // namespace detail

/// derive schema -> extract -> plan -> execute with refinement -> report.
/// Never throws for library errors: the failing phase and stage are
/// recorded in the outcome and in run.log, and the partial run directory
/// stays on disk.
inline RunOutcome run(std::string_view query, const RunConfig& config, coord::Coordinator& coordinator,
                      const tools::ToolRegistry& registry) {
  RunOutcome out;
  out.run_dir = config.run_dir();
  out.phase = "config";
  std::unique_ptr<RunLog> log;
  json plan_doc = {{"query", query}, {"dag", nullptr}, {"trace", nullptr}, {"revisions", json::array()}};
  auto write_plan = [&] { text::write_file(out.run_dir / "plan.json", dump(plan_doc, 2) + "\n"); };

  try {
    detail::prepare_run_dir(out.run_dir);
    log = std::make_unique<RunLog>(out.run_dir / "run.log");
    log->event("run_start", {{"query", query},
                             {"coordinator", coordinator.name()},
                             {"seed", config.seed},
                             {"width", config.width},
                             {"max_rounds", config.max_rounds}});

    out.phase = "kb";
    const auto kg = kb::load(config.kb_path);
    log->event("kb_loaded", {{"nodes", kg.nodes().size()}});

    out.phase = "catalog";
    const auto catalog = graph::load_catalog(config.data_dir);
    const auto catalog_json = catalog.describe();

    out.phase = "schema";
    graph::SchemaSpec schema;
    try {
      auto resp = coordinator.complete({coord::Role::Schema, {{"task", query}, {"catalog", catalog_json}}});
      schema = graph::schema_from_json(resp.value);
    } catch (const coord::CoordinatorError& e) {
      throw Error(ErrorCode::SchemaInferenceFailed, "coordinator schema invalid after retry: " + e.detail());
    }
    graph::validate_schema(schema, catalog);
    log->event("schema", {{"schema", graph::to_json(schema)}});

    out.phase = "extract";
    auto pg = std::make_shared<const graph::PropertyGraph>(graph::extract(catalog, schema));
    log->event("extract", pg->summary());

    out.phase = "plan";
    planner::PlanContext pctx;
    pctx.catalog = catalog_json;
    pctx.schema = schema;
    pctx.sources = source_traits(*pg);
    pctx.retrieval_k = config.retrieval_k;
    pctx.budget = config.budget;
    pctx.run_dir = out.run_dir;
    planner::PlanTrace trace;
    try {
      out.dag = planner::plan(query, kg, registry, coordinator, pctx, trace);
    } catch (...) {
      plan_doc["trace"] = planner::to_json(trace);
      plan_doc["transcript"] = trace.transcript;
      write_plan();
      throw;
    }
    plan_doc["dag"] = planner::to_json(*out.dag);
    plan_doc["trace"] = planner::to_json(trace);
    plan_doc["transcript"] = trace.transcript;
    write_plan();
    log->event("plan", {{"stages", out.dag->stages().size()}, {"order", planner::topological_order(*out.dag)}});

    out.phase = "execute";
    ExecContext ctx;
    ctx.registry = &registry;
    ctx.sources = source_graphs(pg);
    ctx.width = config.width;
    ctx.faults = config.faults;
    ctx.log = log.get();
    StageStore store(out.run_dir / "stages");
    Verdicts verdicts;
    for (int round = 0;; ++round) {
      auto pass = execute_dag(*out.dag, ctx, store, verdicts);
      if (pass.feedback.empty()) break;
      json fb = json::array();
      for (const auto& f : pass.feedback) fb.push_back(planner::to_json(f));
      log->event("feedback", {{"round", round}, {"feedback", fb}});

      auto rr = planner::refine(*out.dag, pass.feedback, kg, registry, coordinator, round, &pctx.sources,
                                config.max_rounds);
      out.refinement_rounds = round + 1;
      log->event("refinement", {{"round", round + 1}, {"actions", rr.actions}, {"renamed", rr.renamed},
                                {"accepted", rr.accepted}, {"failed", rr.failed}});
      if (!rr.failed.empty()) {
        const auto& [id, reason] = *rr.failed.begin();
        fail(ErrorCode::ExecutorError, "stage " + id + " failed and refinement proposed no fix: " + reason, id);
      }
      verdicts.accepted.insert(rr.accepted.begin(), rr.accepted.end());
      out.dag = rr.dag;
      plan_doc["revisions"].push_back(
          {{"round", round + 1}, {"actions", rr.actions}, {"transcript", rr.transcript}, {"dag", planner::to_json(rr.dag)}});
      write_plan();
    }
    for (const auto* n : out.dag->stages()) {
      auto rec = store.get(n->id);
      if (!rec) fail(ErrorCode::ExecutorError, "stage " + n->id + " never became runnable", n->id);
      if (rec->status == StageStatus::Error)
        fail(ErrorCode::ExecutorError, "stage " + n->id + " failed: " + rec->error.value("message", ""), n->id);
    }

    out.phase = "report";
    out.report = build_report(query, *out.dag, store, coordinator);
    text::write_file(out.run_dir / "report.md", out.report->markdown);
    text::write_file(out.run_dir / "report.json", dump(to_json(*out.report), 2) + "\n");
    log->event("run_done", {{"exit_code", 0}, {"refinement_rounds", out.refinement_rounds}});
    out.phase.clear();
    return out;
  } catch (const Error& e) {
    out.error = e.what();
    out.stage = e.subject();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.exit_code = detail::exit_for_phase(out.phase);
  if (log)
    log->event("run_failed",
               {{"phase", out.phase}, {"stage", out.stage}, {"error", out.error}, {"exit_code", out.exit_code}});
  return out;
}

inline RunOutcome run(std::string_view query, const RunConfig& config, coord::Coordinator& coordinator) {
  static const auto registry = tools::default_registry();
  return run(query, config, coordinator, registry);
}

}  // namespace aag::pipeline

#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/algo/traversal.hpp"
#include "aag/coordinator/coordinator.hpp"
#include "aag/core/text.hpp"
#include "aag/pipeline/stage_store.hpp"
#include "aag/planner/task_dag.hpp"

namespace aag::pipeline {

struct Report {
  std::string title;
  json claims = json::array();    // [{text, cites}]
  json verdict = json::object();
  json evidence = json::array();  // Ok stages only
  json skipped = json::array();
  std::string plan_ref = "plan.json";
  std::string markdown;
  json transcript = json::array();
};

inline json to_json(const Report& r) {
  return {{"title", r.title}, {"claims", r.claims}, {"verdict", r.verdict}, {"evidence", r.evidence},
          {"skipped", r.skipped}, {"plan", r.plan_ref}};
}

namespace detail {

inline std::vector<std::string> cycle_keys(const algo::Cycle& c, const graph::UniversePtr& u) {
  std::vector<std::string> out;
  for (auto id : c.nodes) out.push_back(algo::key_of(u, id));
  return out;
}

/// "A -> B -> C -> A", starting at `focus` when it is on the cycle.
inline std::string cycle_text(std::vector<std::string> keys, const std::optional<std::string>& focus) {
  if (focus) {
    auto it = std::find(keys.begin(), keys.end(), *focus);
    if (it != keys.end()) std::rotate(keys.begin(), it, keys.end());
  }
  if (!keys.empty()) keys.push_back(keys.front());
  return text::join(keys, " -> ");
}

/// Fields the intent asks for, computed from raw outputs (never from the
/// distilled view, which may omit items).
inline json verdict(const planner::TaskDag& dag, const StageStore& store) {
  json v = json::object();
  v["focus"] = dag.focus ? json(*dag.focus) : json(nullptr);
  json cycles = json::array(), rankings = json::array(), flows = json::array();
  for (const auto* n : dag.stages()) {
    auto rec = store.get(n->id);
    if (!rec || rec->status != StageStatus::Ok || !rec->raw) continue;
    const auto& value = rec->raw->value;
    if (auto* sc = std::get_if<algo::NodeScores>(&value)) {
      if (sc->semantics != "pagerank" && sc->semantics != "personalized_pagerank") continue;
      json r = {{"stage", n->id}, {"semantics", sc->semantics}, {"nodes", sc->scores.size()}};
      if (dag.focus && sc->universe)
        if (auto id = sc->universe->find_key(*dag.focus)) {
          r["focus_rank"] = algo::rank_of(sc->scores, *id);
          r["focus_score"] = sc->scores[*id];
        }
      rankings.push_back(r);
    } else if (auto* cs = std::get_if<algo::CycleSet>(&value)) {
      std::vector<json> list;
      for (const auto& c : cs->cycles) {
        json jc = {{"stage", n->id}, {"nodes", cycle_keys(c, cs->universe)}};
        if (c.min_weight) jc["min_weight"] = *c.min_weight;
        if (c.total_flow) jc["total_flow"] = *c.total_flow;
        list.push_back(jc);
      }
      std::stable_sort(list.begin(), list.end(), [](const json& a, const json& b) {
        if (a["nodes"].size() != b["nodes"].size()) return a["nodes"].size() < b["nodes"].size();
        return a["nodes"] < b["nodes"];
      });
      for (auto& c : list) cycles.push_back(std::move(c));
      if (cs->truncated) v["cycles_truncated"] = true;
    } else if (auto* t = std::get_if<tools::Table>(&value)) {
      const auto g = t->column_index("group"), in = t->column_index("in_total"), out = t->column_index("out_total");
      if (!g || !in || !out) continue;
      double in_sum = 0.0, out_sum = 0.0;
      json row = nullptr;
      for (const auto& r : t->rows) {
        in_sum += std::get<double>(r[*in]);
        out_sum += std::get<double>(r[*out]);
        if (dag.focus && std::get<std::string>(r[*g]) == *dag.focus) {
          row = json::object();
          for (std::size_t i = 0; i < t->columns.size(); ++i) row[t->columns[i]] = tools::cell_json(r[i]);
        }
      }
      flows.push_back({{"stage", n->id}, {"groups", t->rows.size()}, {"in_total", in_sum}, {"out_total", out_sum},
                       {"focus", row}});
    }
  }
  v["rankings"] = rankings;
  v["flagged_cycles"] = cycles;
  v["flows"] = flows;
  if (dag.focus) {
    std::size_t with_focus = 0;
    for (const auto& c : cycles)
      for (const auto& k : c["nodes"])
        if (k == *dag.focus) ++with_focus;
    v["focus_cycle_count"] = with_focus;
  }
  return v;
}

inline std::string verdict_markdown(const json& v) {
  std::string md;
  const auto focus = v["focus"].is_string() ? std::optional<std::string>(v["focus"].get<std::string>()) : std::nullopt;
  if (focus) md += "- Focus account: " + *focus + "\n";
  for (const auto& r : v["rankings"]) {
    if (r.contains("focus_rank"))
      md += "- " + r["semantics"].get<std::string>() + " rank of " + *focus + ": " +
            std::to_string(r["focus_rank"].get<std::size_t>()) + " of " + std::to_string(r["nodes"].get<std::size_t>()) +
            " (score " + text::fmt_double(r["focus_score"].get<double>()) + ") [" + r["stage"].get<std::string>() + "]\n";
  }
  const auto& cycles = v["flagged_cycles"];
  std::set<std::string> cycle_stages;
  for (const auto& c : cycles) cycle_stages.insert(c["stage"].get<std::string>());
  md += "- Flagged cycles: " + std::to_string(cycles.size());
  if (focus) md += " (" + std::to_string(v.value("focus_cycle_count", 0)) + " through " + *focus + ")";
  if (!cycle_stages.empty()) md += " [" + text::join({cycle_stages.begin(), cycle_stages.end()}, ", ") + "]";
  md += "\n";
  std::size_t i = 0;
  for (const auto& c : cycles) {
    md += "  " + std::to_string(++i) + ". " + cycle_text(c["nodes"].get<std::vector<std::string>>(), focus);
    if (c.contains("min_weight"))
      md += " (bottleneck " + text::fmt_amount(c["min_weight"].get<double>()) + ", total " +
            text::fmt_amount(c["total_flow"].get<double>()) + ")";
    md += "\n";
  }
  if (v.value("cycles_truncated", false)) md += "  (cycle enumeration hit its limit; the list is incomplete)\n";
  for (const auto& f : v["flows"]) {
    md += "- Flow over " + std::to_string(f["groups"].get<std::size_t>()) + " accounts: in " +
          text::fmt_amount(f["in_total"].get<double>()) + ", out " + text::fmt_amount(f["out_total"].get<double>());
    if (f["focus"].is_object())
      md += "; " + *focus + " in " + text::fmt_amount(f["focus"]["in_total"].get<double>()) + ", out " +
            text::fmt_amount(f["focus"]["out_total"].get<double>()) + ", net " +
            text::fmt_amount(f["focus"]["net"].get<double>());
    md += " [" + f["stage"].get<std::string>() + "]\n";
  }
  return md;
}

inline std::string cites_text(const json& cites) {
  std::vector<std::string> ids;
  for (const auto& c : cites) ids.push_back(c.get<std::string>());
  return "[" + text::join(ids, ", ") + "]";
}

}  // namespace detail

/// Assembles the report. Evidence blocks and the verdict come straight from
/// the stage store; the coordinator only contributes the title and claims,
/// and its claims may cite only stages stored Ok.
inline Report build_report(std::string_view query, const planner::TaskDag& dag, const StageStore& store,
                           coord::Coordinator& coordinator) {
  Report r;
  r.verdict = detail::verdict(dag, store);

  json stages = json::array();
  for (const auto* n : dag.stages()) {
    auto rec = store.get(n->id);
    if (!rec) continue;
    if (rec->status == StageStatus::Error)
      fail(ErrorCode::ExecutorError, "stage " + n->id + " failed; no report", n->id);
    json s = {{"id", n->id}, {"goal", n->goal}, {"tool", n->tool}, {"status", to_string(rec->status)}};
    if (rec->status == StageStatus::Ok) {
      s["summary_text"] = rec->distilled->summary_text;
      r.evidence.push_back({{"stage", n->id},
                            {"goal", n->goal},
                            {"tool", n->tool},
                            {"algorithm", n->algorithm},
                            {"params", rec->params},
                            {"summary_text", rec->distilled->summary_text},
                            {"items", rec->distilled->items},
                            {"omitted_count", rec->distilled->omitted_count},
                            {"directive", tools::to_json(rec->distilled->directive)}});
    } else {
      s["reason"] = rec->skip_reason;
      r.skipped.push_back({{"stage", n->id}, {"goal", n->goal}, {"reason", rec->skip_reason}});
    }
    stages.push_back(s);
  }

  auto resp = coordinator.complete(
      {coord::Role::Report, {{"query", query}, {"focus", r.verdict["focus"]}, {"verdict", r.verdict}, {"stages", stages}}});
  r.title = resp.value["title"].get<std::string>();
  r.claims = resp.value["claims"];
  r.transcript = resp.transcript;

  std::string md = "# " + r.title + "\n\nQuery: " + std::string(query) + "\n\nPlan: " + r.plan_ref + " (";
  std::vector<std::string> plan_parts;
  for (const auto* n : dag.stages()) plan_parts.push_back(n->id + " " + n->tool);
  md += text::join(plan_parts, ", ") + ")\n\n## Verdict\n\n" + detail::verdict_markdown(r.verdict);

  md += "\n## Findings\n\n";
  for (const auto& c : r.claims) md += "- " + c["text"].get<std::string>() + " " + detail::cites_text(c["cites"]) + "\n";

  md += "\n## Evidence\n";
  for (const auto& e : r.evidence) {
    md += "\n### " + e["stage"].get<std::string>() + ": " + e["goal"].get<std::string>() + "\n\n";
    md += "- Tool: " + e["tool"].get<std::string>() + " (" + e["algorithm"].get<std::string>() + ")\n";
    md += "- Parameters: " + dump(e["params"]) + "\n";
    md += "- Distillation: " + e["directive"]["mode"].get<std::string>() + ", " +
          std::to_string(e["omitted_count"].get<std::size_t>()) + " items omitted\n\n";
    md += "```text\n" + e["summary_text"].get<std::string>() + "\n```\n";
  }
  if (!r.skipped.empty()) {
    md += "\n## Skipped stages\n\n";
    for (const auto& s : r.skipped)
      md += "- " + s["stage"].get<std::string>() + " (" + s["goal"].get<std::string>() + "): " +
            s["reason"].get<std::string>() + "\n";
  }
  r.markdown = std::move(md);
  return r;
}

}  // namespace aag::pipeline

#pragma once

#include <algorithm>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "aag/algo/traversal.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/tools/value.hpp"

namespace aag::tools {

using text::fmt_double;
using text::join;
using text::utf8_prefix;

enum class DistillMode { TopK, Threshold, SubgraphSummary, Head };

inline std::string_view to_string(DistillMode m) {
  switch (m) {
    case DistillMode::TopK: return "TopK";
    case DistillMode::Threshold: return "Threshold";
    case DistillMode::SubgraphSummary: return "SubgraphSummary";
    case DistillMode::Head: return "Head";
  }
  return "?";
}

inline DistillMode parse_distill_mode(const std::string& s) {
  for (auto m : {DistillMode::TopK, DistillMode::Threshold, DistillMode::SubgraphSummary, DistillMode::Head})
    if (to_string(m) == s) return m;
  fail(ErrorCode::SchemaViolation, "unknown distill mode '" + s + "'", "mode");
}

struct Budget {
  std::size_t max_items = 50;
  std::size_t max_chars = 4000;
};

struct DistillDirective {
  DistillMode mode = DistillMode::TopK;
  std::size_t k = 10;
  double threshold = 0.0;
  std::size_t max_paths = 10;
  std::string column;  // Table Threshold column; empty = first numeric column
  Budget budget;
};

inline json to_json(const DistillDirective& d) {
  json j = {{"mode", to_string(d.mode)},
            {"budget", {{"max_items", d.budget.max_items}, {"max_chars", d.budget.max_chars}}}};
  switch (d.mode) {
    case DistillMode::TopK:
    case DistillMode::Head: j["k"] = d.k; break;
    case DistillMode::Threshold:
      j["threshold"] = d.threshold;
      if (!d.column.empty()) j["column"] = d.column;
      break;
    case DistillMode::SubgraphSummary: j["max_paths"] = d.max_paths; break;
  }
  return j;
}

inline DistillDirective directive_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaViolation, "directive must be an object", "directive");
  try {
    DistillDirective d;
    d.mode = parse_distill_mode(j.at("mode").get<std::string>());
    d.k = j.value("k", d.k);
    d.threshold = j.value("threshold", d.threshold);
    d.max_paths = j.value("max_paths", d.max_paths);
    d.column = j.value("column", d.column);
    if (j.contains("budget")) {
      d.budget.max_items = j["budget"].value("max_items", d.budget.max_items);
      d.budget.max_chars = j["budget"].value("max_chars", d.budget.max_chars);
    }
    return d;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("malformed directive: ") + e.what(), "directive");
  }
}

inline DistillDirective default_directive(Kind k) {
  DistillDirective d;
  switch (k) {
    case Kind::NodeScores: d.mode = DistillMode::TopK; d.k = 10; break;
    case Kind::Table: d.mode = DistillMode::Head; d.k = 50; break;
    default: d.mode = DistillMode::SubgraphSummary; break;
  }
  return d;
}

inline bool compatible(DistillMode m, Kind k) {
  switch (m) {
    case DistillMode::TopK: return k == Kind::NodeScores;
    case DistillMode::SubgraphSummary: return k == Kind::CycleSet || k == Kind::NodeSet;
    case DistillMode::Head:
    case DistillMode::Threshold: return k == Kind::Table || k == Kind::NodeScores;
  }
  return false;
}

struct DistilledResult {
  std::string summary_text;
  json items = json::array();
  std::size_t omitted_count = 0;
  std::string tool;
  DistillDirective directive;
};

inline json to_json(const DistilledResult& r) {
  return {{"summary_text", r.summary_text},
          {"items", r.items},
          {"omitted_count", r.omitted_count},
          {"provenance", {{"tool", r.tool}, {"directive", to_json(r.directive)}}}};
}

inline constexpr std::string_view kTruncationMarker = "...[truncated]";

/// Cuts `text` to at most `max_chars` bytes on a UTF-8 boundary, ending with
/// the truncation marker when there is room for it.
inline std::string truncate_text(const std::string& text, std::size_t max_chars) {
  if (text.size() <= max_chars) return text;
  if (max_chars < kTruncationMarker.size()) return std::string(utf8_prefix(text, max_chars));
  return std::string(utf8_prefix(text, max_chars - kTruncationMarker.size())) + std::string(kTruncationMarker);
}

namespace detail {

struct Draft {
  std::string header;
  std::vector<json> items;       // candidate items, most relevant first
  std::vector<std::string> lines;  // one summary line per candidate item
  std::size_t raw_count = 0;
};

inline std::string cell_text(const Cell& c) {
  return std::holds_alternative<std::string>(c) ? std::get<std::string>(c) : fmt_double(std::get<double>(c));
}

inline Draft ranked_scores(const algo::NodeScores& s, std::vector<algo::RankedNode> ranked, const std::string& what) {
  Draft d;
  d.raw_count = s.scores.size();
  d.header = what + " over " + std::to_string(s.scores.size()) + " nodes (" + s.semantics + ")";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto key = algo::key_of(s.universe, ranked[i].id);
    d.items.push_back({{"rank", i + 1}, {"node", key}, {"score", ranked[i].score}});
    d.lines.push_back(std::to_string(i + 1) + ". " + key + " " + fmt_double(ranked[i].score));
  }
  return d;
}

inline std::vector<algo::RankedNode> all_ranked(const algo::NodeScores& s) {
  if (s.scores.empty()) return {};
  return algo::top_k(s.scores, s.scores.size());
}

inline Draft table_rows(const Table& t, const std::vector<std::size_t>& rows, const std::string& what) {
  Draft d;
  d.raw_count = t.rows.size();
  d.header = what + " of " + std::to_string(t.rows.size()) + " rows [" + join(t.columns, ", ") + "]";
  for (auto r : rows) {
    json item = json::object();
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      item[t.columns[c]] = cell_json(t.rows[r][c]);
      cells.push_back(cell_text(t.rows[r][c]));
    }
    d.items.push_back(std::move(item));
    d.lines.push_back(join(cells, " | "));
  }
  return d;
}

inline Draft cycle_summary(const algo::CycleSet& cs, std::size_t max_paths) {
  Draft d;
  d.raw_count = cs.cycles.size();
  std::set<std::uint32_t> nodes;
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : cs.cycles) {
    for (std::size_t i = 0; i < c.nodes.size(); ++i) {
      nodes.insert(c.nodes[i]);
      edges.insert({c.nodes[i], c.nodes[(i + 1) % c.nodes.size()]});
    }
    if (c.min_weight) {
      lo = std::min(lo, *c.min_weight);
      hi = std::max(hi, *c.min_weight);
    }
  }
  d.header = std::to_string(cs.cycles.size()) + " cycles spanning " + std::to_string(nodes.size()) + " nodes and " +
             std::to_string(edges.size()) + " edges";
  if (lo <= hi) d.header += "; bottleneck weight min " + fmt_double(lo) + " max " + fmt_double(hi);
  if (cs.truncated) d.header += "; enumeration truncated";

  std::vector<const algo::Cycle*> order;
  for (const auto& c : cs.cycles) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [](const algo::Cycle* a, const algo::Cycle* b) {
    return a->nodes.size() != b->nodes.size() ? a->nodes.size() < b->nodes.size() : a->nodes < b->nodes;
  });
  order.resize(std::min(order.size(), max_paths));
  for (const auto* c : order) {
    std::vector<std::string> keys;
    for (auto id : c->nodes) keys.push_back(algo::key_of(cs.universe, id));
    json item = {{"nodes", keys}, {"length", keys.size()}};
    std::string line = join(keys, " -> ") + " -> " + keys.front();
    if (c->min_weight) {
      item["min_weight"] = *c->min_weight;
      line += " (bottleneck " + fmt_double(*c->min_weight) + ")";
    }
    if (c->total_flow) item["total_flow"] = *c->total_flow;
    d.items.push_back(std::move(item));
    d.lines.push_back(std::move(line));
  }
  return d;
}

inline Draft node_set_summary(const algo::NodeSet& ns, std::size_t max_paths) {
  Draft d;
  d.raw_count = ns.ids.size();
  d.header = std::to_string(ns.ids.size()) + " nodes";
  if (ns.universe && ns.universe->base) {
    std::vector<graph::NodeRef> refs;
    for (auto id : ns.ids) refs.push_back(ns.universe->refs.at(id));
    auto view = graph::induced_view(ns.universe->base, ns.universe->relation, std::move(refs), "");
    d.header += " and " + std::to_string(view.edges.size()) + " induced edges";
  }
  for (std::size_t i = 0; i < ns.ids.size() && i < max_paths; ++i) {
    const auto key = algo::key_of(ns.universe, ns.ids[i]);
    d.items.push_back({{"node", key}});
    d.lines.push_back(key);
  }
  return d;
}

inline std::optional<std::size_t> threshold_column(const Table& t, const std::string& requested) {
  if (!requested.empty()) {
    auto c = t.column_index(requested);
    if (!c) fail(ErrorCode::SchemaViolation, "table has no column '" + requested + "'", requested);
    return c;
  }
  if (t.rows.empty()) return std::nullopt;
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (std::holds_alternative<double>(t.rows.front()[c])) return c;
  fail(ErrorCode::SchemaViolation, "table has no numeric column to threshold", "column");
}

inline Draft draft(const Value& raw, const DistillDirective& dir) {
  switch (dir.mode) {
    case DistillMode::TopK: {
      const auto& s = std::get<algo::NodeScores>(raw);
      auto ranked = s.scores.empty() || dir.k == 0 ? std::vector<algo::RankedNode>{} : algo::top_k(s.scores, dir.k);
      return ranked_scores(s, std::move(ranked), "top " + std::to_string(dir.k));
    }
    case DistillMode::Threshold:
      if (auto* s = std::get_if<algo::NodeScores>(&raw)) {
        auto ranked = all_ranked(*s);
        std::erase_if(ranked, [&](const algo::RankedNode& r) { return r.score < dir.threshold; });
        return ranked_scores(*s, std::move(ranked), "scores >= " + fmt_double(dir.threshold));
      } else {
        const auto& t = std::get<Table>(raw);
        std::vector<std::size_t> rows;
        if (auto c = threshold_column(t, dir.column))
          for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& cell = t.rows[r][*c];
            if (std::holds_alternative<double>(cell) && std::get<double>(cell) >= dir.threshold) rows.push_back(r);
          }
        return table_rows(t, rows, "rows with " + (dir.column.empty() ? std::string("value") : dir.column) +
                                       " >= " + fmt_double(dir.threshold));
      }
    case DistillMode::Head:
      if (auto* s = std::get_if<algo::NodeScores>(&raw)) {
        std::vector<algo::RankedNode> head;
        for (std::uint32_t i = 0; i < s->scores.size() && i < dir.k; ++i) head.push_back({i, s->scores[i]});
        return ranked_scores(*s, std::move(head), "first " + std::to_string(dir.k));
      } else {
        const auto& t = std::get<Table>(raw);
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < t.rows.size() && r < dir.k; ++r) rows.push_back(r);
        return table_rows(t, rows, "first " + std::to_string(std::min(dir.k, t.rows.size())));
      }
    case DistillMode::SubgraphSummary:
      if (auto* cs = std::get_if<algo::CycleSet>(&raw)) return cycle_summary(*cs, dir.max_paths);
      return node_set_summary(std::get<algo::NodeSet>(raw), dir.max_paths);
  }
  return {};
}

}  // namespace detail

/// Reduces a raw result to a budgeted view. Items are dropped from the tail
/// until both the item list and its serialization fit; the summary text is
/// cut with a marker if it still exceeds max_chars.
inline DistilledResult distill(const Value& raw, const DistillDirective& dir, const std::string& tool = {}) {
  if (dir.budget.max_items == 0 || dir.budget.max_chars == 0)
    fail(ErrorCode::SchemaViolation, "distill budget must be positive", "budget");
  if (!compatible(dir.mode, kind_of(raw)))
    fail(ErrorCode::ModeMismatch,
         std::string(to_string(dir.mode)) + " cannot distill " + std::string(to_string(kind_of(raw))),
         std::string(to_string(dir.mode)));

  auto d = detail::draft(raw, dir);
  std::size_t keep = std::min(d.items.size(), dir.budget.max_items);
  auto serialized = [&](std::size_t n) {
    json arr = json::array();
    for (std::size_t i = 0; i < n; ++i) arr.push_back(d.items[i]);
    return arr;
  };
  json items = serialized(keep);
  while (keep > 0 && dump(items).size() > dir.budget.max_chars) {
    --keep;
    items.erase(items.size() - 1);
  }

  DistilledResult out;
  out.tool = tool;
  out.directive = dir;
  out.items = std::move(items);
  out.omitted_count = d.raw_count - keep;
  std::string text = d.header;
  for (std::size_t i = 0; i < keep; ++i) text += "\n" + d.lines[i];
  if (out.omitted_count > 0) text += "\n(" + std::to_string(out.omitted_count) + " more omitted)";
  out.summary_text = truncate_text(text, dir.budget.max_chars);
  return out;
}

}  // namespace aag::tools

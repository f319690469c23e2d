#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/graph/source.hpp"

namespace aag::graph {

// ---------------------------------------------------------------------------
// Schema

enum class FilterOp { Ge, Le, Eq, Ne };

inline std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::Ge: return ">=";
    case FilterOp::Le: return "<=";
    case FilterOp::Eq: return "=";
    case FilterOp::Ne: return "!=";
  }
  return "?";
}

inline FilterOp parse_filter_op(const std::string& s) {
  if (s == ">=" || s == "\xE2\x89\xA5") return FilterOp::Ge;
  if (s == "<=" || s == "\xE2\x89\xA4") return FilterOp::Le;
  if (s == "=" || s == "==") return FilterOp::Eq;
  if (s == "!=" || s == "\xE2\x89\xA0") return FilterOp::Ne;
  fail(ErrorCode::SchemaInferenceFailed, "unknown filter operator '" + s + "'", s);
}

struct FilterPredicate {
  std::string column;
  FilterOp op = FilterOp::Eq;
  std::string literal;
};

struct EntitySpec {
  std::string label;
  std::string source;
  std::string key_column;
  std::vector<std::string> attribute_columns;
};

struct RelationSpec {
  std::string label;
  std::string source;
  std::string src_entity;
  std::string src_column;
  std::string dst_entity;
  std::string dst_column;
  std::optional<std::string> weight_column;
  std::vector<std::string> attribute_columns;
  std::vector<FilterPredicate> filters;
  bool directed = true;
};

struct SchemaSpec {
  std::vector<EntitySpec> entities;
  std::vector<RelationSpec> relations;

  const EntitySpec* entity(std::string_view label) const {
    for (const auto& e : entities)
      if (e.label == label) return &e;
    return nullptr;
  }
  const RelationSpec* relation(std::string_view label) const {
    for (const auto& r : relations)
      if (r.label == label) return &r;
    return nullptr;
  }
};

inline json to_json(const SchemaSpec& s) {
  json ents = json::array(), rels = json::array();
  for (const auto& e : s.entities)
    ents.push_back({{"label", e.label}, {"source", e.source}, {"key_column", e.key_column},
                    {"attribute_columns", e.attribute_columns}});
  for (const auto& r : s.relations) {
    json filters = json::array();
    for (const auto& f : r.filters) filters.push_back({{"column", f.column}, {"op", to_string(f.op)}, {"literal", f.literal}});
    json jr = {{"label", r.label},           {"source", r.source},         {"src_entity", r.src_entity},
               {"src_column", r.src_column}, {"dst_entity", r.dst_entity}, {"dst_column", r.dst_column},
               {"attribute_columns", r.attribute_columns}, {"filters", filters}, {"directed", r.directed}};
    jr["weight_column"] = r.weight_column ? json(*r.weight_column) : json(nullptr);
    rels.push_back(jr);
  }
  return {{"entities", ents}, {"relations", rels}};
}

inline SchemaSpec schema_from_json(const json& j) {
  SchemaSpec s;
  try {
    for (const auto& je : j.at("entities")) {
      EntitySpec e;
      e.label = je.at("label").get<std::string>();
      e.source = je.at("source").get<std::string>();
      e.key_column = je.at("key_column").get<std::string>();
      e.attribute_columns = je.value("attribute_columns", std::vector<std::string>{});
      s.entities.push_back(std::move(e));
    }
    for (const auto& jr : j.at("relations")) {
      RelationSpec r;
      r.label = jr.at("label").get<std::string>();
      r.source = jr.at("source").get<std::string>();
      r.src_entity = jr.at("src_entity").get<std::string>();
      r.src_column = jr.at("src_column").get<std::string>();
      r.dst_entity = jr.at("dst_entity").get<std::string>();
      r.dst_column = jr.at("dst_column").get<std::string>();
      if (jr.contains("weight_column") && !jr.at("weight_column").is_null())
        r.weight_column = jr.at("weight_column").get<std::string>();
      r.attribute_columns = jr.value("attribute_columns", std::vector<std::string>{});
      r.directed = jr.value("directed", true);
      for (const auto& jf : jr.value("filters", json::array()))
        r.filters.push_back({jf.at("column").get<std::string>(), parse_filter_op(jf.at("op").get<std::string>()),
                             jf.at("literal").is_string() ? jf.at("literal").get<std::string>() : dump(jf.at("literal"))});
      s.relations.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaInferenceFailed, std::string("malformed schema: ") + e.what());
  }
  return s;
}

/// Checks every column reference against the catalog. Missing columns raise
/// CatalogMismatch naming the column; structural problems raise
/// SchemaInferenceFailed.
inline void validate_schema(const SchemaSpec& s, const SourceCatalog& catalog) {
  auto column = [&](const std::string& source, const std::string& name) -> const ColumnInfo& {
    const auto* src = catalog.find(source);
    if (!src) fail(ErrorCode::CatalogMismatch, "unknown source " + source, source);
    const auto* c = src->find_column(name);
    if (!c) fail(ErrorCode::CatalogMismatch, "source " + source + " has no column " + name, name);
    return *c;
  };
  std::set<std::string> labels;
  for (const auto& e : s.entities) {
    if (!labels.insert(e.label).second)
      fail(ErrorCode::SchemaInferenceFailed, "duplicate entity label " + e.label, e.label);
    column(e.source, e.key_column);
    for (const auto& a : e.attribute_columns) column(e.source, a);
  }
  std::set<std::string> rel_labels;
  for (const auto& r : s.relations) {
    if (!rel_labels.insert(r.label).second)
      fail(ErrorCode::SchemaInferenceFailed, "duplicate relation label " + r.label, r.label);
    if (!s.entity(r.src_entity))
      fail(ErrorCode::SchemaInferenceFailed, "relation " + r.label + " uses undeclared entity " + r.src_entity, r.src_entity);
    if (!s.entity(r.dst_entity))
      fail(ErrorCode::SchemaInferenceFailed, "relation " + r.label + " uses undeclared entity " + r.dst_entity, r.dst_entity);
    column(r.source, r.src_column);
    column(r.source, r.dst_column);
    if (r.weight_column && !is_numeric(column(r.source, *r.weight_column).type))
      fail(ErrorCode::CatalogMismatch, "weight column " + *r.weight_column + " is not numeric", *r.weight_column);
    for (const auto& a : r.attribute_columns) column(r.source, a);
    for (const auto& f : r.filters) {
      const auto& c = column(r.source, f.column);
      if (is_numeric(c.type) && !parse_float(f.literal))
        fail(ErrorCode::SchemaInferenceFailed, "filter literal '" + f.literal + "' is not numeric", f.column);
    }
  }
}

// ---------------------------------------------------------------------------
// Property graph

struct NodeRef {
  std::uint32_t table = 0;
  std::uint32_t id = 0;
  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct NodeTable {
  std::string label;
  std::vector<std::string> keys;
  std::unordered_map<std::string, std::uint32_t> index;
  std::map<std::string, std::vector<std::string>> attributes;

  std::uint32_t size() const { return static_cast<std::uint32_t>(keys.size()); }

  std::uint32_t get_or_add(std::string_view key) {
    auto [it, inserted] = index.try_emplace(std::string(key), static_cast<std::uint32_t>(keys.size()));
    if (inserted) keys.emplace_back(key);
    return it->second;
  }
  std::optional<std::uint32_t> find(std::string_view key) const {
    auto it = index.find(std::string(key));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

struct EdgeTable {
  std::string label;
  std::uint32_t src_table = 0;
  std::uint32_t dst_table = 0;
  bool directed = true;
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::optional<std::vector<double>> weights;
  std::map<std::string, std::vector<std::string>> attributes;
  std::vector<std::size_t> source_rows;

  std::size_t size() const { return src.size(); }
};

struct ExtractReport {
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_filtered = 0;
  std::size_t rows_skipped = 0;
  std::vector<std::string> skip_log;  // "<source>:<row>: <reason>"

  json to_json() const {
    return {{"rows_total", rows_total}, {"rows_kept", rows_kept}, {"rows_filtered", rows_filtered},
            {"rows_skipped", rows_skipped}, {"skip_log", skip_log}};
  }
};

struct PropertyGraph {
  std::vector<NodeTable> nodes;
  std::vector<EdgeTable> edges;
  ExtractReport report;

  std::optional<std::uint32_t> table_index(std::string_view label) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].label == label) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }

  const EdgeTable& relation(std::string_view label) const {
    for (const auto& e : edges)
      if (e.label == label) return e;
    fail(ErrorCode::UnknownRelation, "no relation " + std::string(label), std::string(label));
  }
  bool has_relation(std::string_view label) const {
    for (const auto& e : edges)
      if (e.label == label) return true;
    return false;
  }

  const std::string& key(NodeRef r) const { return nodes[r.table].keys[r.id]; }

  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& t : nodes) n += t.size();
    return n;
  }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& e : edges) n += e.size();
    return n;
  }

  json summary() const {
    json jn = json::object(), je = json::object();
    for (const auto& t : nodes) jn[t.label] = t.size();
    for (const auto& e : edges)
      je[e.label] = {{"edges", e.size()}, {"src", nodes[e.src_table].label}, {"dst", nodes[e.dst_table].label},
                     {"directed", e.directed}, {"weighted", e.weights.has_value()}};
    return {{"nodes", jn}, {"relations", je}, {"extract", report.to_json()}};
  }
};

namespace detail {

inline bool predicate_holds(std::string_view value, ColumnType type, const FilterPredicate& f) {
  if (is_numeric(type)) {
    double a = *parse_float(value), b = *parse_float(f.literal);
    switch (f.op) {
      case FilterOp::Ge: return a >= b;
      case FilterOp::Le: return a <= b;
      case FilterOp::Eq: return a == b;
      case FilterOp::Ne: return a != b;
    }
  }
  switch (f.op) {
    case FilterOp::Ge: return value >= f.literal;
    case FilterOp::Le: return value <= f.literal;
    case FilterOp::Eq: return value == f.literal;
    case FilterOp::Ne: return value != f.literal;
  }
  return false;
}

}  // namespace detail

/// Builds the property graph for a validated schema. Entity nodes are
/// materialized only from the endpoints of kept relation rows, with dense ids
/// in first-seen order. Rows that fail type coercion on any referenced column
/// are skipped and logged; rows failing a filter are dropped silently.
inline PropertyGraph extract(const SourceCatalog& catalog, const SchemaSpec& schema) {
  validate_schema(schema, catalog);
  PropertyGraph pg;
  for (const auto& e : schema.entities) pg.nodes.push_back(NodeTable{e.label, {}, {}, {}});

  constexpr std::size_t kMaxLoggedSkips = 1000;
  auto log_skip = [&](const std::string& source, std::size_t row, const std::string& why) {
    ++pg.report.rows_skipped;
    if (pg.report.skip_log.size() < kMaxLoggedSkips)
      pg.report.skip_log.push_back(source + ":" + std::to_string(row + 2) + ": " + why);
  };

  for (const auto& r : schema.relations) {
    const auto& src = catalog.at(r.source);
    EdgeTable et;
    et.label = r.label;
    et.src_table = *pg.table_index(r.src_entity);
    et.dst_table = *pg.table_index(r.dst_entity);
    et.directed = r.directed;

    const auto src_col = src.open_column(r.src_column);
    const auto dst_col = src.open_column(r.dst_column);
    std::optional<std::size_t> w_col;
    if (r.weight_column) {
      w_col = src.open_column(*r.weight_column);
      et.weights.emplace();
    }
    struct Check {
      std::size_t col;
      ColumnType type;
      std::string name;
    };
    std::vector<Check> typed;
    auto add_typed = [&](const std::string& name) {
      typed.push_back({src.open_column(name), src.find_column(name)->type, name});
    };
    for (const auto& f : r.filters) add_typed(f.column);
    if (r.weight_column) add_typed(*r.weight_column);
    std::vector<std::pair<std::string, std::size_t>> attr_cols;
    for (const auto& a : r.attribute_columns) {
      attr_cols.emplace_back(a, src.open_column(a));
      et.attributes[a];
    }

    std::size_t invalid_here = 0;
    for (std::size_t row = 0; row < src.row_count(); ++row) {
      ++pg.report.rows_total;
      auto sk = src.cell(row, src_col), dk = src.cell(row, dst_col);
      if (sk.empty() || dk.empty()) {
        log_skip(r.source, row, "empty endpoint key");
        ++invalid_here;
        continue;
      }
      bool ok = true;
      for (const auto& c : typed) {
        if (!coerces(src.cell(row, c.col), c.type)) {
          log_skip(r.source, row, "column " + c.name + " is not " + std::string(to_string(c.type)));
          ok = false;
          break;
        }
      }
      if (!ok) {
        ++invalid_here;
        continue;
      }
      bool keep = true;
      for (std::size_t i = 0; i < r.filters.size() && keep; ++i)
        keep = detail::predicate_holds(src.cell(row, typed[i].col), typed[i].type, r.filters[i]);
      if (!keep) {
        ++pg.report.rows_filtered;
        continue;
      }
      ++pg.report.rows_kept;
      et.src.push_back(pg.nodes[et.src_table].get_or_add(sk));
      et.dst.push_back(pg.nodes[et.dst_table].get_or_add(dk));
      if (w_col) et.weights->push_back(*parse_float(src.cell(row, *w_col)));
      for (const auto& [name, col] : attr_cols) et.attributes[name].emplace_back(src.cell(row, col));
      et.source_rows.push_back(row);
    }
    if (src.row_count() > 0 && invalid_here == src.row_count())
      fail(ErrorCode::ExtractionError, "every row of " + r.source + " failed validation for relation " + r.label,
           r.label);
    pg.edges.push_back(std::move(et));
  }

  // Attribute join: the first row of the entity's source whose key matches.
  for (std::size_t t = 0; t < schema.entities.size(); ++t) {
    const auto& e = schema.entities[t];
    if (e.attribute_columns.empty()) continue;
    const auto& src = catalog.at(e.source);
    auto& table = pg.nodes[t];
    const auto key_col = src.open_column(e.key_column);
    std::vector<std::size_t> cols;
    for (const auto& a : e.attribute_columns) {
      cols.push_back(src.open_column(a));
      table.attributes[a].assign(table.size(), "");
    }
    std::vector<bool> filled(table.size(), false);
    for (std::size_t row = 0; row < src.row_count(); ++row) {
      auto id = table.find(src.cell(row, key_col));
      if (!id || filled[*id]) continue;
      filled[*id] = true;
      for (std::size_t i = 0; i < cols.size(); ++i)
        table.attributes[e.attribute_columns[i]][*id] = std::string(src.cell(row, cols[i]));
    }
  }
  return pg;
}

}  // namespace aag::graph

#pragma once

#include <set>
#include <string>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/graph/source.hpp"

namespace aag::graph {

namespace detail {

inline const json* column_with_role(const json& source, std::string_view role) {
  for (const auto& c : source.at("columns"))
    if (c.value("role", "") == role) return &c;
  return nullptr;
}

}  // namespace detail

/// Rule-based schema selection from the column roles of a catalog excerpt
/// (SourceCatalog::describe()). Purchase-oriented tasks (recommend, purchase,
/// merchant, buy) yield user -> merchant "purchase" edges; every other task
/// yields user -> user "transfer" edges weighted by the weight-role column.
inline SchemaSpec derive_schema_from_roles(std::string_view task, const json& catalog) {
  if (!catalog.is_array() || catalog.empty()) fail(ErrorCode::SchemaInferenceFailed, "catalog is empty");
  std::set<std::string> words;
  for (auto& t : text::tokenize(task)) words.insert(t);
  bool purchase = false;
  for (const char* w : {"recommend", "recommendation", "recommendations", "purchase", "purchases", "merchant",
                        "merchants", "buy"})
    purchase = purchase || words.count(w);
  const std::string dst_role = purchase ? "merchant-key" : "counterparty-key";

  for (const auto& s : catalog) {
    const auto* src = detail::column_with_role(s, "entity-key");
    const auto* dst = detail::column_with_role(s, dst_role);
    if (!src || !dst) continue;
    const auto* weight = detail::column_with_role(s, "weight");
    const auto id = s.at("id").get<std::string>();
    const auto src_col = src->at("name").get<std::string>();
    const auto dst_col = dst->at("name").get<std::string>();

    SchemaSpec spec;
    spec.entities.push_back({"user", id, src_col, {}});
    RelationSpec rel;
    rel.source = id;
    rel.src_entity = "user";
    rel.src_column = src_col;
    rel.dst_column = dst_col;
    if (purchase) {
      spec.entities.push_back({"merchant", id, dst_col, {}});
      rel.label = "purchase";
      rel.dst_entity = "merchant";
    } else {
      rel.label = "transfer";
      rel.dst_entity = "user";
    }
    if (weight) rel.weight_column = weight->at("name").get<std::string>();
    for (const auto& c : s.at("columns")) {
      const auto role = c.value("role", "");
      if (role == "time" || role == "id") rel.attribute_columns.push_back(c.at("name").get<std::string>());
    }
    spec.relations.push_back(std::move(rel));
    return spec;
  }
  fail(ErrorCode::SchemaInferenceFailed, "no source has both an entity-key and a " + dst_role + " column");
}

inline SchemaSpec derive_schema_from_roles(std::string_view task, const SourceCatalog& catalog) {
  return derive_schema_from_roles(task, catalog.describe());
}

/// Value of a numeric annotation on the weight column of `relation`, if the
/// catalog excerpt carries one (e.g. the amount separability threshold).
inline std::optional<double> weight_annotation(const json& catalog, const SchemaSpec& schema,
                                               std::string_view relation, std::string_view key) {
  for (const auto& r : schema.relations) {
    if (r.label != relation || !r.weight_column) continue;
    for (const auto& s : catalog)
      if (s.value("id", "") == r.source)
        for (const auto& c : s.at("columns"))
          if (c.value("name", "") == *r.weight_column && c.contains("annotations") &&
              c["annotations"].contains(key) && c["annotations"][key].is_number())
            return c["annotations"][key].get<double>();
  }
  return std::nullopt;
}

}  // namespace aag::graph

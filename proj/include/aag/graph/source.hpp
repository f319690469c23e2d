#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/core/csv.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"

namespace aag::graph {

enum class ColumnType { String, Int, Float, Timestamp };

inline std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::String: return "String";
    case ColumnType::Int: return "Int";
    case ColumnType::Float: return "Float";
    case ColumnType::Timestamp: return "Timestamp";
  }
  return "?";
}

inline ColumnType parse_column_type(const std::string& s) {
  if (s == "String") return ColumnType::String;
  if (s == "Int") return ColumnType::Int;
  if (s == "Float") return ColumnType::Float;
  if (s == "Timestamp") return ColumnType::Timestamp;
  fail(ErrorCode::ConfigError, "unknown column type '" + s + "'", s);
}

inline bool is_numeric(ColumnType t) { return t == ColumnType::Int || t == ColumnType::Float; }

inline std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_float(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// ISO-8601 calendar date with optional time and offset:
/// YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z|(+|-)HH:MM]
inline bool is_iso8601(std::string_view s) {
  auto digits = [&](std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return false;
    for (std::size_t i = pos; i < pos + n; ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  };
  if (!digits(0, 4) || s.size() < 10 || s[4] != '-' || !digits(5, 2) || s[7] != '-' || !digits(8, 2)) return false;
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  std::size_t i = 10;
  if (i == s.size()) return true;
  if (s[i] != 'T' && s[i] != ' ') return false;
  ++i;
  if (!digits(i, 2) || i + 2 >= s.size() || s[i + 2] != ':' || !digits(i + 3, 2)) return false;
  i += 5;
  if (i < s.size() && s[i] == ':') {
    if (!digits(i + 1, 2)) return false;
    i += 3;
    if (i < s.size() && s[i] == '.') {
      ++i;
      std::size_t start = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i == start) return false;
    }
  }
  if (i == s.size()) return true;
  if (s[i] == 'Z') return i + 1 == s.size();
  if (s[i] == '+' || s[i] == '-') return digits(i + 1, 2) && i + 3 < s.size() && s[i + 3] == ':' && digits(i + 4, 2) && i + 6 == s.size();
  return false;
}

inline bool coerces(std::string_view value, ColumnType t) {
  switch (t) {
    case ColumnType::String: return true;
    case ColumnType::Int: return parse_int(value).has_value();
    case ColumnType::Float: return parse_float(value).has_value();
    case ColumnType::Timestamp: return is_iso8601(value);
  }
  return false;
}

struct ColumnInfo {
  std::string name;
  ColumnType type = ColumnType::String;
  std::string role;  // entity-key, counterparty-key, merchant-key, weight, time, id (optional)
  json annotations = json::object();
};

/// One CSV-backed table. Every column read that goes through `open_column`
/// is recorded so callers can audit which columns an extraction touched.
class TabularSource {
 public:
  TabularSource() : accessed_(std::make_shared<Accessed>()) {}
  TabularSource(std::string id, std::vector<ColumnInfo> columns, std::vector<std::vector<std::string>> rows)
      : id_(std::move(id)), columns_(std::move(columns)), rows_(std::move(rows)), accessed_(std::make_shared<Accessed>()) {
    std::set<std::string> names;
    for (const auto& c : columns_)
      if (!names.insert(c.name).second) fail(ErrorCode::ConfigError, "duplicate column " + c.name + " in " + id_, c.name);
  }

  const std::string& id() const { return id_; }
  const std::vector<ColumnInfo>& columns() const { return columns_; }
  std::size_t row_count() const { return rows_.size(); }

  const ColumnInfo* find_column(std::string_view name) const {
    for (const auto& c : columns_)
      if (c.name == name) return &c;
    return nullptr;
  }

  /// Index of `name` for reading; records the access.
  std::size_t open_column(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i].name == name) {
        std::lock_guard lock(accessed_->mu);
        accessed_->names.insert(name);
        return i;
      }
    }
    fail(ErrorCode::CatalogMismatch, "source " + id_ + " has no column " + name, name);
  }

  std::string_view cell(std::size_t row, std::size_t col) const {
    const auto& r = rows_[row];
    return col < r.size() ? std::string_view(r[col]) : std::string_view();
  }
  std::size_t width(std::size_t row) const { return rows_[row].size(); }

  std::set<std::string> accessed_columns() const {
    std::lock_guard lock(accessed_->mu);
    return accessed_->names;
  }
  void reset_access_log() const {
    std::lock_guard lock(accessed_->mu);
    accessed_->names.clear();
  }

 private:
  struct Accessed {
    std::mutex mu;
    std::set<std::string> names;
  };
  std::string id_;
  std::vector<ColumnInfo> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::shared_ptr<Accessed> accessed_;
};

/// Infers a column type from its values: Int if all parse as integers,
/// Float if all parse as numbers, Timestamp if all are ISO-8601, else String.
/// Empty cells are ignored.
inline ColumnType infer_type(const std::vector<std::vector<std::string>>& rows, std::size_t col) {
  bool all_int = true, all_float = true, all_ts = true, any = false;
  for (const auto& r : rows) {
    if (col >= r.size() || r[col].empty()) continue;
    any = true;
    const auto& v = r[col];
    if (all_int && !parse_int(v)) all_int = false;
    if (all_float && !parse_float(v)) all_float = false;
    if (all_ts && !is_iso8601(v)) all_ts = false;
    if (!all_int && !all_float && !all_ts) break;
  }
  if (!any) return ColumnType::String;
  if (all_int) return ColumnType::Int;
  if (all_float) return ColumnType::Float;
  if (all_ts) return ColumnType::Timestamp;
  return ColumnType::String;
}

class SourceCatalog {
 public:
  void add(TabularSource src) {
    if (find(src.id())) fail(ErrorCode::ConfigError, "duplicate source " + src.id(), src.id());
    sources_.push_back(std::move(src));
  }
  const TabularSource* find(std::string_view id) const {
    for (const auto& s : sources_)
      if (s.id() == id) return &s;
    return nullptr;
  }
  const TabularSource& at(std::string_view id) const {
    if (auto* s = find(id)) return *s;
    fail(ErrorCode::CatalogMismatch, "unknown source " + std::string(id), std::string(id));
  }
  const std::vector<TabularSource>& sources() const { return sources_; }
  bool empty() const { return sources_.empty(); }

  /// Catalog excerpt handed to the coordinator: column names, types, roles,
  /// annotations and row counts, never row data.
  json describe() const {
    json out = json::array();
    for (const auto& s : sources_) {
      json cols = json::array();
      for (const auto& c : s.columns()) {
        json jc = {{"name", c.name}, {"type", to_string(c.type)}};
        if (!c.role.empty()) jc["role"] = c.role;
        if (!c.annotations.empty()) jc["annotations"] = c.annotations;
        cols.push_back(jc);
      }
      out.push_back({{"id", s.id()}, {"columns", cols}, {"rows", s.row_count()}});
    }
    return out;
  }

 private:
  std::vector<TabularSource> sources_;
};

/// Reads catalog.json from `data_dir`:
///   {"sources": [{"id": "transactions", "file": "transactions.csv",
///                 "columns": [{"name": "amount", "type": "Float", "role": "weight",
///                              "threshold": 10000}, ...]}]}
/// Columns absent from the sidecar, or listed without a type, are inferred.
inline SourceCatalog load_catalog(const std::filesystem::path& data_dir) {
  const auto sidecar = data_dir / "catalog.json";
  json cat;
  try {
    cat = json::parse(text::read_file(sidecar));
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "catalog.json: " + std::string(e.what()), sidecar.string());
  }
  SourceCatalog catalog;
  for (const auto& js : cat.value("sources", json::array())) {
    const auto id = js.at("id").get<std::string>();
    const auto file = js.value("file", id + ".csv");
    csv::Document doc;
    try {
      doc = csv::read(data_dir / file);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) fail(ErrorCode::ConfigError, file + ": " + e.detail(), file);
      throw;
    }
    std::map<std::string, json> declared;
    for (const auto& jc : js.value("columns", json::array())) declared[jc.at("name").get<std::string>()] = jc;

    std::vector<ColumnInfo> columns;
    for (std::size_t i = 0; i < doc.header.size(); ++i) {
      ColumnInfo c;
      c.name = doc.header[i];
      auto it = declared.find(c.name);
      if (it != declared.end() && it->second.contains("type"))
        c.type = parse_column_type(it->second.at("type").get<std::string>());
      else
        c.type = infer_type(doc.rows, i);
      if (it != declared.end()) {
        c.role = it->second.value("role", "");
        for (const auto& [k, v] : it->second.items())
          if (k != "name" && k != "type" && k != "role") c.annotations[k] = v;
      }
      columns.push_back(std::move(c));
    }
    for (const auto& [name, _] : declared)
      if (std::none_of(columns.begin(), columns.end(), [&](const ColumnInfo& c) { return c.name == name; }))
        fail(ErrorCode::CatalogMismatch, "catalog lists column " + name + " missing from " + file, name);
    catalog.add(TabularSource(id, std::move(columns), std::move(doc.rows)));
  }
  if (catalog.empty()) fail(ErrorCode::ConfigError, "catalog.json lists no sources", sidecar.string());
  return catalog;
}

}  // namespace aag::graph

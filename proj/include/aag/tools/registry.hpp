#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/tools/value.hpp"

namespace aag::tools {

using text::fmt_double;
using text::join;
using text::utf8_prefix;

struct InputSlot {
  std::string name;
  Kind kind = Kind::Graph;
  bool required = true;
  bool directed_required = false;
  bool weighted_required = false;
};

enum class ParamType { Integer, Number, String, Boolean };

inline std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::Integer: return "integer";
    case ParamType::Number: return "number";
    case ParamType::String: return "string";
    case ParamType::Boolean: return "boolean";
  }
  return "?";
}

inline ParamType parse_param_type(const std::string& s) {
  for (auto t : {ParamType::Integer, ParamType::Number, ParamType::String, ParamType::Boolean})
    if (to_string(t) == s) return t;
  fail(ErrorCode::DescriptorInvalid, "unknown param type '" + s + "'", s);
}

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Number;
  std::optional<double> min;
  std::optional<double> max;
  bool min_exclusive = false;
  bool max_exclusive = false;
  std::vector<std::string> choices;  // String params only; empty = free text
  std::optional<json> default_value;  // absent = optional without default
  std::string description;
};

struct ToolDescriptor {
  std::string name;
  std::string family;
  std::string algorithm;  // knowledge base algorithm id
  std::string description;
  std::vector<InputSlot> inputs;
  std::vector<ParamSpec> params;
  Kind output_kind = Kind::Scalar;
  std::string execution_notes;

  const InputSlot* slot(std::string_view n) const {
    for (const auto& s : inputs)
      if (s.name == n) return &s;
    return nullptr;
  }
  const ParamSpec* param(std::string_view n) const {
    for (const auto& p : params)
      if (p.name == n) return &p;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Descriptor JSON

inline json to_json(const ParamSpec& p) {
  json j = {{"name", p.name}, {"type", to_string(p.type)}};
  if (p.min) j["min"] = *p.min;
  if (p.max) j["max"] = *p.max;
  if (p.min_exclusive) j["min_exclusive"] = true;
  if (p.max_exclusive) j["max_exclusive"] = true;
  if (!p.choices.empty()) j["choices"] = p.choices;
  if (p.default_value) j["default"] = *p.default_value;
  if (!p.description.empty()) j["description"] = p.description;
  return j;
}

inline json to_json(const ToolDescriptor& d) {
  json inputs = json::array(), params = json::array();
  for (const auto& s : d.inputs) {
    json constraints = json::array();
    if (s.directed_required) constraints.push_back("directed-required");
    if (s.weighted_required) constraints.push_back("weighted-required");
    inputs.push_back({{"name", s.name}, {"kind", to_string(s.kind)}, {"required", s.required},
                      {"constraints", constraints}});
  }
  for (const auto& p : d.params) params.push_back(to_json(p));
  return {{"name", d.name},       {"family", d.family}, {"algorithm", d.algorithm},
          {"description", d.description}, {"inputs", inputs}, {"params", params},
          {"output_kind", to_string(d.output_kind)}, {"execution_notes", d.execution_notes}};
}

inline ToolDescriptor descriptor_from_json(const json& j) {
  try {
    ToolDescriptor d;
    d.name = j.at("name").get<std::string>();
    d.family = j.value("family", "");
    d.algorithm = j.value("algorithm", "");
    d.description = j.value("description", "");
    d.execution_notes = j.value("execution_notes", "");
    d.output_kind = parse_kind(j.at("output_kind").get<std::string>());
    for (const auto& js : j.at("inputs")) {
      InputSlot s{js.at("name").get<std::string>(), parse_kind(js.at("kind").get<std::string>()),
                  js.value("required", true)};
      for (const auto& c : js.value("constraints", json::array())) {
        if (c == "directed-required") s.directed_required = true;
        else if (c == "weighted-required") s.weighted_required = true;
        else fail(ErrorCode::DescriptorInvalid, "unknown constraint " + dump(c), s.name);
      }
      d.inputs.push_back(std::move(s));
    }
    for (const auto& jp : j.at("params")) {
      ParamSpec p;
      p.name = jp.at("name").get<std::string>();
      p.type = parse_param_type(jp.at("type").get<std::string>());
      if (jp.contains("min")) p.min = jp.at("min").get<double>();
      if (jp.contains("max")) p.max = jp.at("max").get<double>();
      p.min_exclusive = jp.value("min_exclusive", false);
      p.max_exclusive = jp.value("max_exclusive", false);
      p.choices = jp.value("choices", std::vector<std::string>{});
      if (jp.contains("default")) p.default_value = jp.at("default");
      p.description = jp.value("description", "");
      d.params.push_back(std::move(p));
    }
    return d;
  } catch (const json::exception& e) {
    fail(ErrorCode::DescriptorInvalid, std::string("malformed descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation shared by invoke() and the planner's DAG checks

inline std::string range_text(const ParamSpec& p) {
  std::string s = p.min ? (p.min_exclusive ? "(" : "[") + fmt_double(*p.min) : "(-inf";
  s += ", ";
  s += p.max ? fmt_double(*p.max) + (p.max_exclusive ? ")" : "]") : "inf)";
  return s;
}

/// Empty string when `v` satisfies `p`, otherwise a description of the problem.
inline std::string param_problem(const ParamSpec& p, const json& v) {
  switch (p.type) {
    case ParamType::Integer:
      if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == std::floor(v.get<double>())))
        return "expected integer, got " + dump(v);
      break;
    case ParamType::Number:
      if (!v.is_number()) return "expected number, got " + dump(v);
      break;
    case ParamType::String:
      if (!v.is_string()) return "expected string, got " + dump(v);
      if (!p.choices.empty() &&
          std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
        return "expected one of " + join(p.choices, "|") + ", got " + dump(v);
      return {};
    case ParamType::Boolean:
      if (!v.is_boolean()) return "expected boolean, got " + dump(v);
      return {};
  }
  const double x = v.get<double>();
  const bool below = p.min && (p.min_exclusive ? x <= *p.min : x < *p.min);
  const bool above = p.max && (p.max_exclusive ? x >= *p.max : x > *p.max);
  if (below || above) return "expected value in " + range_text(p) + ", got " + dump(v);
  return {};
}

/// Validates `given` against the descriptor and returns it with defaults
/// filled in. Throws SchemaViolation naming the parameter.
inline json check_params(const ToolDescriptor& d, const json& given) {
  if (!given.is_null() && !given.is_object())
    fail(ErrorCode::SchemaViolation, d.name + ": params must be an object", "params");
  json out = json::object();
  if (given.is_object())
    for (const auto& [name, v] : given.items()) {
      const auto* p = d.param(name);
      if (!p) fail(ErrorCode::SchemaViolation, d.name + ": unknown parameter '" + name + "'", name);
      if (auto problem = param_problem(*p, v); !problem.empty())
        fail(ErrorCode::SchemaViolation, d.name + ": parameter '" + name + "' " + problem, name);
      out[name] = p->type == ParamType::Integer ? json(static_cast<std::int64_t>(v.get<double>())) : v;
    }
  for (const auto& p : d.params)
    if (!out.contains(p.name) && p.default_value) out[p.name] = *p.default_value;
  return out;
}

/// Kind check for one slot. Throws SchemaViolation naming the slot.
inline void check_slot_kind(const ToolDescriptor& d, const std::string& slot, Kind given) {
  const auto* s = d.slot(slot);
  if (!s) fail(ErrorCode::SchemaViolation, d.name + ": unknown input slot '" + slot + "'", slot);
  if (s->kind != given)
    fail(ErrorCode::SchemaViolation,
         d.name + ": slot '" + slot + "' expects " + std::string(to_string(s->kind)) + ", given " +
             std::string(to_string(given)),
         slot);
}

inline void check_required_slots(const ToolDescriptor& d, const std::set<std::string>& bound) {
  for (const auto& s : d.inputs)
    if (s.required && !bound.count(s.name))
      fail(ErrorCode::SchemaViolation, d.name + ": required slot '" + s.name + "' is not bound", s.name);
}

/// Graph constraints: directed-required and weighted-required.
inline void check_constraints(const ToolDescriptor& d, const std::string& slot, bool directed, bool weighted) {
  const auto* s = d.slot(slot);
  if (!s) return;
  if (s->directed_required && !directed)
    fail(ErrorCode::ConstraintViolation, d.name + ": slot '" + slot + "' requires a directed graph", slot);
  if (s->weighted_required && !weighted)
    fail(ErrorCode::ConstraintViolation, d.name + ": slot '" + slot + "' requires a weighted graph", slot);
}

inline void check_descriptor(const ToolDescriptor& d) {
  if (d.name.empty()) fail(ErrorCode::DescriptorInvalid, "tool name is empty");
  std::set<std::string> seen;
  for (const auto& s : d.inputs)
    if (!seen.insert(s.name).second)
      fail(ErrorCode::DescriptorInvalid, d.name + ": duplicate slot '" + s.name + "'", s.name);
  seen.clear();
  for (const auto& p : d.params) {
    if (!seen.insert(p.name).second)
      fail(ErrorCode::DescriptorInvalid, d.name + ": duplicate parameter '" + p.name + "'", p.name);
    if (p.min && p.max && *p.min > *p.max)
      fail(ErrorCode::DescriptorInvalid, d.name + ": empty range for '" + p.name + "'", p.name);
    if (p.default_value)
      if (auto problem = param_problem(p, *p.default_value); !problem.empty())
        fail(ErrorCode::DescriptorInvalid, d.name + ": default of '" + p.name + "' invalid: " + problem, p.name);
  }
}

// ---------------------------------------------------------------------------
// Registry

using Inputs = std::map<std::string, Value>;
using Executor = std::function<Value(const Inputs&, const json& params)>;

struct InvocationRequest {
  std::string tool;
  Inputs inputs;
  json params = json::object();
};

struct ResultStats {
  std::size_t item_count = 0;
  std::size_t payload_bytes = 0;
};

struct RawResult {
  Kind kind = Kind::Scalar;
  Value value;
  ResultStats stats;
  json params;  // effective parameters, defaults filled
};

inline json to_json(const ResultStats& s) {
  return {{"item_count", s.item_count}, {"payload_bytes", s.payload_bytes}};
}

inline ResultStats stats_of(const Value& v) { return {item_count(v), dump(to_json(v)).size()}; }

class ToolRegistry {
 public:
  void register_tool(ToolDescriptor d, Executor exec) {
    check_descriptor(d);
    if (tools_.count(d.name)) fail(ErrorCode::DuplicateTool, "tool '" + d.name + "' already registered", d.name);
    auto name = d.name;
    tools_.emplace(std::move(name), Entry{std::move(d), std::move(exec)});
  }

  bool contains(const std::string& name) const { return tools_.count(name) > 0; }
  std::size_t size() const { return tools_.size(); }

  const ToolDescriptor& describe(const std::string& name) const { return entry(name).descriptor; }

  /// Sorted by name.
  std::vector<const ToolDescriptor*> descriptors() const {
    std::vector<const ToolDescriptor*> out;
    for (const auto& [_, e] : tools_) out.push_back(&e.descriptor);
    return out;
  }

  json describe_all() const {
    json out = json::array();
    for (const auto* d : descriptors()) out.push_back(to_json(*d));
    return out;
  }

  /// Checks kinds, constraints and parameters; returns the effective params.
  json validate(const InvocationRequest& req) const {
    const auto& d = entry(req.tool).descriptor;
    std::set<std::string> bound;
    for (const auto& [slot, v] : req.inputs) {
      check_slot_kind(d, slot, kind_of(v));
      if (auto* g = std::get_if<GraphValue>(&v)) {
        if (!g->csr) fail(ErrorCode::SchemaViolation, d.name + ": slot '" + slot + "' holds no graph", slot);
        check_constraints(d, slot, g->csr->directed, g->csr->weights.has_value());
      }
      bound.insert(slot);
    }
    check_required_slots(d, bound);
    return check_params(d, req.params);
  }

  RawResult invoke(const InvocationRequest& req) const {
    const auto& e = entry(req.tool);
    auto params = validate(req);
    Value out;
    try {
      out = e.executor(req.inputs, params);
    } catch (const Error& inner) {
      throw Error(ErrorCode::ExecutorError, req.tool + ": " + inner.what(), inner.subject(), inner.code());
    } catch (const std::exception& inner) {
      throw Error(ErrorCode::ExecutorError, req.tool + ": " + inner.what(), req.tool);
    }
    if (kind_of(out) != e.descriptor.output_kind)
      fail(ErrorCode::ExecutorError,
           req.tool + ": executor returned " + std::string(to_string(kind_of(out))) + ", descriptor says " +
               std::string(to_string(e.descriptor.output_kind)),
           req.tool);
    RawResult r{kind_of(out), std::move(out), {}, std::move(params)};
    r.stats = stats_of(r.value);
    return r;
  }

 private:
  struct Entry {
    ToolDescriptor descriptor;
    Executor executor;
  };

  const Entry& entry(const std::string& name) const {
    auto it = tools_.find(name);
    if (it == tools_.end()) fail(ErrorCode::UnknownTool, "no tool named '" + name + "'", name);
    return it->second;
  }

  std::map<std::string, Entry> tools_;
};

}  // namespace aag::tools

#pragma once

#include <set>
#include <string>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/graph/property_graph.hpp"
#include "aag/tools/value.hpp"

namespace aag::coord {

enum class Role { Plan, Schema, Refine, Report };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Plan: return "plan";
    case Role::Schema: return "schema";
    case Role::Refine: return "refine";
    case Role::Report: return "report";
  }
  return "?";
}

inline std::string schema_id(Role r) { return std::string(to_string(r)) + ".v1"; }

struct CoordinatorRequest {
  Role role = Role::Plan;
  json payload = json::object();
};

struct CoordinatorResponse {
  json value;
  json transcript = json::array();  // one entry per attempt
};

/// Raised when both attempts fail validation; keeps every transcript.
class CoordinatorError : public Error {
 public:
  CoordinatorError(std::string message, json transcript)
      : Error(ErrorCode::SchemaValidationFailed, std::move(message)), transcript_(std::move(transcript)) {}
  const json& transcript() const { return transcript_; }

 private:
  json transcript_;
};

// ---------------------------------------------------------------------------
// Response schemas. Each validator returns an empty string when the value
// conforms, otherwise the first problem found.

namespace schema {

inline const std::set<std::string>& refine_ops() {
  static const std::set<std::string> ops{"set_param",     "reset_param", "substitute", "insert_adapter",
                                         "remove_adapter", "accept",      "fail"};
  return ops;
}

inline std::string binding(const json& b, std::size_t stage_index, const std::string& where) {
  if (!b.is_object()) return where + ": binding must be an object";
  const int forms = int(b.contains("source")) + int(b.contains("stage")) + int(b.contains("literal"));
  if (forms != 1) return where + ": binding needs exactly one of source, stage, literal";
  if (b.contains("source") && !b["source"].is_string()) return where + ": source must be a string";
  if (b.contains("stage")) {
    if (!b["stage"].is_string()) return where + ": stage must be a string";
    const auto ref = b["stage"].get<std::string>();
    std::size_t k = 0;
    if (ref.size() < 2 || ref[0] != 's' || ref.find_first_not_of("0123456789", 1) != std::string::npos ||
        (k = std::stoul(ref.substr(1))) < 1 || k > stage_index)
      return where + ": stage reference '" + ref + "' must name an earlier stage";
    if (b.contains("selector") &&
        (!b["selector"].is_string() || !tools::known_selectors().count(b["selector"].get<std::string>())))
      return where + ": unknown selector " + dump(b["selector"]);
  }
  return {};
}

inline std::string plan(const json& v) {
  if (!v.is_object()) return "response must be an object";
  if (!v.contains("stages") || !v["stages"].is_array()) return "missing array 'stages'";
  if (v["stages"].empty()) return "'stages' must not be empty";
  if (v.contains("focus") && !v["focus"].is_null() && !v["focus"].is_string()) return "focus must be a string";
  std::size_t i = 0;
  for (const auto& s : v["stages"]) {
    const auto where = "stages[" + std::to_string(i) + "]";
    if (!s.is_object()) return where + " must be an object";
    if (!s.contains("goal") || !s["goal"].is_string() || s["goal"].get<std::string>().empty())
      return where + ": missing goal";
    if (s["goal"].get<std::string>().size() > 256) return where + ": goal longer than 256 characters";
    if (!s.contains("suggested_family") || !s["suggested_family"].is_string())
      return where + ": missing suggested_family";
    if (!s.contains("bindings") || !s["bindings"].is_object()) return where + ": missing object 'bindings'";
    for (const auto& [slot, b] : s["bindings"].items())
      if (auto e = binding(b, i, where + ".bindings." + slot); !e.empty()) return e;
    if (s.contains("params") && !s["params"].is_object()) return where + ": params must be an object";
    if (s.contains("gate"))
      if (auto e = binding(s["gate"], i, where + ".gate"); !e.empty()) return e;
    if (s.contains("directive") && !s["directive"].is_object()) return where + ": directive must be an object";
    ++i;
  }
  return {};
}

inline std::string schema_spec(const json& v) {
  try {
    auto spec = graph::schema_from_json(v);
    if (spec.relations.empty()) return "schema declares no relation";
  } catch (const Error& e) {
    return e.detail();
  }
  return {};
}

inline std::string refine(const json& v) {
  if (!v.is_object() || !v.contains("actions") || !v["actions"].is_array()) return "missing array 'actions'";
  for (const auto& a : v["actions"]) {
    if (!a.is_object() || !a.contains("op") || !a["op"].is_string()) return "action without op";
    const auto op = a["op"].get<std::string>();
    if (!refine_ops().count(op)) return "unknown op '" + op + "'";
    if (!a.contains("node") || !a["node"].is_string()) return op + ": missing node";
    if ((op == "set_param" || op == "reset_param") && (!a.contains("param") || !a["param"].is_string()))
      return op + ": missing param";
    if (op == "set_param" && !a.contains("value")) return "set_param: missing value";
    if ((op == "substitute" || op == "insert_adapter") && (!a.contains("tool") || !a["tool"].is_string()))
      return op + ": missing tool";
    if (op == "insert_adapter" && (!a.contains("slot") || !a["slot"].is_string())) return "insert_adapter: missing slot";
  }
  return {};
}

/// `payload.stages[].id` with status Ok are the only citable ids.
inline std::string report(const json& v, const json& payload) {
  if (!v.is_object()) return "response must be an object";
  if (!v.contains("title") || !v["title"].is_string()) return "missing title";
  if (!v.contains("claims") || !v["claims"].is_array()) return "missing array 'claims'";
  std::set<std::string> citable;
  for (const auto& s : payload.value("stages", json::array()))
    if (s.value("status", "") == "Ok") citable.insert(s.value("id", ""));
  for (const auto& c : v["claims"]) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string() || c["text"].get<std::string>().empty())
      return "claim without text";
    if (!c.contains("cites") || !c["cites"].is_array() || c["cites"].empty()) return "claim without citations";
    for (const auto& id : c["cites"])
      if (!id.is_string() || !citable.count(id.get<std::string>()))
        return "claim cites " + dump(id) + ", which is not a completed stage";
  }
  return {};
}

inline std::string validate(Role role, const json& value, const json& payload) {
  switch (role) {
    case Role::Plan: return plan(value);
    case Role::Schema: return schema_spec(value);
    case Role::Refine: return refine(value);
    case Role::Report: return report(value, payload);
  }
  return "unknown role";
}

}  // namespace schema

inline constexpr std::size_t kDefaultContextBudget = 48'000;

/// The decision boundary. complete() enforces the context budget, validates
/// the reply against the role's schema and retries once with the validation
/// error appended.
class Coordinator {
 public:
  explicit Coordinator(std::size_t context_budget = kDefaultContextBudget) : budget_(context_budget) {}
  virtual ~Coordinator() = default;

  virtual std::string name() const = 0;
  std::size_t context_budget() const { return budget_; }

  CoordinatorResponse complete(const CoordinatorRequest& req) {
    const auto size = dump(req.payload).size();
    if (size > budget_)
      fail(ErrorCode::BudgetExceeded,
           std::string(to_string(req.role)) + " payload is " + std::to_string(size) + " chars, budget " +
               std::to_string(budget_),
           std::string(to_string(req.role)));

    CoordinatorResponse resp;
    std::string problem;
    for (int attempt = 1; attempt <= 2; ++attempt) {
      const auto reply = ask(req, problem);
      json entry = {{"role", to_string(req.role)}, {"schema", schema_id(req.role)}, {"attempt", attempt},
                    {"reply", reply}};
      json value;
      try {
        value = json::parse(reply);
        problem = schema::validate(req.role, value, req.payload);
      } catch (const json::parse_error& e) {
        problem = std::string("reply is not JSON: ") + e.what();
      }
      if (!problem.empty()) entry["error"] = problem;
      resp.transcript.push_back(std::move(entry));
      if (problem.empty()) {
        resp.value = std::move(value);
        return resp;
      }
    }
    throw CoordinatorError(std::string(to_string(req.role)) + " reply failed " + schema_id(req.role) +
                               " twice: " + problem,
                           resp.transcript);
  }

 protected:
  /// Raw reply text. `previous_error` is empty on the first attempt.
  virtual std::string ask(const CoordinatorRequest& req, const std::string& previous_error) = 0;

 private:
  std::size_t budget_;
};

}  // namespace aag::coord

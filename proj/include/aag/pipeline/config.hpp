#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aag/coordinator/coordinator.hpp"
#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/planner/planner.hpp"
#include "aag/tools/distill.hpp"

namespace aag::pipeline {

/// Fails the first `times` executions of `node` with the given class.
struct FaultSpec {
  std::string node;
  std::string error_class = "ParameterOutOfRange";
  std::string param;
  int times = 1;
};

struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path kb_path;
  std::filesystem::path out_dir = "runs";
  std::string run_id;  // empty: "run-<seed>"
  std::string coordinator = "mock";
  json remote = json::object();
  tools::Budget budget;
  std::size_t context_budget = coord::kDefaultContextBudget;
  int max_rounds = planner::kDefaultMaxRounds;
  int width = 4;
  std::uint64_t seed = 0;
  int retrieval_k = 4;
  std::vector<FaultSpec> faults;

  std::filesystem::path run_dir() const { return out_dir / (run_id.empty() ? "run-" + std::to_string(seed) : run_id); }
};

/// Overlays keys present in `j` onto `base`.
inline RunConfig config_from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  try {
    RunConfig c = std::move(base);
    if (j.contains("data")) c.data_dir = j["data"].get<std::string>();
    if (j.contains("kb")) c.kb_path = j["kb"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    c.run_id = j.value("run_id", c.run_id);
    c.coordinator = j.value("coordinator", c.coordinator);
    c.remote = j.value("remote", c.remote);
    if (j.contains("budget")) {
      c.budget.max_items = j["budget"].value("max_items", c.budget.max_items);
      c.budget.max_chars = j["budget"].value("max_chars", c.budget.max_chars);
      c.context_budget = j["budget"].value("context_chars", c.context_budget);
    }
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.width = j.value("width", c.width);
    c.seed = j.value("seed", c.seed);
    c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
    for (const auto& f : j.value("faults", json::array()))
      c.faults.push_back({f.at("node").get<std::string>(), f.value("error_class", "ParameterOutOfRange"),
                          f.value("param", ""), f.value("times", 1)});
    if (c.coordinator != "mock" && c.coordinator != "remote")
      fail(ErrorCode::ConfigError, "coordinator must be mock or remote", "coordinator");
    if (c.width < 1) fail(ErrorCode::ConfigError, "width must be >= 1", "width");
    if (c.max_rounds < 0) fail(ErrorCode::ConfigError, "max_rounds must be >= 0", "max_rounds");
    if (c.retrieval_k < 1) fail(ErrorCode::ConfigError, "retrieval_k must be >= 1", "retrieval_k");
    if (c.budget.max_items == 0 || c.budget.max_chars == 0 || c.context_budget == 0)
      fail(ErrorCode::ConfigError, "budgets must be positive", "budget");
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what(), path.string());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace aag::pipeline

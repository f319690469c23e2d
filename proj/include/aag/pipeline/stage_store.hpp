#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/core/text.hpp"
#include "aag/tools/distill.hpp"
#include "aag/tools/registry.hpp"

namespace aag::pipeline {

enum class StageStatus { Ok, Error, Skipped };

inline std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Ok: return "Ok";
    case StageStatus::Error: return "Error";
    case StageStatus::Skipped: return "Skipped";
  }
  return "?";
}

struct StageOutput {
  std::string id;
  std::string tool;
  StageStatus status = StageStatus::Ok;
  json params = json::object();
  std::optional<tools::RawResult> raw;
  std::optional<tools::DistilledResult> distilled;
  json error = nullptr;    // {error, message, cause?} when status is Error
  std::string skip_reason;
  double elapsed_ms = 0.0;
};

/// raw.json: the full result, or the error / skip record.
inline json raw_json(const StageOutput& s) {
  json j = {{"node", s.id}, {"tool", s.tool}, {"status", to_string(s.status)}, {"params", s.params},
            {"timing", {{"elapsed_ms", s.elapsed_ms}}}};
  if (s.raw) {
    j["kind"] = tools::to_string(s.raw->kind);
    j["stats"] = {{"item_count", s.raw->stats.item_count}, {"payload_bytes", s.raw->stats.payload_bytes}};
    j["value"] = tools::to_json(s.raw->value);
  }
  if (!s.error.is_null()) j["error"] = s.error;
  if (s.status == StageStatus::Skipped) j["reason"] = s.skip_reason;
  return j;
}

inline json distilled_json(const StageOutput& s) {
  if (s.distilled) {
    auto j = tools::to_json(*s.distilled);
    j["status"] = to_string(s.status);
    return j;
  }
  return {{"status", to_string(s.status)}, {"summary_text", nullptr}, {"items", json::array()}, {"omitted_count", 0}};
}

/// Single-writer, multi-reader store keyed by node id. Records are
/// immutable once put; a second put for the same id is rejected.
class StageStore {
 public:
  explicit StageStore(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}

  std::shared_ptr<const StageOutput> put(StageOutput out) {
    auto rec = std::make_shared<const StageOutput>(std::move(out));
    {
      std::lock_guard lock(mu_);
      if (records_.count(rec->id)) fail(ErrorCode::WriteOnceViolation, "stage " + rec->id + " already stored", rec->id);
      records_.emplace(rec->id, rec);
    }
    if (!dir_.empty()) {
      const auto d = dir_ / rec->id;
      std::filesystem::create_directories(d);
      text::write_file(d / "raw.json", dump(raw_json(*rec), 2) + "\n");
      text::write_file(d / "distilled.json", dump(distilled_json(*rec), 2) + "\n");
    }
    return rec;
  }

  std::shared_ptr<const StageOutput> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : it->second;
  }

  bool contains(const std::string& id) const { return get(id) != nullptr; }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : records_) out.push_back(id);
    return out;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const StageOutput>> records_;
};

/// JSON-lines event log. Every event gets a sequence number; wall-clock
/// values only ever appear under "elapsed_ms".
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) fail(ErrorCode::ConfigError, "cannot write " + path.string(), path.string());
  }

  void event(const std::string& name, json fields = json::object()) {
    std::lock_guard lock(mu_);
    fields["seq"] = seq_++;
    fields["event"] = name;
    lines_.push_back(fields);
    if (out_.is_open()) out_ << dump(fields) << '\n' << std::flush;
  }

  std::vector<json> events(const std::string& name = {}) const {
    std::lock_guard lock(mu_);
    std::vector<json> out;
    for (const auto& l : lines_)
      if (name.empty() || l["event"] == name) out.push_back(l);
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<json> lines_;
  std::uint64_t seq_ = 0;
};

}  // namespace aag::pipeline

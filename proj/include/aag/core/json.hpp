#pragma once

#include <string>

#include <json.hpp>

namespace aag {

using json = nlohmann::json;

/// Serializes with sorted keys (nlohmann's default object ordering) and
/// replaces invalid UTF-8 instead of throwing, so arbitrary labels are safe.
inline std::string dump(const json& j, int indent = -1) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

}  // namespace aag

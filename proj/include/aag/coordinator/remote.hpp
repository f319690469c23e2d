#pragma once

#ifdef AAG_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "aag/coordinator/coordinator.hpp"
#include "aag/core/text.hpp"

namespace aag::coord {

struct RemoteConfig {
  std::string base_url;                    // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env = "AAG_API_KEY";
  std::filesystem::path prompts_dir = "assets/prompts";
  int timeout_s = 60;
};

inline RemoteConfig remote_config_from_json(const json& j) {
  RemoteConfig c;
  c.base_url = j.value("base_url", "");
  c.model = j.value("model", "");
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.prompts_dir = j.value("prompts_dir", c.prompts_dir.string());
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  if (c.base_url.empty() || c.model.empty())
    fail(ErrorCode::ConfigError, "remote coordinator needs base_url and model", "remote");
  return c;
}

/// Chat-completion client. The prompt template for each role is read from
/// `<prompts_dir>/<role>.v1.txt`; the request payload follows it as JSON.
class RemoteCoordinator : public Coordinator {
 public:
  RemoteCoordinator(RemoteConfig cfg, std::size_t context_budget = kDefaultContextBudget)
      : Coordinator(context_budget), cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::ConfigError, "base_url needs a scheme", cfg_.base_url);
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    origin_ = cfg_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
#ifndef AAG_WITH_OPENSSL
    if (cfg_.base_url.rfind("https://", 0) == 0)
      fail(ErrorCode::ConfigError, "this build has no TLS support; use an http:// endpoint", cfg_.base_url);
#endif
  }

  std::string name() const override { return "remote:" + cfg_.model; }

 protected:
  std::string ask(const CoordinatorRequest& req, const std::string& previous_error) override {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key) fail(ErrorCode::ConfigError, "environment variable " + cfg_.api_key_env + " is not set");

    std::string user = dump(req.payload, 2);
    if (!previous_error.empty())
      user += "\n\nYour previous reply was rejected by schema " + schema_id(req.role) + ": " + previous_error +
              "\nReply again with corrected JSON only.";
    const json body = {{"model", cfg_.model},
                       {"temperature", 0},
                       {"response_format", {{"type", "json_object"}}},
                       {"messages",
                        {{{"role", "system"}, {"content", prompt(req.role)}}, {{"role", "user"}, {"content", user}}}}};

    httplib::Client client(origin_);
    client.set_connection_timeout(cfg_.timeout_s);
    client.set_read_timeout(cfg_.timeout_s);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    auto res = client.Post(prefix_ + "/chat/completions", headers, dump(body), "application/json");
    if (!res) fail(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()), origin_);
    if (res->status != 200)
      fail(ErrorCode::TransportError, "endpoint answered HTTP " + std::to_string(res->status), origin_);
    try {
      auto reply = json::parse(res->body);
      return strip_fences(reply.at("choices").at(0).at("message").at("content").get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::TransportError, std::string("unexpected completion format: ") + e.what(), origin_);
    }
  }

 private:
  const std::string& prompt(Role role) {
    auto it = prompts_.find(role);
    if (it == prompts_.end())
      it = prompts_.emplace(role, text::read_file(cfg_.prompts_dir / (schema_id(role) + ".txt"))).first;
    return it->second;
  }

  static std::string strip_fences(std::string s) {
    s = text::trim(s);
    if (s.rfind("```", 0) == 0) {
      s.erase(0, s.find('\n') == std::string::npos ? s.size() : s.find('\n') + 1);
      if (auto end = s.rfind("```"); end != std::string::npos) s.erase(end);
    }
    return text::trim(s);
  }

  RemoteConfig cfg_;
  std::string origin_;
  std::string prefix_;
  std::map<Role, std::string> prompts_;
};

}  // namespace aag::coord

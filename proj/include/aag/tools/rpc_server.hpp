#pragma once

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "aag/core/error.hpp"
#include "aag/core/json.hpp"
#include "aag/tools/distill.hpp"
#include "aag/tools/registry.hpp"

namespace aag::tools {

namespace rpc {
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidRequest = -32600;
inline constexpr int kMethodNotFound = -32601;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kInternalError = -32603;
inline constexpr int kUnknownTool = 1001;
inline constexpr int kSchemaViolation = 1002;
inline constexpr int kConstraintViolation = 1003;
inline constexpr int kExecutorError = 1004;

inline int code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownTool: return kUnknownTool;
    case ErrorCode::SchemaViolation: return kSchemaViolation;
    case ErrorCode::ConstraintViolation: return kConstraintViolation;
    case ErrorCode::ExecutorError: return kExecutorError;
    default: return kInvalidParams;
  }
}
}  // namespace rpc

/// Decoded tools/invoke parameters.
struct WireInvoke {
  InvocationRequest request;
  std::optional<DistillDirective> directive;
  bool include_raw = false;
};

/// Body of a successful tools/invoke result, shared with in-process callers
/// so both paths produce identical payloads.
inline json invoke_result_json(const RawResult& raw, const DistilledResult& distilled, const std::string& tool,
                               bool include_raw) {
  json j = {{"tool", tool},
            {"kind", to_string(raw.kind)},
            {"params", raw.params},
            {"stats", to_json(raw.stats)},
            {"distilled", to_json(distilled)}};
  if (include_raw) j["raw"] = to_json(raw.value);
  return j;
}

/// Newline-delimited JSON-RPC 2.0 front end over a registry.
class RpcServer {
 public:
  explicit RpcServer(const ToolRegistry& registry) : registry_(registry) {}

  /// One response line per request line; nullopt for blank lines.
  std::optional<std::string> handle_line(std::string_view line) const {
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) return std::nullopt;
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error&) {
      return dump(error_response(nullptr, rpc::kParseError, "Parse error"));
    }
    return dump(handle(req));
  }

  json handle(const json& req) const {
    if (!req.is_object()) return error_response(nullptr, rpc::kInvalidRequest, "Invalid Request");
    json id = req.contains("id") ? req["id"] : json(nullptr);
    const bool id_ok = req.contains("id") && (id.is_string() || id.is_number_integer());
    if (!id_ok || req.value("jsonrpc", "") != "2.0" || !req.contains("method") || !req["method"].is_string())
      return error_response(id_ok ? id : json(nullptr), rpc::kInvalidRequest, "Invalid Request");

    const auto method = req["method"].get<std::string>();
    const json params = req.value("params", json::object());
    if (!params.is_object()) return error_response(id, rpc::kInvalidParams, "params must be an object");
    try {
      if (method == "tools/list") return result_response(id, {{"tools", registry_.describe_all()}});
      if (method == "tools/describe") {
        if (!params.contains("name") || !params["name"].is_string())
          return error_response(id, rpc::kInvalidParams, "missing string parameter 'name'");
        return result_response(id, to_json(registry_.describe(params["name"].get<std::string>())));
      }
      if (method == "tools/invoke") {
        WireInvoke call;
        try {
          call = decode_invoke(params);
        } catch (const Error& e) {
          return error_response(id, rpc::kInvalidParams, e.detail());
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto raw = registry_.invoke(call.request);
        auto directive = call.directive.value_or(default_directive(raw.kind));
        auto distilled = distill(raw.value, directive, call.request.tool);
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        auto body = invoke_result_json(raw, distilled, call.request.tool, call.include_raw);
        body["timing"] = {{"elapsed_ms", ms}};
        return result_response(id, body);
      }
      return error_response(id, rpc::kMethodNotFound, "Method not found: " + method);
    } catch (const Error& e) {
      json data = {{"error", to_string(e.code())}};
      if (!e.subject().empty()) data["subject"] = e.subject();
      if (e.has_cause()) data["cause"] = to_string(e.cause());
      return error_response(id, rpc::code_for(e.code()), e.detail(), data);
    } catch (const std::exception& e) {
      return error_response(id, rpc::kInternalError, e.what());
    }
  }

  static WireInvoke decode_invoke(const json& params) {
    WireInvoke call;
    if (!params.contains("tool") || !params["tool"].is_string())
      fail(ErrorCode::SchemaViolation, "missing string parameter 'tool'", "tool");
    call.request.tool = params["tool"].get<std::string>();
    const json inputs = params.value("inputs", json::object());
    if (!inputs.is_object()) fail(ErrorCode::SchemaViolation, "'inputs' must be an object", "inputs");
    for (const auto& [slot, v] : inputs.items()) call.request.inputs.emplace(slot, value_from_json(v));
    call.request.params = params.value("params", json::object());
    if (params.contains("directive")) call.directive = directive_from_json(params["directive"]);
    call.include_raw = params.value("include_raw", false);
    return call;
  }

  /// Sequential loop; returns at end of input.
  void serve_stream(std::istream& in, std::ostream& out) const {
    std::string line;
    while (std::getline(in, line))
      if (auto resp = handle_line(line)) {
        out << *resp << '\n';
        out.flush();
      }
  }

 private:
  static json result_response(const json& id, json result) {
    return {{"jsonrpc", "2.0"}, {"id", id}, {"result", std::move(result)}};
  }
  static json error_response(const json& id, int code, const std::string& message, const json& data = nullptr) {
    json err = {{"code", code}, {"message", message}};
    if (!data.is_null()) err["data"] = data;
    return {{"jsonrpc", "2.0"}, {"id", id}, {"error", err}};
  }

  const ToolRegistry& registry_;
};

/// Unix-domain socket transport; one thread per connection.
class SocketServer {
 public:
  SocketServer(const RpcServer& rpc, std::filesystem::path path) : rpc_(rpc), path_(std::move(path)) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    const auto p = path_.string();
    if (p.size() >= sizeof(addr.sun_path))
      fail(ErrorCode::TransportError, "socket path too long: " + p, p);
    std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (listen_fd_ < 0) fail(ErrorCode::TransportError, std::string("socket: ") + std::strerror(errno), p);
    std::filesystem::remove(path_);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      fail(ErrorCode::TransportError, "cannot listen on " + p + ": " + why, p);
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;
  ~SocketServer() { stop(); }

  void stop() {
    if (stopped_.exchange(true)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

  void wait() {
    if (accept_thread_.joinable()) accept_thread_.join();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void accept_loop() {
    while (!stopped_) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        return;
      }
      std::lock_guard lock(mu_);
      client_fds_.push_back(fd);
      workers_.emplace_back([this, fd] { serve_client(fd); });
    }
  }

  void serve_client(int fd) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
      const auto n = ::read(fd, chunk, sizeof chunk);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        auto line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (auto resp = rpc_.handle_line(line)) {
          *resp += '\n';
          if (!write_all(fd, *resp)) {
            close_client(fd);
            return;
          }
        }
      }
    }
    close_client(fd);
  }

  static bool write_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  void close_client(int fd) {
    std::lock_guard lock(mu_);
    std::erase(client_fds_, fd);
    ::close(fd);
  }

  const RpcServer& rpc_;
  std::filesystem::path path_;
  int listen_fd_ = -1;
  std::atomic<bool> stopped_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
};

}  // namespace aag::tools

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace selfedit::remote {

/// Behaviour of the bundled protocol stub.
struct StubScript {
  /// Reply for a chat request; the default returns `canned_reply`.
  std::function<std::string(const std::string& prompt, const nlohmann::json& request)> responder;
  std::string canned_reply = "ok";
  /// Statuses returned, in order, before chat requests start succeeding.
  std::deque<int> chat_failures;
  std::chrono::milliseconds chat_latency{0};

  std::deque<int> finetune_failures;
  /// Applied after the job is recorded, so a client timeout loses the reply
  /// but not the job.
  std::chrono::milliseconds finetune_latency{0};
  int polls_queued = 1;
  int polls_running = 1;
  bool job_fails = false;
  std::string job_error = "training diverged";

  /// When set, requests without "Authorization: Bearer <token>" get 401.
  std::string required_token;
};

struct CapturedRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;
};

/// In-process HTTP server speaking the chat-completions and finetune-job
/// protocol on 127.0.0.1 for contract tests.
class StubServer {
 public:
  explicit StubServer(StubScript script = {});
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  void start(int port = 0, const std::string& host = "127.0.0.1");
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait() const;

  [[nodiscard]] int port() const noexcept;
  [[nodiscard]] std::string base_url() const;

  [[nodiscard]] std::vector<CapturedRequest> requests() const;
  /// Chat prompts received, in arrival order.
  [[nodiscard]] std::vector<std::string> prompts() const;
  [[nodiscard]] int jobs_created() const;
  /// Status history reported for a job, one entry per poll.
  [[nodiscard]] std::vector<std::string> job_history(const std::string& job_id) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace selfedit::remote

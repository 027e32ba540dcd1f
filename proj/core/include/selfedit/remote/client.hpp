#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfedit/core/types.hpp"

namespace selfedit::remote {

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};

  /// Sleep before attempt `attempt` (1-based; attempt 1 has none).
  [[nodiscard]] std::chrono::milliseconds backoff(int attempt) const;
};

/// Where and how to reach a service. The bearer token is read from the
/// environment variable named by token_env on every request and is never
/// stored or serialised.
struct EndpointConfig {
  std::string base_url;
  std::string token_env;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  int max_concurrency = 4;
  std::chrono::milliseconds poll_interval{1000};
  std::chrono::milliseconds job_deadline{std::chrono::hours(6)};

  /// Throws Error(kConfigError) for a missing URL/model or bad limits.
  void validate() const;
};

nlohmann::json to_json(const EndpointConfig& config);
EndpointConfig endpoint_config_from_json(const nlohmann::json& value, const std::string& path);

enum class JobStatus { kQueued, kRunning, kSucceeded, kFailed };

std::string_view to_string(JobStatus status) noexcept;
JobStatus job_status_from_string(std::string_view name);

struct FinetuneJob {
  std::string job_id;
  JobStatus status = JobStatus::kQueued;
  std::string fine_tuned_model;
  std::string error;

  [[nodiscard]] bool terminal() const noexcept {
    return status == JobStatus::kSucceeded || status == JobStatus::kFailed;
  }
};

/// Request bodies. Both throw Error(kSchemaViolation) on invalid input.
nlohmann::json chat_request(const std::string& model, std::string_view prompt, const SamplingParams& sampling,
                            bool send_seed = true);
void validate_chat_request(const nlohmann::json& body);
nlohmann::json finetune_request(const std::string& model, const std::string& training_file,
                                const FinetuneConfig& config, std::uint64_t seed, const std::string& dedupe_key);
void validate_finetune_request(const nlohmann::json& body);

/// JSON lines of {"prompt", "completion"}; plain documents have an empty
/// prompt.
std::string training_file_jsonl(const std::vector<TrainingDocument>& documents);

/// Stable key identifying one logical finetune submission.
std::string dedupe_key(const std::string& model, const std::string& training_file, const FinetuneConfig& config,
                       std::uint64_t seed);

/// HTTP client for the chat-completions and finetune-job protocol. Safe for
/// concurrent use; at most max_concurrency requests are in flight.
class Client {
 public:
  explicit Client(EndpointConfig config);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  [[nodiscard]] const EndpointConfig& config() const noexcept { return config_; }

  /// POST /chat/completions. Retries transport errors, 429 and 5xx.
  /// Exhausted retries throw Error(kBackendUnavailable); other non-2xx
  /// statuses throw Error(kHttpStatus) carrying the body. Truncation
  /// (finish_reason "length") sets Generation::truncated.
  [[nodiscard]] Generation chat(std::string_view prompt, const SamplingParams& sampling,
                                const std::string& model) const;

  /// POST /finetune with an Idempotency-Key header, so retries of one
  /// logical job never create a second job.
  [[nodiscard]] FinetuneJob submit_finetune(const std::vector<TrainingDocument>& documents,
                                            const FinetuneConfig& config, const std::string& model,
                                            std::uint64_t seed) const;

  /// GET /finetune/{job_id}.
  [[nodiscard]] FinetuneJob poll_job(const std::string& job_id) const;

  /// Polls until the job is terminal. Throws Error(kJobFailed) with the
  /// service message, or Error(kDeadlineExceeded).
  FinetuneJob wait_for_job(const std::string& job_id,
                           const std::function<void(const FinetuneJob&)>& on_status = {}) const;

 private:
  struct Impl;
  nlohmann::json send(const std::string& method, const std::string& path, const nlohmann::json* body,
                      const std::string& idempotency_key) const;

  EndpointConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace selfedit::remote

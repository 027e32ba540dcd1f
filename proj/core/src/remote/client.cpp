#include "selfedit/remote/client.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::remote {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds(0);
  double ms = static_cast<double>(initial_backoff.count());
  for (int i = 2; i < attempt; ++i) ms *= multiplier;
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

void EndpointConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
    throw Error(ErrorCode::kConfigError, "endpoint base_url must start with http:// or https://");
  if (model.empty()) throw Error(ErrorCode::kConfigError, "endpoint model must be set");
  if (retry.max_attempts < 1 || retry.multiplier < 1.0 || max_concurrency < 1 || timeout.count() <= 0 ||
      poll_interval.count() < 0 || job_deadline.count() <= 0)
    throw Error(ErrorCode::kConfigError, "endpoint limits must be positive");
}

json to_json(const EndpointConfig& c) {
  return {{"base_url", c.base_url},
          {"token_env", c.token_env},
          {"model", c.model},
          {"timeout_ms", c.timeout.count()},
          {"retry",
           {{"max_attempts", c.retry.max_attempts},
            {"initial_backoff_ms", c.retry.initial_backoff.count()},
            {"multiplier", c.retry.multiplier},
            {"max_backoff_ms", c.retry.max_backoff.count()}}},
          {"max_concurrency", c.max_concurrency},
          {"poll_interval_ms", c.poll_interval.count()},
          {"job_deadline_ms", c.job_deadline.count()}};
}

namespace {

template <typename T>
T field(const json& obj, std::string_view key, const std::string& path, T fallback) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw SchemaError(join_path(path, key), "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw SchemaError(join_path(path, key), "expected an integer");
    } else {
      if (!it->is_number()) throw SchemaError(join_path(path, key), "expected a number");
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(join_path(path, key), e.what());
  }
}

}  // namespace

EndpointConfig endpoint_config_from_json(const json& value, const std::string& path) {
  check_object_keys(value, {"base_url", "token_env", "model", "timeout_ms", "retry", "max_concurrency",
                            "poll_interval_ms", "job_deadline_ms"},
                    path);
  EndpointConfig c;
  c.base_url = field<std::string>(value, "base_url", path, c.base_url);
  c.token_env = field<std::string>(value, "token_env", path, c.token_env);
  c.model = field<std::string>(value, "model", path, c.model);
  c.timeout = std::chrono::milliseconds(field<long long>(value, "timeout_ms", path, c.timeout.count()));
  c.max_concurrency = field<int>(value, "max_concurrency", path, c.max_concurrency);
  c.poll_interval =
      std::chrono::milliseconds(field<long long>(value, "poll_interval_ms", path, c.poll_interval.count()));
  c.job_deadline = std::chrono::milliseconds(field<long long>(value, "job_deadline_ms", path, c.job_deadline.count()));
  if (value.contains("retry")) {
    const auto& r = value["retry"];
    const std::string rp = join_path(path, "retry");
    check_object_keys(r, {"max_attempts", "initial_backoff_ms", "multiplier", "max_backoff_ms"}, rp);
    c.retry.max_attempts = field<int>(r, "max_attempts", rp, c.retry.max_attempts);
    c.retry.initial_backoff =
        std::chrono::milliseconds(field<long long>(r, "initial_backoff_ms", rp, c.retry.initial_backoff.count()));
    c.retry.multiplier = field<double>(r, "multiplier", rp, c.retry.multiplier);
    c.retry.max_backoff =
        std::chrono::milliseconds(field<long long>(r, "max_backoff_ms", rp, c.retry.max_backoff.count()));
  }
  return c;
}

std::string_view to_string(JobStatus status) noexcept {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kSucceeded: return "succeeded";
    case JobStatus::kFailed: return "failed";
  }
  return "queued";
}

JobStatus job_status_from_string(std::string_view name) {
  if (name == "queued") return JobStatus::kQueued;
  if (name == "running") return JobStatus::kRunning;
  if (name == "succeeded") return JobStatus::kSucceeded;
  if (name == "failed") return JobStatus::kFailed;
  throw Error(ErrorCode::kDecodeFailure, "unknown job status: " + std::string(name));
}

json chat_request(const std::string& model, std::string_view prompt, const SamplingParams& sampling, bool send_seed) {
  json body = {{"model", model},
               {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
               {"temperature", sampling.temperature},
               {"max_tokens", sampling.max_tokens}};
  if (send_seed) body["seed"] = sampling.seed;
  validate_chat_request(body);
  return body;
}

void validate_chat_request(const json& body) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kSchemaViolation, "chat request: " + what); };
  if (!body.is_object()) fail("body must be an object");
  for (const auto& [key, _] : body.items()) {
    if (key != "model" && key != "messages" && key != "temperature" && key != "max_tokens" && key != "seed")
      fail("unexpected field " + key);
  }
  if (!body.contains("model") || !body["model"].is_string() || body["model"].get<std::string>().empty())
    fail("model must be a non-empty string");
  if (!body.contains("messages") || !body["messages"].is_array() || body["messages"].empty())
    fail("messages must be a non-empty array");
  for (const auto& m : body["messages"]) {
    if (!m.is_object() || !m.contains("role") || !m["role"].is_string() || !m.contains("content") ||
        !m["content"].is_string() || m["content"].get<std::string>().empty() || m.size() != 2)
      fail("each message needs a role and non-empty content");
  }
  if (!body.contains("temperature") || !body["temperature"].is_number() || body["temperature"].get<double>() < 0.0)
    fail("temperature must be a number >= 0");
  if (!body.contains("max_tokens") || !body["max_tokens"].is_number_integer() || body["max_tokens"].get<long long>() < 1)
    fail("max_tokens must be a positive integer");
  if (body.contains("seed") && !body["seed"].is_number_integer()) fail("seed must be an integer");
}

json finetune_request(const std::string& model, const std::string& training_file, const FinetuneConfig& config,
                      std::uint64_t seed, const std::string& key) {
  json body = {{"model", model},
               {"training_file", training_file},
               {"hyperparameters",
                {{"rank", config.rank},
                 {"scale", config.scale},
                 {"learning_rate", config.learning_rate},
                 {"epochs", config.epochs},
                 {"batch_size", config.batch_size},
                 {"loss_mask", std::string(to_string(config.loss_mask))},
                 {"target_layers", config.target_layers},
                 {"seed", seed}}},
               {"dedupe_key", key}};
  validate_finetune_request(body);
  return body;
}

void validate_finetune_request(const json& body) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kSchemaViolation, "finetune request: " + what); };
  if (!body.is_object()) fail("body must be an object");
  for (const auto& [key, _] : body.items()) {
    if (key != "model" && key != "training_file" && key != "hyperparameters" && key != "dedupe_key")
      fail("unexpected field " + key);
  }
  if (!body.contains("model") || !body["model"].is_string() || body["model"].get<std::string>().empty())
    fail("model must be a non-empty string");
  if (!body.contains("training_file") || !body["training_file"].is_string() ||
      body["training_file"].get<std::string>().empty())
    fail("training_file must be a non-empty string");
  if (!body.contains("hyperparameters") || !body["hyperparameters"].is_object()) fail("hyperparameters missing");
  if (!body.contains("dedupe_key") || !body["dedupe_key"].is_string()) fail("dedupe_key must be a string");
}

std::string training_file_jsonl(const std::vector<TrainingDocument>& documents) {
  std::string out;
  for (const auto& d : documents) {
    out += json{{"prompt", std::string(d.prompt())}, {"completion", std::string(d.completion())}}.dump();
    out += '\n';
  }
  return out;
}

std::string dedupe_key(const std::string& model, const std::string& training_file, const FinetuneConfig& config,
                       std::uint64_t seed) {
  std::uint64_t h = fnv1a(model);
  h = fnv1a(training_file, h);
  h = fnv1a(to_json(config).dump(), h);
  return Fingerprint{mix_seed(h, seed)}.hex();
}

struct Client::Impl {
  explicit Impl(int permits) : slots(permits) {}
  std::string scheme_host_port;
  std::string prefix;
  mutable std::counting_semaphore<1024> slots;
};

Client::Client(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  impl_ = std::make_unique<Impl>(std::min(config_.max_concurrency, 1024));
  const std::size_t scheme_end = config_.base_url.find("://") + 3;
  const std::size_t slash = config_.base_url.find('/', scheme_end);
  impl_->scheme_host_port = config_.base_url.substr(0, slash);
  if (slash != std::string::npos) {
    impl_->prefix = config_.base_url.substr(slash);
    while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
  }
}

Client::~Client() = default;

json Client::send(const std::string& method, const std::string& path, const json* body,
                  const std::string& idempotency_key) const {
  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token == nullptr || *token == '\0')
      throw Error(ErrorCode::kConfigError, "environment variable " + config_.token_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  if (!idempotency_key.empty()) headers.emplace("Idempotency-Key", idempotency_key);
  const std::string payload = body ? body->dump() : std::string();
  const std::string full_path = impl_->prefix + path;

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    std::this_thread::sleep_for(config_.retry.backoff(attempt));
    impl_->slots.acquire();
    httplib::Result res = [&] {
      httplib::Client cli(impl_->scheme_host_port);
      const auto secs = config_.timeout.count() / 1000;
      const auto usecs = (config_.timeout.count() % 1000) * 1000;
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      if (method == "POST") return cli.Post(full_path, headers, payload, "application/json");
      return cli.Get(full_path, headers);
    }();
    impl_->slots.release();

    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kDecodeFailure, "invalid JSON from " + path + ": " + e.what());
      }
    }
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status) + ": " + res->body;
      continue;
    }
    throw Error(ErrorCode::kHttpStatus, "HTTP " + std::to_string(status) + " from " + path + ": " + res->body);
  }
  throw Error(ErrorCode::kBackendUnavailable, method + " " + path + " failed after " +
                                                  std::to_string(config_.retry.max_attempts) +
                                                  " attempts; last: " + last_failure);
}

Generation Client::chat(std::string_view prompt, const SamplingParams& sampling, const std::string& model) const {
  const json body = chat_request(model, prompt, sampling);
  const json reply = send("POST", "/chat/completions", &body, "");
  try {
    const auto& choice = reply.at("choices").at(0);
    Generation g;
    g.text = choice.at("message").at("content").get<std::string>();
    g.truncated = choice.value("finish_reason", std::string()) == "length";
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeFailure, std::string("malformed chat response: ") + e.what());
  }
}

namespace {

FinetuneJob job_from_json(const json& j) {
  try {
    FinetuneJob job;
    job.job_id = j.at("job_id").get<std::string>();
    job.status = job_status_from_string(j.value("status", std::string("queued")));
    if (j.contains("fine_tuned_model") && j["fine_tuned_model"].is_string())
      job.fine_tuned_model = j["fine_tuned_model"].get<std::string>();
    if (j.contains("error") && j["error"].is_string()) job.error = j["error"].get<std::string>();
    return job;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDecodeFailure, std::string("malformed job response: ") + e.what());
  }
}

}  // namespace

FinetuneJob Client::submit_finetune(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config,
                                    const std::string& model, std::uint64_t seed) const {
  config.validate();
  validate_documents(documents, config);
  const std::string file = training_file_jsonl(documents);
  const std::string key = dedupe_key(model, file, config, seed);
  const json body = finetune_request(model, file, config, seed, key);
  return job_from_json(send("POST", "/finetune", &body, key));
}

FinetuneJob Client::poll_job(const std::string& job_id) const {
  if (job_id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty job id");
  return job_from_json(send("GET", "/finetune/" + job_id, nullptr, ""));
}

FinetuneJob Client::wait_for_job(const std::string& job_id,
                                 const std::function<void(const FinetuneJob&)>& on_status) const {
  const auto deadline = std::chrono::steady_clock::now() + config_.job_deadline;
  while (true) {
    FinetuneJob job = poll_job(job_id);
    if (on_status) on_status(job);
    if (job.status == JobStatus::kSucceeded) {
      if (job.fine_tuned_model.empty())
        throw Error(ErrorCode::kDecodeFailure, "job " + job_id + " succeeded without a model id");
      return job;
    }
    if (job.status == JobStatus::kFailed)
      throw Error(ErrorCode::kJobFailed, "job " + job_id + " failed: " + job.error);
    if (std::chrono::steady_clock::now() + config_.poll_interval >= deadline)
      throw Error(ErrorCode::kDeadlineExceeded, "job " + job_id + " not finished before the deadline");
    std::this_thread::sleep_for(config_.poll_interval);
  }
}

}  // namespace selfedit::remote

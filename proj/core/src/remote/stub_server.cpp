#include "selfedit/remote/stub_server.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>

#include "selfedit/core/error.hpp"
#include "selfedit/remote/client.hpp"

namespace selfedit::remote {

using nlohmann::json;

namespace {

struct Job {
  std::string id;
  std::string model;
  int polls = 0;
  std::vector<std::string> history;
};

// Cuts a reply to max_tokens whitespace-separated words.
std::pair<std::string, bool> clip(const std::string& text, long long max_tokens) {
  std::istringstream in(text);
  std::string word;
  long long n = 0;
  while (in >> word) ++n;
  if (n <= max_tokens) return {text, false};
  std::size_t i = 0;
  long long seen = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (seen == max_tokens) break;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    ++seen;
  }
  std::string out = text.substr(0, i);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return {out, true};
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct StubServer::Impl {
  StubScript script;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  mutable std::mutex mutex;
  std::vector<CapturedRequest> requests;
  std::vector<std::string> prompts;
  std::map<std::string, Job> jobs;
  std::map<std::string, std::string> job_by_key;
  int job_counter = 0;

  void capture(const httplib::Request& req) {
    CapturedRequest c{req.method, req.path, req.body, {}};
    for (const auto& [k, v] : req.headers) c.headers[k] = v;
    std::lock_guard lock(mutex);
    requests.push_back(std::move(c));
  }

  bool authorized(const httplib::Request& req, httplib::Response& res) {
    if (script.required_token.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + script.required_token) return true;
    reply_json(res, 401, {{"error", "unauthorized"}});
    return false;
  }

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    capture(req);
    if (!authorized(req, res)) return;
    int fail = 0;
    std::chrono::milliseconds latency;
    {
      std::lock_guard lock(mutex);
      if (!script.chat_failures.empty()) {
        fail = script.chat_failures.front();
        script.chat_failures.pop_front();
      }
      latency = script.chat_latency;
    }
    if (latency.count() > 0) std::this_thread::sleep_for(latency);
    if (fail != 0) {
      reply_json(res, fail, {{"error", "scripted failure"}});
      return;
    }
    json body;
    try {
      body = json::parse(req.body);
      validate_chat_request(body);
    } catch (const std::exception& e) {
      reply_json(res, 400, {{"error", e.what()}});
      return;
    }
    const std::string prompt = body["messages"].back()["content"].get<std::string>();
    {
      std::lock_guard lock(mutex);
      prompts.push_back(prompt);
    }
    const std::string text = script.responder ? script.responder(prompt, body) : script.canned_reply;
    auto [content, cut] = clip(text, body["max_tokens"].get<long long>());
    reply_json(res, 200,
               {{"id", "chatcmpl-stub"},
                {"model", body["model"]},
                {"choices", json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", content}}},
                                          {"finish_reason", cut ? "length" : "stop"}}})}});
  }

  void handle_submit(const httplib::Request& req, httplib::Response& res) {
    capture(req);
    if (!authorized(req, res)) return;
    json body;
    try {
      body = json::parse(req.body);
      validate_finetune_request(body);
    } catch (const std::exception& e) {
      reply_json(res, 400, {{"error", e.what()}});
      return;
    }
    std::string job_id;
    std::chrono::milliseconds latency;
    {
      std::lock_guard lock(mutex);
      if (!script.finetune_failures.empty()) {
        const int fail = script.finetune_failures.front();
        script.finetune_failures.pop_front();
        reply_json(res, fail, {{"error", "scripted failure"}});
        return;
      }
      std::string key = req.get_header_value("Idempotency-Key");
      if (key.empty()) key = body["dedupe_key"].get<std::string>();
      auto it = job_by_key.find(key);
      if (it != job_by_key.end()) {
        job_id = it->second;
      } else {
        job_id = "job-" + std::to_string(++job_counter);
        jobs[job_id] = Job{job_id, body["model"].get<std::string>(), 0, {}};
        job_by_key[key] = job_id;
      }
      latency = script.finetune_latency;
    }
    if (latency.count() > 0) std::this_thread::sleep_for(latency);
    reply_json(res, 200, {{"job_id", job_id}, {"status", "queued"}});
  }

  void handle_poll(const httplib::Request& req, httplib::Response& res) {
    capture(req);
    if (!authorized(req, res)) return;
    const std::string id = req.matches[1];
    std::lock_guard lock(mutex);
    auto it = jobs.find(id);
    if (it == jobs.end()) {
      reply_json(res, 404, {{"error", "no such job"}});
      return;
    }
    Job& job = it->second;
    const int n = job.polls++;
    json out = {{"job_id", id}};
    if (n < script.polls_queued) {
      out["status"] = "queued";
    } else if (n < script.polls_queued + script.polls_running) {
      out["status"] = "running";
    } else if (script.job_fails) {
      out["status"] = "failed";
      out["error"] = script.job_error;
    } else {
      out["status"] = "succeeded";
      out["fine_tuned_model"] = job.model + ":ft-" + id;
    }
    job.history.push_back(out["status"].get<std::string>());
    reply_json(res, 200, out);
  }
};

StubServer::StubServer(StubScript script) : impl_(std::make_unique<Impl>()) {
  impl_->script = std::move(script);
  impl_->server.Post("/chat/completions",
                     [this](const httplib::Request& q, httplib::Response& r) { impl_->handle_chat(q, r); });
  impl_->server.Post("/finetune",
                     [this](const httplib::Request& q, httplib::Response& r) { impl_->handle_submit(q, r); });
  impl_->server.Get(R"(/finetune/([^/]+))",
                    [this](const httplib::Request& q, httplib::Response& r) { impl_->handle_poll(q, r); });
}

StubServer::~StubServer() { stop(); }

void StubServer::start(int port, const std::string& host) {
  if (impl_->thread.joinable()) throw Error(ErrorCode::kInvalidArgument, "stub server already running");
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port <= 0) throw Error(ErrorCode::kBackendUnavailable, "stub server could not bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void StubServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

void StubServer::wait() const {
  while (impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int StubServer::port() const noexcept { return impl_->port; }

std::string StubServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<CapturedRequest> StubServer::requests() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->requests;
}

std::vector<std::string> StubServer::prompts() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->prompts;
}

int StubServer::jobs_created() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->job_counter;
}

std::vector<std::string> StubServer::job_history(const std::string& job_id) const {
  std::lock_guard lock(impl_->mutex);
  auto it = impl_->jobs.find(job_id);
  return it == impl_->jobs.end() ? std::vector<std::string>{} : it->second.history;
}

}  // namespace selfedit::remote

#include "selfedit/remote/backend.hpp"

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/knowledge/grading.hpp"
#include "selfedit/knowledge/prompts.hpp"

namespace selfedit::remote {

RemoteBackend::RemoteBackend(std::shared_ptr<const Client> client, std::shared_ptr<const GraderClient> grader)
    : client_(std::move(client)), grader_(std::move(grader)) {
  if (!client_) throw Error(ErrorCode::kInvalidArgument, "remote backend needs a client");
  model_ = client_->config().model;
}

const std::string& RemoteBackend::model_for(const AdapterHandle* adapter) const {
  if (adapter == nullptr) return model_;
  if (adapter->base_fingerprint != fingerprint())
    throw Error(ErrorCode::kStaleAdapter, "adapter " + adapter->id + " was trained against another base");
  const auto* state = dynamic_cast<const RemoteAdapterState*>(adapter->state.get());
  if (state == nullptr) throw Error(ErrorCode::kInvalidArgument, "adapter does not belong to a remote backend");
  return state->model;
}

Generation RemoteBackend::generate(std::string_view prompt, const SamplingParams& sampling,
                                   const AdapterHandle* adapter) const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  return client_->chat(prompt, sampling, model_for(adapter));
}

AdapterHandle RemoteBackend::finetune(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config,
                                      std::uint64_t seed) const {
  const FinetuneJob submitted = client_->submit_finetune(documents, config, model_, seed);
  const FinetuneJob done = client_->wait_for_job(submitted.job_id);
  auto state = std::make_shared<RemoteAdapterState>();
  state->model = done.fine_tuned_model;
  return {done.fine_tuned_model, fingerprint(), config.rank, config.scale, std::move(state)};
}

double RemoteBackend::evaluate(const AdapterHandle* adapter, const EvaluationSpec& evaluation,
                               std::uint64_t seed) const {
  if (evaluation.empty()) throw Error(ErrorCode::kInvalidArgument, "empty evaluation");
  const std::string& model = model_for(adapter);
  if (evaluation.kind() == EvaluationKind::kHeldOutIoPair) {
    const auto& io = evaluation.io();
    SamplingParams greedy = SamplingParams::greedy(2048);
    greedy.seed = seed;
    const std::string prompt = "input:\n" + fewshot::serialize_grid(io.input) + "\noutput:\n";
    const Generation g = client_->chat(prompt, greedy, model);
    try {
      return fewshot::parse_grid(g.text) == io.output ? 1.0 : 0.0;
    } catch (const Error&) {
      return 0.0;
    }
  }
  const knowledge::LocalMatchGrader local;
  const GraderClient& grader = grader_ ? *grader_ : local;
  const auto& qa = evaluation.qa();
  int correct = 0;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    SamplingParams greedy = SamplingParams::greedy(64);
    greedy.seed = derive_seed(seed, "qa-answer", static_cast<std::uint64_t>(i));
    const Generation answer = client_->chat(knowledge::build_qa_prompt(qa[i].question), greedy, model);
    if (answer.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (knowledge::grade(qa[i].question, qa[i].gold, answer.text, grader).correct) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(qa.size());
}

void RemoteBackend::merge(const AdapterHandle& adapter) {
  model_ = model_for(&adapter);
  ++revision_;
}

Fingerprint RemoteBackend::fingerprint() const { return {mix_seed(fnv1a(model_), revision_)}; }

std::unique_ptr<ModelBackend> RemoteBackend::clone() const { return std::make_unique<RemoteBackend>(*this); }

RemoteGrader::RemoteGrader(std::shared_ptr<const Client> client, int max_tokens)
    : client_(std::move(client)), max_tokens_(max_tokens) {
  if (!client_) throw Error(ErrorCode::kInvalidArgument, "remote grader needs a client");
}

std::string RemoteGrader::complete(std::string_view grading_prompt) const {
  return client_->chat(grading_prompt, SamplingParams::greedy(max_tokens_), client_->config().model).text;
}

}  // namespace selfedit::remote

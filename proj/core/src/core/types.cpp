#include "selfedit/core/types.hpp"

#include <cstdio>
#include <unordered_set>

#include "selfedit/core/error.hpp"

namespace selfedit {

EvaluationSpec::EvaluationSpec(QaSet qa) : value_(std::move(qa)) {}
EvaluationSpec::EvaluationSpec(HeldOutPair io) : value_(std::move(io)) {}

EvaluationKind EvaluationSpec::kind() const noexcept {
  return value_.index() == 0 ? EvaluationKind::kQaSet : EvaluationKind::kHeldOutIoPair;
}

const std::vector<QaItem>& EvaluationSpec::qa() const {
  if (const auto* qa = std::get_if<QaSet>(&value_)) return qa->items;
  throw Error(ErrorCode::kInvalidArgument, "evaluation is not a qa-set");
}

const GridPair& EvaluationSpec::io() const {
  if (const auto* io = std::get_if<HeldOutPair>(&value_)) return io->pair;
  throw Error(ErrorCode::kInvalidArgument, "evaluation is not a held-out io pair");
}

bool EvaluationSpec::empty() const noexcept {
  if (const auto* qa = std::get_if<QaSet>(&value_)) return qa->items.empty();
  const auto& io = std::get<HeldOutPair>(value_).pair;
  return io.input.empty() || io.output.empty();
}

void TaskInstance::validate() const {
  if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "task id is empty");
  if (context.empty()) throw Error(ErrorCode::kInvalidArgument, "task " + id + " has an empty context");
  if (evaluation.empty()) throw Error(ErrorCode::kInvalidArgument, "task " + id + " has an empty evaluation");
}

void validate_dataset(const std::vector<TaskInstance>& tasks) {
  std::unordered_set<std::string> seen;
  for (const auto& task : tasks) {
    task.validate();
    if (!seen.insert(task.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate task id " + task.id);
    }
  }
}

TrainingDocument TrainingDocument::prompt_completion(std::string_view prompt, std::string_view completion) {
  std::string text;
  text.reserve(prompt.size() + completion.size());
  text.append(prompt);
  text.append(completion);
  return {std::move(text), prompt.size()};
}

std::string_view TrainingDocument::prompt() const {
  return std::string_view(text).substr(0, output_begin.value_or(0));
}

std::string_view TrainingDocument::completion() const {
  return std::string_view(text).substr(output_begin.value_or(0));
}

const std::vector<std::string>& SelfEdit::documents() const {
  if (const auto* docs = std::get_if<std::vector<std::string>>(&payload)) return *docs;
  throw Error(ErrorCode::kInvalidArgument, "self-edit " + id + " carries a tool config, not documents");
}

const ToolConfig& SelfEdit::tool_config() const {
  if (const auto* config = std::get_if<ToolConfig>(&payload)) return *config;
  throw Error(ErrorCode::kInvalidArgument, "self-edit " + id + " carries documents, not a tool config");
}

std::string_view to_string(LossMask mask) noexcept {
  return mask == LossMask::kAllTokens ? "all-tokens" : "output-tokens-only";
}

LossMask loss_mask_from_string(std::string_view name) {
  if (name == "all-tokens") return LossMask::kAllTokens;
  if (name == "output-tokens-only") return LossMask::kOutputTokensOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss mask " + std::string(name));
}

void FinetuneConfig::validate() const {
  if (rank < 1) throw Error(ErrorCode::kInvalidArgument, "adapter rank must be >= 1");
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "adapter scale must be > 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (target_layers.empty()) throw Error(ErrorCode::kInvalidArgument, "target layer set is empty");
}

void validate_documents(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config) {
  if (documents.empty()) throw Error(ErrorCode::kEmptyDocuments, "no training documents");
  if (config.loss_mask == LossMask::kOutputTokensOnly) {
    for (const auto& doc : documents) {
      if (!doc.output_begin || *doc.output_begin > doc.text.size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "output-tokens-only loss mask needs every document to mark an output span");
      }
    }
  }
}

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string_view to_string(RewardMode mode) noexcept {
  return mode == RewardMode::kThreshold ? "threshold" : "argmax";
}

RewardMode reward_mode_from_string(std::string_view name) {
  if (name == "threshold") return RewardMode::kThreshold;
  if (name == "argmax") return RewardMode::kArgmax;
  throw Error(ErrorCode::kInvalidArgument, "unknown reward mode " + std::string(name));
}

}  // namespace selfedit

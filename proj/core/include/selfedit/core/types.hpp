#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "selfedit/core/grid.hpp"

namespace selfedit {

struct QaItem {
  std::string question;
  std::string gold;

  friend bool operator==(const QaItem&, const QaItem&) = default;
};

struct QaSet {
  std::vector<QaItem> items;
};

struct HeldOutPair {
  GridPair pair;
};

enum class EvaluationKind { kQaSet, kHeldOutIoPair };

/// What a task is scored against: questions with gold answers, or one held-out
/// input/output grid pair.
class EvaluationSpec {
 public:
  EvaluationSpec() = default;
  explicit EvaluationSpec(QaSet qa);
  explicit EvaluationSpec(HeldOutPair io);

  [[nodiscard]] EvaluationKind kind() const noexcept;
  [[nodiscard]] const std::vector<QaItem>& qa() const;
  [[nodiscard]] const GridPair& io() const;
  [[nodiscard]] bool empty() const noexcept;

 private:
  std::variant<QaSet, HeldOutPair> value_;
};

struct TaskInstance {
  std::string id;
  std::string context;
  EvaluationSpec evaluation;

  /// Throws Error(kInvalidArgument) unless id and context are non-empty and the
  /// evaluation has at least one question or exactly one held-out pair.
  void validate() const;
};

/// Throws if ids are not unique across the dataset.
void validate_dataset(const std::vector<TaskInstance>& tasks);

/// One finetuning sequence. When output_begin is set, text[output_begin..] is
/// the marked output span used by the output-tokens-only loss mask.
struct TrainingDocument {
  std::string text;
  std::optional<std::size_t> output_begin;

  static TrainingDocument plain(std::string text) { return {std::move(text), std::nullopt}; }
  static TrainingDocument prompt_completion(std::string_view prompt, std::string_view completion);

  [[nodiscard]] std::string_view prompt() const;
  [[nodiscard]] std::string_view completion() const;

  friend bool operator==(const TrainingDocument&, const TrainingDocument&) = default;
};

enum class TrainingStrategy { kAllTokens, kOutputTokens };

/// Tool-configuration self-edit for the few-shot domain.
struct ToolConfig {
  bool use_basic_augmentations = false;
  bool use_size_augmentations = false;
  bool use_chain_augmentations = false;
  bool use_repeat_augmentations = false;
  TrainingStrategy strategy = TrainingStrategy::kAllTokens;
  double learning_rate = 1e-4;
  int num_train_epochs = 1;

  friend bool operator==(const ToolConfig&, const ToolConfig&) = default;
};

struct SelfEdit {
  std::string id;
  std::string context_id;
  std::string raw;
  std::variant<std::vector<std::string>, ToolConfig> payload;

  [[nodiscard]] bool has_documents() const noexcept { return payload.index() == 0; }
  [[nodiscard]] const std::vector<std::string>& documents() const;
  [[nodiscard]] const ToolConfig& tool_config() const;
};

enum class LossMask { kAllTokens, kOutputTokensOnly };

std::string_view to_string(LossMask mask) noexcept;
LossMask loss_mask_from_string(std::string_view name);

/// Inner-loop update directive. Adapter deltas are scaled by scale / rank.
struct FinetuneConfig {
  int rank = 32;
  double scale = 64.0;
  double learning_rate = 1e-3;
  int epochs = 10;
  int batch_size = 1;
  LossMask loss_mask = LossMask::kAllTokens;
  std::vector<std::string> target_layers = {"q_proj", "k_proj", "v_proj", "o_proj",
                                            "gate_proj", "up_proj", "down_proj"};

  [[nodiscard]] double scaling() const noexcept { return scale / static_cast<double>(rank); }

  /// Throws Error(kInvalidArgument) for non-positive numerics or an empty
  /// target-layer set.
  void validate() const;
};

/// Rejects empty document lists (kEmptyDocuments) and, under the
/// output-tokens-only mask, documents without a marked output span.
void validate_documents(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config);

/// 64-bit content hash identifying a parameter state.
struct Fingerprint {
  std::uint64_t value = 0;

  [[nodiscard]] std::string hex() const;
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// Backend-owned adapter payload (low-rank factors, remote model id, ...).
class AdapterState {
 public:
  virtual ~AdapterState() = default;
};

struct AdapterHandle {
  std::string id;
  Fingerprint base_fingerprint;
  int rank = 0;
  double scale = 0.0;
  std::shared_ptr<const AdapterState> state;
};

struct SamplingParams {
  double temperature = 1.0;
  int max_tokens = 1024;
  std::uint64_t seed = 0;

  static SamplingParams greedy(int max_tokens = 1024) { return {0.0, max_tokens, 0}; }
};

struct Generation {
  std::string text;
  bool truncated = false;
};

enum class RewardMode { kThreshold, kArgmax };

std::string_view to_string(RewardMode mode) noexcept;
RewardMode reward_mode_from_string(std::string_view name);

/// Scores of one (context, self-edit) pair before and after adaptation.
struct RewardRecord {
  std::string context_id;
  std::string self_edit_id;
  int sample_index = 0;
  std::string raw;
  double score_before = 0.0;
  double score_after = 0.0;
  std::vector<double> seed_scores;
  int seeds_used = 0;
  int reward = 0;
  Fingerprint policy_fingerprint;
  bool flagged = false;
  std::string flag_reason;
};

}  // namespace selfedit

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "selfedit/fewshot/ttt.hpp"
#include "selfedit/knowledge/prompts.hpp"
#include "selfedit/knowledge/split.hpp"
#include "selfedit/remote/client.hpp"
#include "selfedit/restem/loop.hpp"
#include "selfedit/toy/world.hpp"

namespace selfedit::experiment {

enum class Domain { kKnowledge, kFewshot, kToy, kContinual };
enum class BackendKind { kToy, kRemote };

std::string_view to_string(Domain domain) noexcept;
std::string_view to_string(BackendKind backend) noexcept;

struct DatasetConfig {
  /// Empty: generate one (toy world facts or synthetic grid tasks).
  std::string path;
  /// "knowledge-json", "squad" or "arc-dir".
  std::string format;
  /// 0 keeps every item.
  std::size_t max_items = 0;
};

struct ToyConfig {
  int facts = 30;
  int facts_per_context = 3;
  int templates = 3;
  toy::ToyAlphabet alphabet;
  double init_scale = 0.1;
  /// Defaults to the run seed.
  std::optional<std::uint64_t> world_seed;
};

struct KnowledgeOptions {
  knowledge::PromptVariant variant = knowledge::PromptVariant::kImplications;
  knowledge::SelfEditSource source = knowledge::SelfEditSource::kSelf;
  bool include_passage = false;
};

struct FewshotOptions {
  /// Self-edits sampled per evaluation task when scoring the policy.
  int eval_samples = 5;
  /// Held-out ARC tasks; empty means synthetic tasks.
  std::string eval_path;
  int synthetic_train_tasks = 8;
  int synthetic_eval_tasks = 4;
  int synthetic_train_pairs = 3;
  int synthetic_grid_size = 3;
  fewshot::TttOptions ttt;
};

struct ContinualOptions {
  int runs = 4;
  /// Number of leading dataset instances streamed.
  int tasks = 8;
  FinetuneConfig finetune;
};

/// Defaults depend on the domain and backend: counts follow the domain's
/// protocol, and the toy backend swaps in finetune settings scaled for the
/// toy model.
struct RunConfig {
  Domain domain = Domain::kToy;
  BackendKind backend = BackendKind::kToy;
  std::optional<remote::EndpointConfig> endpoint;
  std::optional<remote::EndpointConfig> grader_endpoint;
  std::uint64_t seed = 0;
  std::string output_dir = "results";
  restem::LoopConfig loop;
  DatasetConfig dataset;
  ToyConfig toy;
  KnowledgeOptions knowledge;
  FewshotOptions fewshot;
  ContinualOptions continual;
};

RunConfig default_config(Domain domain, BackendKind backend);

/// Strict: unknown keys and type mismatches throw SchemaError naming the key
/// path; referenced dataset paths must exist.
RunConfig config_from_json(const nlohmann::json& value);
nlohmann::json to_json(const RunConfig& config);

/// Parses JSON, or YAML when the file ends in .yaml/.yml. Syntax errors throw
/// Error(kConfigError) with line and column.
nlohmann::json parse_config_text(std::string_view text, bool yaml);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace selfedit::experiment

#include "selfedit/fewshot/tool_config.hpp"

#include <cctype>

#include <nlohmann/json.hpp>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"

namespace selfedit::fewshot {

using nlohmann::json;
using nlohmann::ordered_json;

const std::string_view kToolInstruction =
    R"(You are configuring a model training pipeline by selecting from predefined tools.

You must make two decisions:

1. Data Generation Tools — For each of the following, choose true or false:
  - use_basic_augmentations
  - use_size_augmentations
  - use_chain_augmentations
  - use_repeat_augmentations

2. Training Configuration — Choose one of:
  - "train_using_all_tokens"
  - "train_using_output_tokens"

Also specify:
  - learning_rate (float)
  - num_train_epochs (integer)

Output Format

Respond with a valid JSON object. Do not include any explanation, markdown, or extra text. Use lowercase true/false for booleans and ensure correct JSON syntax.

Example output:
{
  "data_generation": {
    "use_basic_augmentations": ...,
    "use_size_augmentations": ...,
    "use_chain_augmentations": ...,
    "use_repeat_augmentations": ...
  },
  "training": {
    "strategy": ...,
    "learning_rate": ...,
    "num_train_epochs": ...
  }
})";

std::string build_tool_prompt(const ArcTask& task) {
  task.validate();
  return serialize_demonstrations(task.train) + "\n" + std::string(kToolInstruction);
}

namespace {

// End index (inclusive) of the balanced object starting at `begin`, honouring
// string literals and escapes; npos if it never closes.
std::size_t balanced_end(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (ch == '\\') {
        escaped = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    if (ch == '"') {
      in_string = true;
    } else if (ch == '{') {
      ++depth;
    } else if (ch == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

json extract_object(std::string_view raw, bool strict) {
  if (strict) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
    json value = json::parse(raw.substr(b, e - b), nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw Error(ErrorCode::kNoJsonFound, "strict mode: completion is not a single JSON object");
    }
    return value;
  }
  for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    const std::size_t end = balanced_end(raw, start);
    if (end == std::string_view::npos) continue;
    json value = json::parse(raw.substr(start, end - start + 1), nullptr, false);
    if (!value.is_discarded() && value.is_object()) return value;
  }
  throw Error(ErrorCode::kNoJsonFound, "no well-formed JSON object in completion");
}

const json& require(const json& object, std::string_view key, const std::string& parent) {
  auto it = object.find(std::string(key));
  if (it == object.end()) throw SchemaError(join_path(parent, key), "missing key");
  return *it;
}

bool require_bool(const json& object, std::string_view key, const std::string& parent) {
  const auto& value = require(object, key, parent);
  if (!value.is_boolean()) throw SchemaError(join_path(parent, key), "expected a boolean");
  return value.get<bool>();
}

}  // namespace

ToolConfig parse_tool_config(std::string_view raw, bool strict) {
  const json root = extract_object(raw, strict);
  check_object_keys(root, {"data_generation", "training"}, "");

  ToolConfig config;
  const auto& data = require(root, "data_generation", "");
  check_object_keys(data,
                    {"use_basic_augmentations", "use_size_augmentations", "use_chain_augmentations",
                     "use_repeat_augmentations"},
                    "data_generation");
  config.use_basic_augmentations = require_bool(data, "use_basic_augmentations", "data_generation");
  config.use_size_augmentations = require_bool(data, "use_size_augmentations", "data_generation");
  config.use_chain_augmentations = require_bool(data, "use_chain_augmentations", "data_generation");
  config.use_repeat_augmentations = require_bool(data, "use_repeat_augmentations", "data_generation");

  const auto& training = require(root, "training", "");
  check_object_keys(training, {"strategy", "learning_rate", "num_train_epochs"}, "training");

  const auto& strategy = require(training, "strategy", "training");
  if (!strategy.is_string()) throw SchemaError("training.strategy", "expected a string");
  const auto name = strategy.get<std::string>();
  if (name == kStrategyAllTokens) {
    config.strategy = TrainingStrategy::kAllTokens;
  } else if (name == kStrategyOutputTokens) {
    config.strategy = TrainingStrategy::kOutputTokens;
  } else {
    throw SchemaError("training.strategy", "unknown strategy \"" + name + "\"");
  }

  const auto& lr = require(training, "learning_rate", "training");
  if (!lr.is_number()) throw SchemaError("training.learning_rate", "expected a number");
  config.learning_rate = lr.get<double>();
  if (!(config.learning_rate > 0.0)) throw SchemaError("training.learning_rate", "must be > 0");

  const auto& epochs = require(training, "num_train_epochs", "training");
  if (!epochs.is_number_integer()) throw SchemaError("training.num_train_epochs", "expected an integer");
  const auto epoch_count = epochs.get<long long>();
  if (epoch_count < 1 || epoch_count > 1'000'000) {
    throw SchemaError("training.num_train_epochs", "must be a positive integer");
  }
  config.num_train_epochs = static_cast<int>(epoch_count);
  return config;
}

std::string to_canonical_json(const ToolConfig& config) {
  ordered_json data;
  data["use_basic_augmentations"] = config.use_basic_augmentations;
  data["use_size_augmentations"] = config.use_size_augmentations;
  data["use_chain_augmentations"] = config.use_chain_augmentations;
  data["use_repeat_augmentations"] = config.use_repeat_augmentations;
  ordered_json training;
  training["strategy"] =
      config.strategy == TrainingStrategy::kAllTokens ? kStrategyAllTokens : kStrategyOutputTokens;
  training["learning_rate"] = config.learning_rate;
  training["num_train_epochs"] = config.num_train_epochs;
  ordered_json root;
  root["data_generation"] = std::move(data);
  root["training"] = std::move(training);
  return root.dump(2);
}

LossMask loss_mask_for(TrainingStrategy strategy) noexcept {
  return strategy == TrainingStrategy::kAllTokens ? LossMask::kAllTokens : LossMask::kOutputTokensOnly;
}

}  // namespace selfedit::fewshot

#include "selfedit/core/json.hpp"

#include <algorithm>

#include "selfedit/core/error.hpp"

namespace selfedit {

using nlohmann::json;

std::string join_path(const std::string& parent, std::string_view key) {
  if (parent.empty()) return std::string(key);
  return parent + "." + std::string(key);
}

void check_object_keys(const json& value, std::initializer_list<std::string_view> allowed,
                       const std::string& path) {
  if (!value.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : value.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(join_path(path, key), "unknown key");
    }
  }
}

json to_json(const Grid& grid) { return grid.to_rows(); }

Grid grid_from_json(const json& value) {
  if (!value.is_array()) throw Error(ErrorCode::kInvalidArgument, "grid must be an array of rows");
  std::vector<std::vector<int>> rows;
  for (const auto& row : value) {
    if (!row.is_array()) throw Error(ErrorCode::kInvalidArgument, "grid row must be an array");
    auto& out = rows.emplace_back();
    for (const auto& cell : row) {
      if (!cell.is_number_integer()) throw Error(ErrorCode::kInvalidArgument, "grid cell must be an integer");
      out.push_back(cell.get<int>());
    }
  }
  return Grid(rows);
}

json to_json(const FinetuneConfig& config) {
  return json{{"rank", config.rank},
              {"scale", config.scale},
              {"learning_rate", config.learning_rate},
              {"epochs", config.epochs},
              {"batch_size", config.batch_size},
              {"loss_mask", std::string(to_string(config.loss_mask))},
              {"target_layers", config.target_layers}};
}

namespace {

int positive_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw SchemaError(path, "expected an integer");
  const auto v = value.get<long long>();
  if (v < 1) throw SchemaError(path, "must be >= 1");
  return static_cast<int>(v);
}

double positive_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw SchemaError(path, "expected a number");
  const auto v = value.get<double>();
  if (!(v > 0.0)) throw SchemaError(path, "must be > 0");
  return v;
}

}  // namespace

FinetuneConfig finetune_config_from_json(const json& value, const FinetuneConfig& defaults,
                                         const std::string& path) {
  check_object_keys(value, {"rank", "scale", "learning_rate", "epochs", "batch_size", "loss_mask", "target_layers"},
                    path);
  FinetuneConfig config = defaults;
  if (value.contains("rank")) config.rank = positive_int(value["rank"], join_path(path, "rank"));
  if (value.contains("scale")) config.scale = positive_number(value["scale"], join_path(path, "scale"));
  if (value.contains("learning_rate")) {
    config.learning_rate = positive_number(value["learning_rate"], join_path(path, "learning_rate"));
  }
  if (value.contains("epochs")) config.epochs = positive_int(value["epochs"], join_path(path, "epochs"));
  if (value.contains("batch_size")) config.batch_size = positive_int(value["batch_size"], join_path(path, "batch_size"));
  if (value.contains("loss_mask")) {
    const auto& mask = value["loss_mask"];
    const auto mask_path = join_path(path, "loss_mask");
    if (!mask.is_string()) throw SchemaError(mask_path, "expected a string");
    try {
      config.loss_mask = loss_mask_from_string(mask.get<std::string>());
    } catch (const Error&) {
      throw SchemaError(mask_path, "expected all-tokens or output-tokens-only");
    }
  }
  if (value.contains("target_layers")) {
    const auto& layers = value["target_layers"];
    const auto layers_path = join_path(path, "target_layers");
    if (!layers.is_array() || layers.empty()) throw SchemaError(layers_path, "expected a non-empty array");
    config.target_layers.clear();
    for (const auto& layer : layers) {
      if (!layer.is_string()) throw SchemaError(layers_path, "expected strings");
      config.target_layers.push_back(layer.get<std::string>());
    }
  }
  return config;
}

json to_json(const RewardRecord& record) {
  return json{{"context_id", record.context_id},
              {"self_edit_id", record.self_edit_id},
              {"sample_index", record.sample_index},
              {"score_before", record.score_before},
              {"score_after", record.score_after},
              {"seed_scores", record.seed_scores},
              {"seeds_used", record.seeds_used},
              {"reward", record.reward},
              {"policy_fingerprint", record.policy_fingerprint.hex()},
              {"flagged", record.flagged},
              {"flag_reason", record.flag_reason},
              {"raw", record.raw}};
}

RewardRecord reward_record_from_json(const json& value) {
  RewardRecord record;
  record.context_id = value.at("context_id").get<std::string>();
  record.self_edit_id = value.at("self_edit_id").get<std::string>();
  record.sample_index = value.at("sample_index").get<int>();
  record.score_before = value.at("score_before").get<double>();
  record.score_after = value.at("score_after").get<double>();
  record.seed_scores = value.at("seed_scores").get<std::vector<double>>();
  record.seeds_used = value.at("seeds_used").get<int>();
  record.reward = value.at("reward").get<int>();
  record.policy_fingerprint.value = std::stoull(value.at("policy_fingerprint").get<std::string>(), nullptr, 16);
  record.flagged = value.value("flagged", false);
  record.flag_reason = value.value("flag_reason", std::string());
  record.raw = value.value("raw", std::string());
  return record;
}

}  // namespace selfedit

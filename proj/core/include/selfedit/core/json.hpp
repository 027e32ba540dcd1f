#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "selfedit/core/types.hpp"

namespace selfedit {

/// Throws SchemaError unless `value` is an object whose keys are all in
/// `allowed`. Paths are dotted; the root is "".
void check_object_keys(const nlohmann::json& value, std::initializer_list<std::string_view> allowed,
                       const std::string& path);

std::string join_path(const std::string& parent, std::string_view key);

nlohmann::json to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& value);

nlohmann::json to_json(const FinetuneConfig& config);

/// Strict: unknown keys and wrong types throw SchemaError naming the path.
/// Missing keys keep the values already in `defaults`.
FinetuneConfig finetune_config_from_json(const nlohmann::json& value, const FinetuneConfig& defaults,
                                         const std::string& path);

nlohmann::json to_json(const RewardRecord& record);
RewardRecord reward_record_from_json(const nlohmann::json& value);

}  // namespace selfedit

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfedit/core/grid.hpp"
#include "selfedit/core/types.hpp"
#include "selfedit/fewshot/transforms.hpp"

namespace selfedit::fewshot {

struct ArcTask {
  std::string id;
  std::vector<GridPair> train;
  GridPair test;

  /// Throws Error(kInvalidArgument) when there are no train pairs.
  void validate() const;
};

/// Standard public layout: {"train":[{"input","output"}], "test":[...]}. Only
/// the first test pair is used.
ArcTask arc_task_from_json(const nlohmann::json& value, std::string id);
ArcTask load_arc_task(const std::filesystem::path& path);
/// Every *.json under `dir`, sorted by file name.
std::vector<ArcTask> load_arc_directory(const std::filesystem::path& dir);
nlohmann::json to_json(const ArcTask& task);

/// Rows of digits joined by newlines, no trailing newline.
std::string serialize_grid(const Grid& grid);

/// Inverse of serialize_grid. Reads the leading block of non-empty lines and
/// throws Error(kDecodeFailure) on ragged rows, non-digit cells or no rows.
Grid parse_grid(std::string_view text);

/// "input:\n<grid>\noutput:\n<grid>\n"
std::string serialize_pair(const GridPair& pair);

std::string serialize_demonstrations(const std::vector<GridPair>& pairs);

/// Demonstrations followed by the test input and an open "output:" line.
std::string build_query_prompt(const ArcTask& task);

/// Context pairs followed by the target pair; the target's output grid is
/// the marked output span.
TrainingDocument build_demonstration_document(const std::vector<GridPair>& context, const GridPair& target);

/// TaskInstance view of an ARC task: the context is the serialized
/// demonstrations and the evaluation is the held-out test pair.
TaskInstance to_task_instance(const ArcTask& task);

/// Random grids of the given size whose outputs are `relation` applied to the
/// inputs. Used for fixtures and offline runs.
ArcTask make_synthetic_task(std::string id, Transform relation, int train_pairs, int rows, int cols,
                            std::uint64_t seed);

}  // namespace selfedit::fewshot

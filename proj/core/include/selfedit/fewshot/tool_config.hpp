#pragma once

#include <string>
#include <string_view>

#include "selfedit/core/types.hpp"
#include "selfedit/fewshot/arc.hpp"

namespace selfedit::fewshot {

inline constexpr std::string_view kStrategyAllTokens = "train_using_all_tokens";
inline constexpr std::string_view kStrategyOutputTokens = "train_using_output_tokens";

/// Instruction block appended after the few-shot demonstrations.
extern const std::string_view kToolInstruction;

/// Demonstrations, a blank line, then kToolInstruction. The test pair is not
/// shown.
std::string build_tool_prompt(const ArcTask& task);

/// Parses a tool-config self-edit. In the default tolerant mode the first
/// balanced JSON object embedded in the text is used; strict mode requires the
/// whole trimmed text to be the object. Throws Error(kNoJsonFound) or
/// SchemaError with the offending field path.
ToolConfig parse_tool_config(std::string_view raw, bool strict = false);

/// Canonical wire form: the example-output key order, two-space indent.
std::string to_canonical_json(const ToolConfig& config);

LossMask loss_mask_for(TrainingStrategy strategy) noexcept;

}  // namespace selfedit::fewshot

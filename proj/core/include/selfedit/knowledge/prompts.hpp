#pragma once

#include <string>
#include <string_view>

namespace selfedit::knowledge {

/// Bumped whenever a template string changes; stored with run outputs.
inline constexpr int kPromptTemplateVersion = 1;

enum class PromptVariant { kImplications, kImplicationsLong, kImplicationsVeryLong, kRewrite, kSelfQa };

std::string_view to_string(PromptVariant variant) noexcept;
/// Throws Error(kInvalidArgument) for unknown names.
PromptVariant prompt_variant_from_string(std::string_view name);

/// Template text with a literal {passage} slot.
std::string_view self_edit_template(PromptVariant variant) noexcept;

extern const std::string_view kQaTemplate;
extern const std::string_view kGradingTemplate;

/// Slot substitution only; the passage is inserted verbatim.
std::string build_self_edit_prompt(std::string_view passage, PromptVariant variant);
std::string build_qa_prompt(std::string_view question);
std::string build_grading_prompt(std::string_view question, std::string_view gold, std::string_view predicted);

}  // namespace selfedit::knowledge

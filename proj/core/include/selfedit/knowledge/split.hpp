#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "selfedit/knowledge/prompts.hpp"

namespace selfedit::knowledge {

enum class SelfEditSource { kSelf, kExternalInstruct };
enum class SplitRegime { kSinglePassage, kCpt };

std::string_view to_string(SelfEditSource source) noexcept;
SelfEditSource self_edit_source_from_string(std::string_view name);

/// Turns a self-edit generation into training documents.
///
/// cpt: the whole generation is one document. single-passage: self-qa output
/// is cut before every "Question <n>:" marker; every other variant is split on
/// newlines. Blank documents are dropped and the rest are kept verbatim
/// (self-qa blocks are trimmed). For external instruct models the first line
/// is dropped when the second line starts with "1.".
std::vector<std::string> split_into_documents(std::string_view generation, PromptVariant variant,
                                              SelfEditSource source, SplitRegime regime);

}  // namespace selfedit::knowledge

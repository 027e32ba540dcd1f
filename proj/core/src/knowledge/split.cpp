#include "selfedit/knowledge/split.hpp"

#include <cctype>
#include <regex>

#include "selfedit/core/error.hpp"

namespace selfedit::knowledge {
namespace {

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!is_blank(line)) lines.emplace_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_question_blocks(std::string_view text) {
  static const std::regex marker(R"(Question \d+:)");
  std::vector<std::size_t> starts;
  for (auto it = std::cregex_iterator(text.data(), text.data() + text.size(), marker); it != std::cregex_iterator();
       ++it) {
    starts.push_back(static_cast<std::size_t>(it->position()));
  }
  std::vector<std::string> blocks;
  std::size_t first = starts.empty() ? text.size() : starts.front();
  // The prompt itself ends with "Question 1:", so text ahead of the first
  // marker is the continuation of the first block.
  std::string_view lead = trim(text.substr(0, first));
  if (!lead.empty()) blocks.push_back("Question 1: " + std::string(lead));
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::size_t end = i + 1 < starts.size() ? starts[i + 1] : text.size();
    std::string_view block = trim(text.substr(starts[i], end - starts[i]));
    if (!block.empty()) blocks.emplace_back(block);
  }
  return blocks;
}

}  // namespace

std::string_view to_string(SelfEditSource source) noexcept {
  return source == SelfEditSource::kSelf ? "self" : "external-instruct";
}

SelfEditSource self_edit_source_from_string(std::string_view name) {
  if (name == "self") return SelfEditSource::kSelf;
  if (name == "external-instruct") return SelfEditSource::kExternalInstruct;
  throw Error(ErrorCode::kInvalidArgument, "unknown self-edit source: " + std::string(name));
}

std::vector<std::string> split_into_documents(std::string_view generation, PromptVariant variant,
                                              SelfEditSource source, SplitRegime regime) {
  if (is_blank(generation)) return {};
  if (regime == SplitRegime::kCpt) return {std::string(generation)};
  if (variant == PromptVariant::kSelfQa) return split_question_blocks(generation);

  auto lines = split_lines(generation);
  if (source == SelfEditSource::kExternalInstruct && lines.size() >= 2) {
    std::string_view second = trim(lines[1]);
    if (second.rfind("1.", 0) == 0) lines.erase(lines.begin());
  }
  return lines;
}

}  // namespace selfedit::knowledge

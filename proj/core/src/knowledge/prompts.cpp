#include "selfedit/knowledge/prompts.hpp"

#include <array>
#include <utility>

#include "selfedit/core/error.hpp"

namespace selfedit::knowledge {
namespace {

constexpr std::string_view kImplications =
    "Let's read the following passage and produce a list of implications derived directly or indirectly from "
    "the content.\n\nPassage:\n{passage}\n\nImplications:";
constexpr std::string_view kImplicationsLong =
    "Let's read the following passage and produce a long list of implications derived directly or indirectly "
    "from the content.\n\nPassage:\n{passage}\n\nImplications:";
constexpr std::string_view kImplicationsVeryLong =
    "Let's read the following passage and produce a very long list of implications derived directly or "
    "indirectly from the content.\n\nPassage:\n{passage}\n\nImplications:";
constexpr std::string_view kRewrite =
    "Let's read the following passage and rewrite it in a few different ways, each one separated by a "
    "newline.\n\nPassage:\n{passage}\n\nRewritten passages:";
constexpr std::string_view kSelfQa =
    "Let's read the following passage and rewrite it in a question-answer format.\n\nPassage:\n{passage}\n\n"
    "Question 1:";

constexpr std::array<std::pair<PromptVariant, std::string_view>, 5> kNames{{
    {PromptVariant::kImplications, "implications"},
    {PromptVariant::kImplicationsLong, "implications-long"},
    {PromptVariant::kImplicationsVeryLong, "implications-very-long"},
    {PromptVariant::kRewrite, "rewrite"},
    {PromptVariant::kSelfQa, "self-qa"},
}};

// Replaces each {name} slot of the template in one left-to-right pass, so
// braces inside substituted values are never re-expanded.
std::string fill(std::string_view templ, std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  out.reserve(templ.size() + 256);
  std::size_t i = 0;
  while (i < templ.size()) {
    bool replaced = false;
    if (templ[i] == '{') {
      for (const auto& [name, value] : slots) {
        if (templ.substr(i + 1, name.size()) == name && i + 1 + name.size() < templ.size() &&
            templ[i + 1 + name.size()] == '}') {
          out.append(value);
          i += name.size() + 2;
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(templ[i++]);
  }
  return out;
}

void require_text(std::string_view value, const char* what) {
  if (value.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be non-empty");
}

}  // namespace

const std::string_view kQaTemplate = "Let's answer a question directly and concisely.\nQuestion: {question}\nAnswer:";

const std::string_view kGradingTemplate =
    "You are a grading assistant. Your job is to determine whether a student's answer correctly answers the "
    "question based solely on the provided gold answer. Do not use any outside knowledge. The student answer can "
    "include additional information, but it must at least fully convey the gold answer and must not contradict "
    "it. Ignore style, phrasing, or extra details that do not affect correctness. Respond ONLY with 'yes' or "
    "'no'.\n\nQuestion: {question}\nGold answer: {gold}\nStudent answer: {pred}\nIs the student answer correct "
    "based solely on the gold answer? Respond 'yes' or 'no'.";

std::string_view to_string(PromptVariant variant) noexcept {
  for (const auto& [v, name] : kNames) {
    if (v == variant) return name;
  }
  return "implications";
}

PromptVariant prompt_variant_from_string(std::string_view name) {
  for (const auto& [v, n] : kNames) {
    if (n == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown prompt variant: " + std::string(name));
}

std::string_view self_edit_template(PromptVariant variant) noexcept {
  switch (variant) {
    case PromptVariant::kImplications: return kImplications;
    case PromptVariant::kImplicationsLong: return kImplicationsLong;
    case PromptVariant::kImplicationsVeryLong: return kImplicationsVeryLong;
    case PromptVariant::kRewrite: return kRewrite;
    case PromptVariant::kSelfQa: return kSelfQa;
  }
  return kImplications;
}

std::string build_self_edit_prompt(std::string_view passage, PromptVariant variant) {
  require_text(passage, "passage");
  return fill(self_edit_template(variant), {{"passage", passage}});
}

std::string build_qa_prompt(std::string_view question) {
  require_text(question, "question");
  return fill(kQaTemplate, {{"question", question}});
}

std::string build_grading_prompt(std::string_view question, std::string_view gold, std::string_view predicted) {
  require_text(question, "question");
  require_text(gold, "gold answer");
  require_text(predicted, "predicted answer");
  return fill(kGradingTemplate, {{"question", question}, {"gold", gold}, {"pred", predicted}});
}

}  // namespace selfedit::knowledge

#include "selfedit/knowledge/grading.hpp"

#include <algorithm>
#include <cctype>

#include "selfedit/core/error.hpp"
#include "selfedit/knowledge/prompts.hpp"

namespace selfedit::knowledge {
namespace {

std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      space = !out.empty();
      continue;
    }
    if (std::ispunct(u)) continue;
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::string_view line_value(std::string_view text, std::string_view prefix) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    pos = end + 1;
  }
  return {};
}

}  // namespace

std::optional<bool> parse_grade_reply(std::string_view reply) {
  std::size_t b = 0;
  while (b < reply.size() && std::isspace(static_cast<unsigned char>(reply[b]))) ++b;
  std::size_t e = b;
  while (e < reply.size() && !std::isspace(static_cast<unsigned char>(reply[e]))) ++e;
  std::string_view word = reply.substr(b, e - b);
  while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
  while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
  std::string token;
  for (char c : word) token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (token == "yes") return true;
  if (token == "no") return false;
  return std::nullopt;
}

GradeResult grade(std::string_view question, std::string_view gold, std::string_view predicted,
                  const GraderClient& grader) {
  GradeResult result;
  result.reply = grader.complete(build_grading_prompt(question, gold, predicted));
  auto parsed = parse_grade_reply(result.reply);
  result.correct = parsed.value_or(false);
  result.unparseable = !parsed.has_value();
  return result;
}

std::string LocalMatchGrader::complete(std::string_view grading_prompt) const {
  std::string gold = normalize(line_value(grading_prompt, "Gold answer: "));
  std::string student = normalize(line_value(grading_prompt, "Student answer: "));
  if (gold.empty()) return "no";
  // Whole-word containment so "v1" does not match "v10".
  std::string padded = " " + student + " ";
  return padded.find(" " + gold + " ") != std::string::npos ? "yes" : "no";
}

}  // namespace selfedit::knowledge

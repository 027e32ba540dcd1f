#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "selfedit/core/backend.hpp"

namespace selfedit::knowledge {

struct GradeResult {
  bool correct = false;
  bool unparseable = false;
  std::string reply;
};

/// true for "yes", false for "no", nullopt otherwise. Only the first token is
/// read, case-insensitively, ignoring surrounding punctuation.
std::optional<bool> parse_grade_reply(std::string_view reply);

/// Sends the grading prompt and parses the reply. Unparseable replies grade
/// as incorrect with the flag set. Throws Error(kInvalidArgument) on empty
/// inputs.
GradeResult grade(std::string_view question, std::string_view gold, std::string_view predicted,
                  const GraderClient& grader);

/// Offline grader: reads the gold and student answers back out of the grading
/// prompt and answers "yes" when the normalised gold answer occurs in the
/// normalised student answer.
class LocalMatchGrader final : public GraderClient {
 public:
  [[nodiscard]] std::string complete(std::string_view grading_prompt) const override;
};

}  // namespace selfedit::knowledge

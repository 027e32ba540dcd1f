#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfedit {

enum class ErrorCode {
  kInvalidArgument,
  kBackendUnavailable,
  kTokenBudgetExceeded,
  kEmptyDocuments,
  kStepBudgetExceeded,
  kStaleAdapter,
  kStalePolicy,
  kUnknownToken,
  kAlphabetExhausted,
  kNoJsonFound,
  kSchemaViolation,
  kResizeOverflow,
  kDecodeFailure,
  kEmptyDataset,
  kJobFailed,
  kDeadlineExceeded,
  kHttpStatus,
  kConfigError,
  kEmptyResults,
  kGraderUnavailable,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure the library reports. The code is stable and
/// is what callers branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Schema violations carry the dotted path of the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message);

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace selfedit

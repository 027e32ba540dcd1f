#include "selfedit/core/error.hpp"

namespace selfedit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kBackendUnavailable: return "backend-unavailable";
    case ErrorCode::kTokenBudgetExceeded: return "token-budget-exceeded";
    case ErrorCode::kEmptyDocuments: return "empty-documents";
    case ErrorCode::kStepBudgetExceeded: return "step-budget-exceeded";
    case ErrorCode::kStaleAdapter: return "stale-adapter";
    case ErrorCode::kStalePolicy: return "stale-policy";
    case ErrorCode::kUnknownToken: return "unknown-token";
    case ErrorCode::kAlphabetExhausted: return "alphabet-exhausted";
    case ErrorCode::kNoJsonFound: return "no-json-found";
    case ErrorCode::kSchemaViolation: return "schema-violation";
    case ErrorCode::kResizeOverflow: return "resize-overflow";
    case ErrorCode::kDecodeFailure: return "decode-failure";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kJobFailed: return "job-failed";
    case ErrorCode::kDeadlineExceeded: return "deadline-exceeded";
    case ErrorCode::kHttpStatus: return "http-status";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kEmptyResults: return "empty-results";
    case ErrorCode::kGraderUnavailable: return "grader-unavailable";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SchemaError::SchemaError(std::string path, const std::string& message)
    : Error(ErrorCode::kSchemaViolation, path + ": " + message), path_(std::move(path)) {}

}  // namespace selfedit

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "selfedit/experiment/config.hpp"

namespace selfedit::experiment {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitAborted = 3;

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::string message;
};

/// Runs the configured pipeline and writes config.json, summary.json and the
/// domain's artefacts (records.jsonl, events.jsonl, round_summary.json,
/// retention files, fewshot_eval.json) into output_dir. Progress lines go to
/// `log` when given.
RunOutcome run_experiment(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace selfedit::experiment

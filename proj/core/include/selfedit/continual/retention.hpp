#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/domain.hpp"

namespace selfedit::continual {

/// sqrt(unbiased variance / n); 0 for a single sample. Throws
/// Error(kInvalidArgument) when empty.
double sem(const std::vector<double>& samples);

/// (T + 1) x T. Row t holds scores after t merged edits; row 0 covers every
/// task, later rows only tasks 1..t (nullopt elsewhere).
struct RetentionMatrix {
  std::vector<std::string> task_ids;
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<std::optional<double>>> sems;
  int runs_requested = 0;
  int runs_completed = 0;
  /// One message per replica that failed and was left out.
  std::vector<std::string> excluded;

  [[nodiscard]] int tasks() const noexcept { return static_cast<int>(task_ids.size()); }
};

/// Raw per-replica scores, [run][row][task], for replays and diagnostics.
using ReplicaScores = std::vector<std::vector<std::vector<std::optional<double>>>>;

struct StreamOptions {
  int runs = 1;
  FinetuneConfig finetune;
  SamplingParams sampling;
  /// Replicas evaluated concurrently. Results do not depend on this value.
  int workers = 1;
};

/// Seeds used by the stream, exposed for replays.
std::uint64_t stream_generation_seed(std::uint64_t seed, int run, int step);
std::uint64_t stream_finetune_seed(std::uint64_t seed, int run, int step);
std::uint64_t stream_eval_seed(std::uint64_t seed, int run, int row, int task);

/// Replica scores for one run: clone the base, score every task, then for each
/// task in order generate a self-edit, finetune, merge and re-score the tasks
/// seen so far.
std::vector<std::vector<std::optional<double>>> run_replica(const ModelBackend& base, const SelfEditDomain& domain,
                                                            const std::vector<TaskInstance>& tasks,
                                                            const StreamOptions& options, std::uint64_t seed, int run);

/// Averages `runs` replicas into a retention matrix. Failed replicas are
/// excluded and listed; if every replica fails Error(kEmptyResults) is thrown.
RetentionMatrix run_stream(const ModelBackend& base, const SelfEditDomain& domain,
                           const std::vector<TaskInstance>& tasks, const StreamOptions& options, std::uint64_t seed,
                           ReplicaScores* replicas = nullptr);

/// Aggregates completed replicas. Each must be (T + 1) x T, else
/// Error(kInvalidArgument).
RetentionMatrix aggregate(const std::vector<std::string>& task_ids, const ReplicaScores& replicas);

/// Rows "0".."T", columns the task ids; "NA" marks entries not evaluated.
std::string to_csv(const std::vector<std::string>& task_ids,
                   const std::vector<std::vector<std::optional<double>>>& grid);
nlohmann::json to_json(const RetentionMatrix& matrix);

/// retention_values.csv, retention_sems.csv and retention.json.
void write_retention(const std::filesystem::path& directory, const RetentionMatrix& matrix);

}  // namespace selfedit::continual

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/domain.hpp"
#include "selfedit/core/types.hpp"

namespace selfedit::restem {

struct LoopConfig {
  int contexts_per_round = 50;   // N
  int samples_per_context = 5;   // M
  int seeds_per_sample = 3;
  RewardMode reward_mode = RewardMode::kThreshold;
  int rounds = 2;
  FinetuneConfig m_step;
  FinetuneConfig inner;
  SamplingParams sampling;
  /// Concurrent E-step jobs. Results do not depend on this value.
  int workers = 1;

  /// Throws Error(kInvalidArgument) on non-positive counts or invalid
  /// finetune configs.
  void validate() const;
};

/// A positively rewarded (prompt, self-edit) pair.
struct Winner {
  std::string context_id;
  std::string prompt;
  std::string raw;
  int sample_index = 0;
};

struct RoundMetrics {
  double mean_score_before = 0.0;
  double mean_score_after = 0.0;
  int winner_count = 0;
  int flagged_count = 0;
};

struct RoundResult {
  int round = 0;
  std::vector<RewardRecord> records;
  std::vector<Winner> winners;
  RoundMetrics metrics;
  Fingerprint policy_before;
  Fingerprint policy_after;
};

nlohmann::json to_json(const RoundMetrics& metrics);
nlohmann::json round_summary_json(const RoundResult& result);

/// Fills RewardRecord::reward. Threshold: 1 iff score_after > score_before.
/// Argmax: per context_id, 1 for the record with the largest positive
/// improvement, lowest sample_index on ties; no winner when no improvement is
/// positive. Record order is preserved.
std::vector<RewardRecord> assign_rewards(std::vector<RewardRecord> records, RewardMode mode);

/// Receives loop progress. Callbacks run on the calling thread, in order.
class RoundObserver {
 public:
  virtual ~RoundObserver() = default;
  /// After the M-step of a round has been applied.
  virtual void after_update(int round, const ModelBackend& backend) {
    (void)round;
    (void)backend;
  }
  /// Once per completed round, after after_update.
  virtual void on_round(const RoundResult& result) { (void)result; }
};

/// Seeds used by the loop, exposed so external replays can reproduce runs.
std::uint64_t generation_seed(std::uint64_t seed, int round, const std::string& context_id, int sample_index);
std::uint64_t inner_seed(std::uint64_t seed, const std::string& context_id, int seed_index);
std::uint64_t before_seed(std::uint64_t seed, const std::string& context_id);
std::uint64_t m_step_seed(std::uint64_t seed, int round);
/// Indices of the contexts drawn for a round (seeded partial shuffle).
std::vector<std::size_t> sample_batch(std::size_t dataset_size, int contexts, std::uint64_t seed, int round);

/// Samples M self-edits per context from the current policy, scores each as
/// the mean over seeds of inner-loop updates, and assigns rewards. Samples
/// that fail with anything but Error(kBackendUnavailable) keep
/// score_after = score_before and are flagged; kBackendUnavailable
/// propagates.
RoundResult e_step(const ModelBackend& backend, const SelfEditDomain& domain, const std::vector<TaskInstance>& batch,
                   const LoopConfig& config, int round, std::uint64_t seed);

/// Reinforces the round's winners (loss on the self-edit tokens only) and
/// merges the update. Throws Error(kStalePolicy) if any record was scored
/// under a different policy. No winners: no-op.
void m_step(ModelBackend& backend, const RoundResult& round, const FinetuneConfig& config, std::uint64_t seed);

struct RunResult {
  std::vector<RoundResult> rounds;
  bool aborted = false;
  std::string abort_reason;
};

/// Runs config.rounds iterations of batch sampling, E-step and M-step. On
/// Error(kBackendUnavailable) the run stops and returns the completed rounds
/// with aborted set.
RunResult run(ModelBackend& backend, const SelfEditDomain& domain, const std::vector<TaskInstance>& dataset,
              const LoopConfig& config, std::uint64_t seed, RoundObserver* observer = nullptr);

/// Writes records.jsonl (one record per line, tagged with its round),
/// events.jsonl (one line per inner-loop evaluation) and round_summary.json
/// into a directory as rounds complete.
class JsonlRunWriter final : public RoundObserver {
 public:
  explicit JsonlRunWriter(std::filesystem::path directory);
  void on_round(const RoundResult& result) override;

 private:
  std::filesystem::path directory_;
  nlohmann::json summaries_ = nlohmann::json::array();
};

}  // namespace selfedit::restem

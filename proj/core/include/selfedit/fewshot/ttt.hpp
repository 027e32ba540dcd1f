#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/domain.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/fewshot/augment.hpp"

namespace selfedit::fewshot {

struct TttOptions {
  int rank = 128;
  double scale = 16.0;
  int batch_size = 2;
  int step_budget = kStepBudget;
  std::vector<std::string> target_layers = {"q_proj", "v_proj", "gate_proj", "down_proj", "up_proj"};
  int max_decode_tokens = 2048;
};

struct TttOutcome {
  bool correct = false;
  long long steps = 0;
  bool flagged = false;
  std::string flag_reason;
};

FinetuneConfig ttt_finetune_config(const ToolConfig& config, const TttOptions& options);

/// Builds the augmented set, trains an adapter and decodes the test output
/// greedily. Throws Error(kStepBudgetExceeded) before training when the
/// estimate is over budget. Undecodable output is incorrect and flagged.
TttOutcome ttt_adapt_and_eval(const ModelBackend& backend, const ArcTask& task, const ToolConfig& config,
                              std::uint64_t seed, const TttOptions& options = {});

struct PolicyEvaluation {
  double success_rate = 0.0;
  int trials = 0;
  int correct = 0;
  int flagged = 0;
};

/// Samples k tool configs per task and counts adapted models that solve the
/// test input. Unparseable configs, budget overruns and backend errors count
/// as incorrect.
PolicyEvaluation evaluate_policy(const ModelBackend& backend, const std::vector<ArcTask>& tasks, int k,
                                 std::uint64_t seed, const SamplingParams& sampling = {},
                                 const TttOptions& options = {});

/// Few-shot instantiation of the self-edit loop over a fixed task pool.
class FewshotDomain final : public SelfEditDomain {
 public:
  explicit FewshotDomain(std::vector<ArcTask> tasks, TttOptions options = {});

  [[nodiscard]] std::string name() const override { return "fewshot"; }
  [[nodiscard]] std::string build_prompt(const TaskInstance& task) const override;
  [[nodiscard]] SelfEdit parse(const TaskInstance& task, std::string id, std::string raw) const override;
  [[nodiscard]] double score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                       std::uint64_t seed) const override;
  [[nodiscard]] double score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                     const FinetuneConfig& inner, std::uint64_t seed) const override;

  [[nodiscard]] std::vector<TaskInstance> task_instances() const;
  [[nodiscard]] const ArcTask& task(const std::string& id) const;

 private:
  std::vector<ArcTask> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
  TttOptions options_;
};

}  // namespace selfedit::fewshot

#include "selfedit/fewshot/ttt.hpp"

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/tool_config.hpp"

namespace selfedit::fewshot {

FinetuneConfig ttt_finetune_config(const ToolConfig& config, const TttOptions& options) {
  FinetuneConfig out;
  out.rank = options.rank;
  out.scale = options.scale;
  out.learning_rate = config.learning_rate;
  out.epochs = config.num_train_epochs;
  out.batch_size = options.batch_size;
  out.loss_mask = loss_mask_for(config.strategy);
  out.target_layers = options.target_layers;
  return out;
}

TttOutcome ttt_adapt_and_eval(const ModelBackend& backend, const ArcTask& task, const ToolConfig& config,
                              std::uint64_t seed, const TttOptions& options) {
  const auto dataset = build_augmented_dataset(task, config, seed);
  TttOutcome outcome;
  outcome.steps = estimate_steps(static_cast<long long>(dataset.size()), config, options.batch_size);
  if (!within_step_budget(outcome.steps, options.step_budget)) {
    throw Error(ErrorCode::kStepBudgetExceeded, std::to_string(outcome.steps) + " steps exceeds budget of " +
                                                    std::to_string(options.step_budget));
  }
  const auto adapter = backend.finetune(dataset, ttt_finetune_config(config, options), seed);
  auto sampling = SamplingParams::greedy(options.max_decode_tokens);
  sampling.seed = seed;
  const auto generation = backend.generate(build_query_prompt(task), sampling, &adapter);
  try {
    outcome.correct = parse_grid(generation.text) == task.test.output;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDecodeFailure) throw;
    outcome.correct = false;
    outcome.flagged = true;
    outcome.flag_reason = e.what();
  }
  return outcome;
}

PolicyEvaluation evaluate_policy(const ModelBackend& backend, const std::vector<ArcTask>& tasks, int k,
                                 std::uint64_t seed, const SamplingParams& sampling, const TttOptions& options) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "evaluate_policy needs k >= 1");
  PolicyEvaluation result;
  for (const auto& task : tasks) {
    const auto prompt = build_tool_prompt(task);
    for (int j = 0; j < k; ++j) {
      ++result.trials;
      try {
        auto params = sampling;
        params.seed = derive_seed(seed, "fewshot-eval-generate", task.id, static_cast<std::uint64_t>(j));
        const auto raw = backend.generate(prompt, params).text;
        const auto config = parse_tool_config(raw);
        const auto outcome =
            ttt_adapt_and_eval(backend, task, config, derive_seed(seed, "fewshot-eval-ttt", task.id,
                                                                  static_cast<std::uint64_t>(j)),
                               options);
        if (outcome.correct) ++result.correct;
        if (outcome.flagged) ++result.flagged;
      } catch (const Error&) {
        ++result.flagged;
      }
    }
  }
  result.success_rate = result.trials == 0 ? 0.0 : static_cast<double>(result.correct) / result.trials;
  return result;
}

FewshotDomain::FewshotDomain(std::vector<ArcTask> tasks, TttOptions options)
    : tasks_(std::move(tasks)), options_(std::move(options)) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    tasks_[i].validate();
    if (!index_.emplace(tasks_[i].id, i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate ARC task id " + tasks_[i].id);
    }
  }
}

const ArcTask& FewshotDomain::task(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown ARC task " + id);
  return tasks_[it->second];
}

std::vector<TaskInstance> FewshotDomain::task_instances() const {
  std::vector<TaskInstance> out;
  out.reserve(tasks_.size());
  for (const auto& task : tasks_) out.push_back(to_task_instance(task));
  return out;
}

std::string FewshotDomain::build_prompt(const TaskInstance& task) const { return build_tool_prompt(this->task(task.id)); }

SelfEdit FewshotDomain::parse(const TaskInstance& task, std::string id, std::string raw) const {
  SelfEdit edit{std::move(id), task.id, std::move(raw), {}};
  edit.payload = parse_tool_config(edit.raw);
  return edit;
}

double FewshotDomain::score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                      std::uint64_t seed) const {
  return backend.evaluate(nullptr, task.evaluation, seed);
}

double FewshotDomain::score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                    const FinetuneConfig& inner, std::uint64_t seed) const {
  (void)inner;  // the self-edit chooses lr/epochs; adapter shape comes from TttOptions
  return ttt_adapt_and_eval(backend, this->task(task.id), edit.tool_config(), seed, options_).correct ? 1.0 : 0.0;
}

}  // namespace selfedit::fewshot

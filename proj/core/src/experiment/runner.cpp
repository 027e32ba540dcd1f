#include "selfedit/experiment/runner.hpp"

#include <fstream>
#include <memory>
#include <ostream>

#include "selfedit/continual/retention.hpp"
#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/fewshot/ttt.hpp"
#include "selfedit/knowledge/grading.hpp"
#include "selfedit/knowledge/knowledge.hpp"
#include "selfedit/remote/backend.hpp"
#include "selfedit/remote/client.hpp"
#include "selfedit/restem/loop.hpp"
#include "selfedit/toy/backend.hpp"
#include "selfedit/toy/world.hpp"

namespace selfedit::experiment {

using nlohmann::json;

namespace {

struct Environment {
  std::unique_ptr<ModelBackend> backend;
  std::shared_ptr<const GraderClient> grader;
};

Environment make_environment(const RunConfig& config) {
  Environment env;
  if (config.grader_endpoint) {
    env.grader = std::make_shared<remote::RemoteGrader>(std::make_shared<remote::Client>(*config.grader_endpoint));
  } else {
    env.grader = std::make_shared<knowledge::LocalMatchGrader>();
  }
  if (config.backend == BackendKind::kToy) {
    toy::ToyModelConfig model;
    model.alphabet = config.toy.alphabet;
    model.templates = config.toy.templates;
    model.init_scale = config.toy.init_scale;
    model.seed = config.seed;
    env.backend = std::make_unique<toy::ToyBackend>(std::move(model));
  } else {
    if (!config.endpoint) throw Error(ErrorCode::kConfigError, "remote backend needs an endpoint");
    env.backend =
        std::make_unique<remote::RemoteBackend>(std::make_shared<remote::Client>(*config.endpoint), env.grader);
  }
  return env;
}

std::vector<TaskInstance> truncate(std::vector<TaskInstance> tasks, std::size_t max_items) {
  if (max_items > 0 && tasks.size() > max_items) tasks.resize(max_items);
  return tasks;
}

std::vector<TaskInstance> toy_contexts(const RunConfig& config, const std::filesystem::path& out) {
  const auto world = toy::make_world(config.toy.world_seed.value_or(config.seed), config.toy.facts,
                                     config.toy.templates, config.toy.alphabet);
  std::ofstream(out / "world.json") << toy::to_json(world).dump(2) << '\n';
  return toy::make_contexts(world, config.toy.facts_per_context);
}

/// Passages for the knowledge and continual domains.
std::vector<TaskInstance> load_passages(const RunConfig& config, const std::filesystem::path& out) {
  const auto& d = config.dataset;
  if (d.path.empty()) {
    if (config.backend != BackendKind::kToy)
      throw Error(ErrorCode::kConfigError, "dataset.path is required with the remote backend");
    return truncate(toy_contexts(config, out), d.max_items);
  }
  if (d.format == "squad") return knowledge::load_squad_v11(d.path, d.max_items);
  if (d.format.empty() || d.format == "knowledge-json")
    return truncate(knowledge::load_knowledge_dataset(d.path), d.max_items);
  throw Error(ErrorCode::kConfigError, "dataset.format " + d.format + " does not hold passages");
}

std::vector<fewshot::ArcTask> synthetic_tasks(const RunConfig& config, std::string_view split, int count) {
  std::vector<fewshot::ArcTask> tasks;
  const int side = config.fewshot.synthetic_grid_size;
  for (int i = 0; i < count; ++i) {
    const auto seed = derive_seed(config.seed, "fewshot-synthetic", split, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    // Any non-identity dihedral relation.
    const auto relation = fewshot::kDihedral[1 + uniform_index(rng, fewshot::kDihedral.size() - 1)];
    tasks.push_back(fewshot::make_synthetic_task(std::string(split) + "-" + std::to_string(i), relation,
                                                 config.fewshot.synthetic_train_pairs, side, side, rng()));
  }
  return tasks;
}

std::vector<fewshot::ArcTask> truncate(std::vector<fewshot::ArcTask> tasks, std::size_t max_items) {
  if (max_items > 0 && tasks.size() > max_items) tasks.resize(max_items);
  return tasks;
}

class LogObserver final : public restem::RoundObserver {
 public:
  LogObserver(restem::JsonlRunWriter& writer, std::ostream* log) : writer_(writer), log_(log) {}

  void after_update(int round, const ModelBackend& backend) override {
    json entry{{"round", round}, {"fingerprint", backend.fingerprint().hex()}};
    if (const auto* toy_backend = dynamic_cast<const toy::ToyBackend*>(&backend)) {
      const auto p = toy_backend->template_probabilities();
      entry["template_probabilities"] = std::vector<double>(p.data(), p.data() + p.size());
    }
    policy_.push_back(std::move(entry));
    writer_.after_update(round, backend);
  }

  void on_round(const restem::RoundResult& result) override {
    writer_.on_round(result);
    if (log_) {
      *log_ << "round " << result.round << ": before=" << result.metrics.mean_score_before
            << " after=" << result.metrics.mean_score_after << " winners=" << result.metrics.winner_count
            << " flagged=" << result.metrics.flagged_count << '\n';
    }
  }

  [[nodiscard]] const json& policy() const noexcept { return policy_; }

 private:
  restem::JsonlRunWriter& writer_;
  std::ostream* log_;
  json policy_ = json::array();
};

json evaluation_json(const fewshot::PolicyEvaluation& e) {
  return {{"success_rate", e.success_rate}, {"trials", e.trials}, {"correct", e.correct}, {"flagged", e.flagged}};
}

json run_loop(ModelBackend& backend, const SelfEditDomain& domain, const std::vector<TaskInstance>& tasks,
              const RunConfig& config, const std::filesystem::path& out, std::ostream* log, RunOutcome& outcome) {
  restem::JsonlRunWriter writer(out);
  LogObserver observer(writer, log);
  const auto result = restem::run(backend, domain, tasks, config.loop, config.seed, &observer);
  json rounds = json::array();
  for (const auto& r : result.rounds) rounds.push_back(restem::round_summary_json(r));
  if (result.aborted) {
    outcome.exit_code = kExitAborted;
    outcome.message = result.abort_reason;
  }
  return {{"rounds", rounds},
          {"policy", observer.policy()},
          {"aborted", result.aborted},
          {"abort_reason", result.abort_reason}};
}

void run_fewshot(ModelBackend& backend, const RunConfig& config, const std::filesystem::path& out,
                 std::ostream* log, RunOutcome& outcome, json& summary) {
  std::vector<fewshot::ArcTask> train;
  if (!config.dataset.path.empty()) {
    if (!config.dataset.format.empty() && config.dataset.format != "arc-dir")
      throw Error(ErrorCode::kConfigError, "fewshot needs dataset.format arc-dir");
    train = truncate(fewshot::load_arc_directory(config.dataset.path), config.dataset.max_items);
  } else {
    train = synthetic_tasks(config, "train", config.fewshot.synthetic_train_tasks);
  }
  const auto eval = config.fewshot.eval_path.empty()
                        ? synthetic_tasks(config, "eval", config.fewshot.synthetic_eval_tasks)
                        : fewshot::load_arc_directory(config.fewshot.eval_path);
  const fewshot::FewshotDomain domain(train, config.fewshot.ttt);
  const auto eval_seed = derive_seed(config.seed, "fewshot-eval");

  // Base model on the held-out pair, no adaptation.
  double base = 0.0;
  for (const auto& task : eval) {
    base += backend.evaluate(nullptr, EvaluationSpec(HeldOutPair{task.test}), eval_seed);
  }
  base = eval.empty() ? 0.0 : base / static_cast<double>(eval.size());

  const auto before = fewshot::evaluate_policy(backend, eval, config.fewshot.eval_samples, eval_seed,
                                               config.loop.sampling, config.fewshot.ttt);
  if (log) *log << "fewshot before RL: " << before.success_rate << '\n';
  summary.update(run_loop(backend, domain, domain.task_instances(), config, out, log, outcome));
  const auto after = fewshot::evaluate_policy(backend, eval, config.fewshot.eval_samples, eval_seed,
                                              config.loop.sampling, config.fewshot.ttt);
  if (log) *log << "fewshot after RL: " << after.success_rate << '\n';
  const json evals{{"eval_tasks", eval.size()},
                   {"samples_per_task", config.fewshot.eval_samples},
                   {"base", base},
                   {"before_rl", evaluation_json(before)},
                   {"after_rl", evaluation_json(after)}};
  std::ofstream(out / "fewshot_eval.json") << evals.dump(2) << '\n';
  summary["fewshot"] = evals;
}

void run_continual(const ModelBackend& backend, const SelfEditDomain& domain, const RunConfig& config,
                   const std::filesystem::path& out, std::ostream* log, json& summary) {
  auto tasks = load_passages(config, out);
  if (static_cast<int>(tasks.size()) > config.continual.tasks) tasks.resize(config.continual.tasks);
  continual::StreamOptions options;
  options.runs = config.continual.runs;
  options.finetune = config.continual.finetune;
  options.sampling = config.loop.sampling;
  options.workers = config.loop.workers;
  const auto matrix = continual::run_stream(backend, domain, tasks, options, config.seed);
  continual::write_retention(out, matrix);
  if (log) {
    *log << "continual: " << matrix.runs_completed << "/" << matrix.runs_requested << " runs completed over "
         << matrix.tasks() << " tasks\n";
  }
  summary["continual"] = continual::to_json(matrix);
}

}  // namespace

RunOutcome run_experiment(const RunConfig& config, std::ostream* log) {
  RunOutcome outcome;
  outcome.output_dir = config.output_dir;
  const std::filesystem::path out = config.output_dir;
  json summary{{"domain", std::string(to_string(config.domain))},
               {"backend", std::string(to_string(config.backend))},
               {"seed", config.seed}};
  try {
    std::filesystem::create_directories(out);
    std::ofstream(out / "config.json") << to_json(config).dump(2) << '\n';
    auto env = make_environment(config);
    switch (config.domain) {
      case Domain::kToy: {
        if (config.backend != BackendKind::kToy)
          throw Error(ErrorCode::kConfigError, "the toy domain needs the toy backend");
        const auto tasks = truncate(toy_contexts(config, out), config.dataset.max_items);
        const toy::ToyDomain domain;
        summary.update(run_loop(*env.backend, domain, tasks, config, out, log, outcome));
        break;
      }
      case Domain::kKnowledge: {
        const auto tasks = load_passages(config, out);
        knowledge::KnowledgeDomainOptions options;
        options.variant = config.knowledge.variant;
        options.source = config.knowledge.source;
        options.include_passage = config.knowledge.include_passage;
        const knowledge::KnowledgeDomain domain(*env.grader, options);
        summary.update(run_loop(*env.backend, domain, tasks, config, out, log, outcome));
        break;
      }
      case Domain::kFewshot:
        run_fewshot(*env.backend, config, out, log, outcome, summary);
        break;
      case Domain::kContinual: {
        knowledge::KnowledgeDomainOptions options;
        options.variant = config.knowledge.variant;
        options.source = config.knowledge.source;
        options.include_passage = config.knowledge.include_passage;
        const knowledge::KnowledgeDomain domain(*env.grader, options);
        run_continual(*env.backend, domain, config, out, log, summary);
        break;
      }
    }
    summary["final_fingerprint"] = env.backend->fingerprint().hex();
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kConfigError:
      case ErrorCode::kSchemaViolation:
      case ErrorCode::kEmptyDataset:
      case ErrorCode::kEmptyResults:
        outcome.exit_code = kExitConfigError;
        break;
      case ErrorCode::kBackendUnavailable:
        outcome.exit_code = kExitAborted;
        break;
      default:
        throw;
    }
    outcome.message = e.what();
    summary["error"] = outcome.message;
  }
  summary["exit_code"] = outcome.exit_code;
  if (!outcome.message.empty()) summary["message"] = outcome.message;
  std::error_code ec;
  if (std::filesystem::is_directory(out, ec)) std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  if (log && !outcome.message.empty()) *log << "stopped: " << outcome.message << '\n';
  return outcome;
}

}  // namespace selfedit::experiment

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/domain.hpp"
#include "selfedit/knowledge/grading.hpp"
#include "selfedit/knowledge/prompts.hpp"
#include "selfedit/knowledge/split.hpp"

namespace selfedit::knowledge {

/// Single-passage inner-loop defaults.
FinetuneConfig default_single_passage_config();
/// Continued-pretraining defaults.
FinetuneConfig default_cpt_config();
/// Policy update (M-step) defaults.
FinetuneConfig default_m_step_config();

struct QaScore {
  double score = 0.0;
  int correct = 0;
  int total = 0;
  int unparseable = 0;
};

/// Answers every question with the no-context QA prompt (greedy) and grades
/// it. The passage never appears in the prompt.
QaScore graded_qa_score(const ModelBackend& backend, const AdapterHandle* adapter,
                        const std::vector<QaItem>& questions, const GraderClient& grader, std::uint64_t seed,
                        int max_answer_tokens = 64);

struct InnerLoopOptions {
  int seeds = 3;
  /// Prepend the raw passage as one extra training document.
  bool include_passage = false;
  int max_answer_tokens = 64;
};

/// Trains one adapter per seed on the self-edit's documents, grades the
/// passage's questions without context, and returns the mean over seeds.
double inner_update_and_eval(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                             const FinetuneConfig& config, const GraderClient& grader, std::uint64_t seed,
                             const InnerLoopOptions& options = {});

struct CptOptions {
  int samples_per_passage = 5;
  PromptVariant variant = PromptVariant::kImplications;
  SamplingParams sampling{1.0, 1024, 0};
  int max_answer_tokens = 64;
};

struct CptResult {
  QaScore qa;
  std::size_t documents = 0;
};

/// Continued pretraining: one finetune over every passage plus all sampled
/// self-edits (each a single document), scored on the union of questions.
CptResult run_cpt(const ModelBackend& backend, const std::vector<TaskInstance>& passages,
                  const FinetuneConfig& config, const GraderClient& grader, std::uint64_t seed,
                  const CptOptions& options = {});

struct KnowledgeDomainOptions {
  PromptVariant variant = PromptVariant::kImplications;
  SelfEditSource source = SelfEditSource::kSelf;
  bool include_passage = false;
  int max_answer_tokens = 64;
};

class KnowledgeDomain final : public SelfEditDomain {
 public:
  /// The grader must outlive the domain.
  KnowledgeDomain(const GraderClient& grader, KnowledgeDomainOptions options = {});

  [[nodiscard]] std::string name() const override { return "knowledge"; }
  [[nodiscard]] std::string build_prompt(const TaskInstance& task) const override;
  [[nodiscard]] SelfEdit parse(const TaskInstance& task, std::string id, std::string raw) const override;
  [[nodiscard]] double score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                       std::uint64_t seed) const override;
  [[nodiscard]] double score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                     const FinetuneConfig& inner, std::uint64_t seed) const override;
  [[nodiscard]] std::vector<TrainingDocument> training_documents(const TaskInstance& task,
                                                                 const SelfEdit& edit) const override;

 private:
  const GraderClient& grader_;
  KnowledgeDomainOptions options_;
};

/// JSON array of {id, passage, qa: [{question, gold}]}.
std::vector<TaskInstance> load_knowledge_dataset(const std::filesystem::path& path);
void save_knowledge_dataset(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks);

/// SQuAD v1.1 layout (data[].paragraphs[].{context, qas[].{question, answers}}).
/// The first listed answer is the gold answer. max_passages 0 means all.
std::vector<TaskInstance> load_squad_v11(const std::filesystem::path& path, std::size_t max_passages = 0);

}  // namespace selfedit::knowledge

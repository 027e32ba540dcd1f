#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/domain.hpp"
#include "selfedit/toy/model.hpp"
#include "selfedit/toy/world.hpp"

namespace selfedit::toy {

/// Tool configurations the toy policy can emit for few-shot prompts. Learning
/// rates are on the toy model's scale.
std::vector<ToolConfig> default_tool_menu();

struct ToyModelConfig {
  ToyAlphabet alphabet;
  int templates = 3;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  std::vector<ToolConfig> tool_menu = default_tool_menu();
};

struct ToyAdapterState final : AdapterState {
  ToyAdapter adapter;
};

/// Prompts are dispatched by shape: the tool-configuration prompt samples a
/// menu entry, a "Question: ... Answer:" prompt answers with a value token, a
/// grid query ending in "output:\n" decodes a grid, and anything holding
/// "FACT e a v" lines samples a template from the policy head and renders
/// those facts with it.
class ToyBackend final : public ModelBackend {
 public:
  explicit ToyBackend(ToyModelConfig config = {});
  ToyBackend(ToyModelConfig config, ToyParams params);

  [[nodiscard]] Generation generate(std::string_view prompt, const SamplingParams& sampling,
                                    const AdapterHandle* adapter = nullptr) const override;
  [[nodiscard]] AdapterHandle finetune(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config,
                                       std::uint64_t seed) const override;
  [[nodiscard]] double evaluate(const AdapterHandle* adapter, const EvaluationSpec& evaluation,
                                std::uint64_t seed) const override;
  void merge(const AdapterHandle& adapter) override;
  /// Trains only the policy heads: each completion is matched to the template
  /// (or tool-menu entry) that produces it, then `epochs` steps of
  /// policy_m_step with step learning_rate / |matched|. Unmatched examples are
  /// skipped.
  void reinforce(const std::vector<TrainingDocument>& examples, const FinetuneConfig& config,
                 std::uint64_t seed) override;
  [[nodiscard]] Fingerprint fingerprint() const override;
  [[nodiscard]] std::unique_ptr<ModelBackend> clone() const override;

  [[nodiscard]] const ToyParams& params() const noexcept { return params_; }
  [[nodiscard]] const ToyModelConfig& config() const noexcept { return config_; }

  /// Template distribution of the policy head at temperature 1.
  [[nodiscard]] Eigen::VectorXd template_probabilities() const;

  /// Adapter with every factor zero for the tables the config targets.
  [[nodiscard]] AdapterHandle zero_adapter(const FinetuneConfig& config) const;

  /// Index of the template whose rendering of the prompt's facts equals the
  /// completion (lowest index first), or -1.
  [[nodiscard]] int infer_template(std::string_view prompt, std::string_view completion) const;
  /// Index of the menu entry whose canonical JSON equals the completion, or -1.
  [[nodiscard]] int infer_tool(std::string_view completion) const;

 private:
  [[nodiscard]] ToyParams effective(const AdapterHandle* adapter) const;

  ToyModelConfig config_;
  ToyParams params_;
};

/// Self-edit domain over toy contexts: the prompt is the implications prompt
/// over the context's fact lines, the self-edit is split into lines, and
/// scores are exact-match accuracy from backend.evaluate.
class ToyDomain final : public SelfEditDomain {
 public:
  [[nodiscard]] std::string name() const override { return "toy"; }
  [[nodiscard]] std::string build_prompt(const TaskInstance& task) const override;
  [[nodiscard]] SelfEdit parse(const TaskInstance& task, std::string id, std::string raw) const override;
  [[nodiscard]] double score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                       std::uint64_t seed) const override;
  [[nodiscard]] double score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                     const FinetuneConfig& inner, std::uint64_t seed) const override;
};

/// Inner-loop settings used by the toy reference runs.
FinetuneConfig toy_inner_config();
/// Policy-update settings used by the toy reference runs.
FinetuneConfig toy_m_step_config();

}  // namespace selfedit::toy

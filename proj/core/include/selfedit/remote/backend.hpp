#pragma once

#include <memory>
#include <string>

#include "selfedit/core/backend.hpp"
#include "selfedit/remote/client.hpp"

namespace selfedit::remote {

struct RemoteAdapterState final : AdapterState {
  std::string model;
};

/// ModelBackend over a remote service. Adapters are finetuned model ids;
/// merge switches the working model to the adapter's model.
class RemoteBackend final : public ModelBackend {
 public:
  /// grader may be null, in which case QA answers are checked by normalised
  /// containment of the gold answer.
  RemoteBackend(std::shared_ptr<const Client> client, std::shared_ptr<const GraderClient> grader = nullptr);

  [[nodiscard]] Generation generate(std::string_view prompt, const SamplingParams& sampling,
                                    const AdapterHandle* adapter = nullptr) const override;
  [[nodiscard]] AdapterHandle finetune(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config,
                                       std::uint64_t seed) const override;
  [[nodiscard]] double evaluate(const AdapterHandle* adapter, const EvaluationSpec& evaluation,
                                std::uint64_t seed) const override;
  void merge(const AdapterHandle& adapter) override;
  [[nodiscard]] Fingerprint fingerprint() const override;
  [[nodiscard]] std::unique_ptr<ModelBackend> clone() const override;

  [[nodiscard]] const std::string& current_model() const noexcept { return model_; }

 private:
  [[nodiscard]] const std::string& model_for(const AdapterHandle* adapter) const;

  std::shared_ptr<const Client> client_;
  std::shared_ptr<const GraderClient> grader_;
  std::string model_;
  std::uint64_t revision_ = 0;
};

/// Grader over a chat endpoint. Always decodes greedily.
class RemoteGrader final : public GraderClient {
 public:
  explicit RemoteGrader(std::shared_ptr<const Client> client, int max_tokens = 16);
  [[nodiscard]] std::string complete(std::string_view grading_prompt) const override;

 private:
  std::shared_ptr<const Client> client_;
  int max_tokens_;
};

}  // namespace selfedit::remote

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "selfedit/core/types.hpp"

namespace selfedit {

/// Contract shared by the toy and remote backends.
///
/// generate/finetune/evaluate are const and may be called concurrently; they
/// never modify base parameters. merge and reinforce mutate the base and must
/// not overlap with any other call on the same instance.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  /// Temperature 0 is greedy. A fixed seed reproduces the completion. When the
  /// completion hits max_tokens it is cut and Generation::truncated is set.
  [[nodiscard]] virtual Generation generate(std::string_view prompt, const SamplingParams& sampling,
                                            const AdapterHandle* adapter = nullptr) const = 0;

  /// Trains a fresh low-rank adapter against the current base.
  [[nodiscard]] virtual AdapterHandle finetune(const std::vector<TrainingDocument>& documents,
                                               const FinetuneConfig& config, std::uint64_t seed) const = 0;

  /// Score in [0, 1]. Throws Error(kStaleAdapter) if the adapter was trained
  /// against a different base.
  [[nodiscard]] virtual double evaluate(const AdapterHandle* adapter, const EvaluationSpec& evaluation,
                                        std::uint64_t seed) const = 0;

  /// Folds the adapter into the base parameters.
  virtual void merge(const AdapterHandle& adapter) = 0;

  /// Supervised update of the generation policy on prompt/completion pairs
  /// (loss on the completion only), merged into the base. The default is
  /// finetune followed by merge.
  virtual void reinforce(const std::vector<TrainingDocument>& examples, const FinetuneConfig& config,
                         std::uint64_t seed);

  [[nodiscard]] virtual Fingerprint fingerprint() const = 0;

  /// Independent copy of the current state, used to reset replicas to base.
  [[nodiscard]] virtual std::unique_ptr<ModelBackend> clone() const = 0;
};

/// Judge used to grade free-text answers. Implementations send the prompt with
/// greedy decoding and return the raw reply.
class GraderClient {
 public:
  virtual ~GraderClient() = default;
  [[nodiscard]] virtual std::string complete(std::string_view grading_prompt) const = 0;
};

}  // namespace selfedit

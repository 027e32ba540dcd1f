#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfedit/core/backend.hpp"
#include "selfedit/core/types.hpp"

namespace selfedit {

/// One domain instantiation of the self-edit loop: how to prompt for a
/// self-edit, how to parse it, and how to apply and score it.
class SelfEditDomain {
 public:
  virtual ~SelfEditDomain() = default;

  [[nodiscard]] virtual std::string name() const = 0;

  [[nodiscard]] virtual std::string build_prompt(const TaskInstance& task) const = 0;

  /// Throws Error for malformed generations; the loop records those as failed
  /// samples.
  [[nodiscard]] virtual SelfEdit parse(const TaskInstance& task, std::string id, std::string raw) const = 0;

  /// Score of the current parameters with no adapter.
  [[nodiscard]] virtual double score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                               std::uint64_t seed) const = 0;

  /// One seed of the inner loop: adapt with the self-edit, then score.
  [[nodiscard]] virtual double score_adapted(const ModelBackend& backend, const TaskInstance& task,
                                             const SelfEdit& edit, const FinetuneConfig& inner,
                                             std::uint64_t seed) const = 0;

  /// Documents a merged (continual) update trains on. Domains whose
  /// self-edits are not document lists throw.
  [[nodiscard]] virtual std::vector<TrainingDocument> training_documents(const TaskInstance& task,
                                                                         const SelfEdit& edit) const;
};

}  // namespace selfedit

#include "selfedit/core/backend.hpp"

#include "selfedit/core/domain.hpp"
#include "selfedit/core/error.hpp"

namespace selfedit {

void ModelBackend::reinforce(const std::vector<TrainingDocument>& examples, const FinetuneConfig& config,
                             std::uint64_t seed) {
  merge(finetune(examples, config, seed));
}

std::vector<TrainingDocument> SelfEditDomain::training_documents(const TaskInstance& task,
                                                                 const SelfEdit& edit) const {
  (void)task;
  std::vector<TrainingDocument> out;
  for (const auto& doc : edit.documents()) out.push_back(TrainingDocument::plain(doc));
  return out;
}

}  // namespace selfedit

#pragma once

#include <cstdint>
#include <vector>

#include "selfedit/core/types.hpp"
#include "selfedit/fewshot/arc.hpp"

namespace selfedit::fewshot {

/// Steps above this are rejected.
inline constexpr int kStepBudget = 375;

struct AugmentOptions {
  /// Leave-one-out documents over the untransformed train pairs.
  bool include_base = true;
};

/// Builds the test-time training set a tool config asks for.
///
/// Base: one leave-one-out document per train pair. basic: the base documents
/// under each of the 8 dihedral transforms. size: base documents with every
/// grid scaled by 2 and by 3 where the 30-cell bound allows. chain: base
/// documents under each ordered pair of distinct non-identity dihedral
/// transforms. Augmented documents are deduplicated by content against
/// everything already in the set (base documents are never removed); repeat
/// then appends one more copy of everything. The
/// final order is a seeded shuffle. Throws Error(kEmptyDataset) if nothing is
/// produced.
std::vector<TrainingDocument> build_augmented_dataset(const ArcTask& task, const ToolConfig& config,
                                                      std::uint64_t seed, const AugmentOptions& options = {});

/// ceil(dataset_size / batch_size) * num_train_epochs.
[[nodiscard]] long long estimate_steps(long long dataset_size, const ToolConfig& config, int batch_size);

[[nodiscard]] constexpr bool within_step_budget(long long steps, int budget = kStepBudget) noexcept {
  return steps <= budget;
}

}  // namespace selfedit::fewshot

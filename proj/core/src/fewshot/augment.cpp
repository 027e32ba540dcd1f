#include "selfedit/fewshot/augment.hpp"

#include <unordered_set>

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/transforms.hpp"

namespace selfedit::fewshot {

namespace {

constexpr int kResizeScales[] = {2, 3};

// One leave-one-out document per train pair of `pairs`.
std::vector<TrainingDocument> leave_one_out(const std::vector<GridPair>& pairs) {
  std::vector<TrainingDocument> docs;
  docs.reserve(pairs.size());
  for (std::size_t held = 0; held < pairs.size(); ++held) {
    std::vector<GridPair> context;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (i != held) context.push_back(pairs[i]);
    }
    docs.push_back(build_demonstration_document(context, pairs[held]));
  }
  return docs;
}

template <typename Fn>
std::vector<GridPair> map_pairs(const std::vector<GridPair>& pairs, Fn&& fn) {
  std::vector<GridPair> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) out.push_back({fn(pair.input), fn(pair.output)});
  return out;
}

bool all_fit(const std::vector<GridPair>& pairs, int k) {
  for (const auto& pair : pairs) {
    if (!fits_resize(pair.input, k) || !fits_resize(pair.output, k)) return false;
  }
  return true;
}

}  // namespace

std::vector<TrainingDocument> build_augmented_dataset(const ArcTask& task, const ToolConfig& config,
                                                      std::uint64_t seed, const AugmentOptions& options) {
  task.validate();
  std::vector<TrainingDocument> docs;
  if (options.include_base) docs = leave_one_out(task.train);

  std::unordered_set<std::string> seen;
  for (const auto& doc : docs) seen.insert(doc.text);
  auto add_augmented = [&](std::vector<TrainingDocument> batch) {
    for (auto& doc : batch) {
      if (seen.insert(doc.text).second) docs.push_back(std::move(doc));
    }
  };

  if (config.use_basic_augmentations) {
    for (Transform t : kDihedral) {
      add_augmented(leave_one_out(map_pairs(task.train, [t](const Grid& g) { return apply(g, t); })));
    }
  }
  if (config.use_size_augmentations) {
    for (int k : kResizeScales) {
      if (!all_fit(task.train, k)) continue;
      add_augmented(leave_one_out(map_pairs(task.train, [k](const Grid& g) { return resize(g, k); })));
    }
  }
  if (config.use_chain_augmentations) {
    for (Transform first : kDihedral) {
      for (Transform second : kDihedral) {
        if (first == Transform::kIdentity || second == Transform::kIdentity || first == second) continue;
        add_augmented(leave_one_out(
            map_pairs(task.train, [first, second](const Grid& g) { return apply(apply(g, first), second); })));
      }
    }
  }
  if (config.use_repeat_augmentations) {
    const std::size_t n = docs.size();
    docs.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) docs.push_back(docs[i]);
  }
  if (docs.empty()) throw Error(ErrorCode::kEmptyDataset, "tool config produced no training documents");

  Rng rng(derive_seed(seed, "augment-order"));
  for (std::size_t i = docs.size() - 1; i > 0; --i) {
    std::swap(docs[i], docs[uniform_index(rng, i + 1)]);
  }
  return docs;
}

long long estimate_steps(long long dataset_size, const ToolConfig& config, int batch_size) {
  if (dataset_size < 1 || batch_size < 1 || config.num_train_epochs < 1) {
    throw Error(ErrorCode::kInvalidArgument, "estimate_steps needs positive arguments");
  }
  return ((dataset_size + batch_size - 1) / batch_size) * config.num_train_epochs;
}

}  // namespace selfedit::fewshot

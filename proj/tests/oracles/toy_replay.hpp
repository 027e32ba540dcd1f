#pragma once

#include <cstdint>
#include <vector>

// Independent replay of the toy self-edit loop. Shares only the seed
// derivation and the world generator with the library; the scorer, adapter
// training, sampling and policy update are re-derived here with plain loops.
namespace oracle {

struct ToyReplaySpec {
  std::uint64_t world_seed = 7;
  std::uint64_t run_seed = 7;
  int facts = 30;
  int facts_per_context = 3;
  int templates = 3;
  double init_scale = 0.1;
  int samples_per_context = 5;
  int rounds = 2;
  double temperature = 1.0;
  int inner_rank = 4;
  double inner_scale = 8.0;
  double inner_lr = 0.5;
  int inner_epochs = 20;
  double m_step_lr = 1.0;
  int m_step_epochs = 2;
};

struct ToyReplayResult {
  /// Per round, mean over all records.
  std::vector<double> mean_before;
  std::vector<double> mean_after;
  std::vector<int> winners;
  /// after[k][c]: adapted accuracy of context c under template k.
  std::vector<std::vector<double>> after;
  std::vector<double> before;
  /// Mean threshold reward of each template over contexts.
  std::vector<double> template_reward;
  /// Policy after 0, 1, ... rounds.
  std::vector<std::vector<double>> policy;
  /// Closed-form E[r] for each entry of `policy`.
  std::vector<double> expected_reward;
};

ToyReplayResult replay_toy_loop(const ToyReplaySpec& spec = {});

}  // namespace oracle

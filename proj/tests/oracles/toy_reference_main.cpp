#include <cstdio>

#include "toy_replay.hpp"

int main() {
  const auto r = oracle::replay_toy_loop();
  for (std::size_t i = 0; i < r.mean_after.size(); ++i) {
    std::printf("round %zu: before=%.17g after=%.17g winners=%d\n", i + 1, r.mean_before[i], r.mean_after[i],
                r.winners[i]);
  }
  for (std::size_t i = 0; i < r.expected_reward.size(); ++i) {
    std::printf("E[r] after %zu updates: %.17g (pi0=%.17g)\n", i, r.expected_reward[i], r.policy[i][0]);
  }
  std::printf("template rewards:");
  for (double x : r.template_reward) std::printf(" %.17g", x);
  std::printf("\nmargin=%.17g\n", r.mean_after.back() - r.mean_after.front());
  return 0;
}

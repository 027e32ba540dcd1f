#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <set>

#include "brute_force.hpp"
#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/restem/loop.hpp"
#include "selfedit/toy/backend.hpp"

namespace {

using namespace selfedit;
using namespace selfedit::restem;

RewardRecord record(const std::string& ctx, int index, double before, double after) {
  RewardRecord r;
  r.context_id = ctx;
  r.self_edit_id = ctx + "/" + std::to_string(index);
  r.sample_index = index;
  r.score_before = before;
  r.score_after = after;
  return r;
}

std::vector<oracle::ScoredSample> scored(const std::vector<RewardRecord>& rs) {
  std::vector<oracle::ScoredSample> out;
  for (const auto& r : rs) out.push_back({r.context_id, r.sample_index, r.score_before, r.score_after});
  return out;
}

LoopConfig small_config() {
  LoopConfig c;
  c.contexts_per_round = 4;
  c.samples_per_context = 3;
  c.seeds_per_sample = 1;
  c.rounds = 2;
  c.inner = toy::toy_inner_config();
  c.m_step = toy::toy_m_step_config();
  return c;
}

std::vector<TaskInstance> toy_dataset(int facts = 12) {
  return toy::make_contexts(toy::make_world(7, facts, 3), 3);
}

toy::ToyBackend toy_backend() {
  toy::ToyModelConfig c;
  c.seed = 7;
  return toy::ToyBackend(c);
}

/// Wraps ToyDomain and injects failures into score_adapted.
class FaultyDomain final : public SelfEditDomain {
 public:
  FaultyDomain(int fail_after, ErrorCode code) : fail_after_(fail_after), code_(code) {}
  std::string name() const override { return "faulty"; }
  std::string build_prompt(const TaskInstance& t) const override { return inner_.build_prompt(t); }
  SelfEdit parse(const TaskInstance& t, std::string id, std::string raw) const override {
    return inner_.parse(t, std::move(id), std::move(raw));
  }
  double score_unadapted(const ModelBackend& b, const TaskInstance& t, std::uint64_t s) const override {
    return inner_.score_unadapted(b, t, s);
  }
  double score_adapted(const ModelBackend& b, const TaskInstance& t, const SelfEdit& e, const FinetuneConfig& c,
                       std::uint64_t s) const override {
    if (calls_++ >= fail_after_) throw Error(code_, "injected");
    return inner_.score_adapted(b, t, e, c, s);
  }

 private:
  toy::ToyDomain inner_;
  int fail_after_;
  ErrorCode code_;
  mutable std::atomic<int> calls_{0};
};

TEST(Rewards, ThresholdMatchesBruteForce) {
  std::vector<RewardRecord> rs{record("a", 0, 0.2, 0.5), record("a", 1, 0.2, 0.2), record("b", 0, 0.5, 0.4)};
  const auto out = assign_rewards(rs, RewardMode::kThreshold);
  std::vector<int> got;
  for (const auto& r : out) got.push_back(r.reward);
  EXPECT_EQ(got, oracle::threshold_rewards(scored(rs)));
  EXPECT_EQ(got, (std::vector<int>{1, 0, 0}));
}

TEST(Rewards, ArgmaxPicksLowestIndexOnTiesAndNothingWithoutGain) {
  std::vector<RewardRecord> rs{record("a", 0, 0.2, 0.4), record("a", 1, 0.2, 0.6), record("a", 2, 0.2, 0.6),
                               record("b", 0, 0.5, 0.5), record("b", 1, 0.5, 0.1)};
  const auto out = assign_rewards(rs, RewardMode::kArgmax);
  std::vector<int> got;
  for (const auto& r : out) got.push_back(r.reward);
  EXPECT_EQ(got, (std::vector<int>{0, 1, 0, 0, 0}));
  EXPECT_EQ(got, oracle::argmax_rewards(scored(rs)));
}

TEST(SampleBatch, DistinctIndicesAndSeeded) {
  const auto a = sample_batch(20, 7, 3, 1);
  const auto b = sample_batch(20, 7, 3, 1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 7u);
  for (auto i : a) EXPECT_LT(i, 20u);
  EXPECT_NE(a, sample_batch(20, 7, 3, 2));
  EXPECT_THROW((void)sample_batch(3, 10, 3, 1), Error);
}

TEST(LoopConfig, ValidateRejectsNonPositiveCounts) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.samples_per_context = 0;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.workers = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(EStep, RecordsCarryPolicyAndMeanSeedScore) {
  const auto backend = toy_backend();
  auto config = small_config();
  config.seeds_per_sample = 2;
  const auto data = toy_dataset();
  const auto result = e_step(backend, toy::ToyDomain{}, data, config, 1, 5);
  ASSERT_EQ(result.records.size(), data.size() * 3);
  for (const auto& r : result.records) {
    EXPECT_EQ(r.policy_fingerprint, backend.fingerprint());
    ASSERT_EQ(r.seed_scores.size(), 2u);
    EXPECT_DOUBLE_EQ(r.score_after, (r.seed_scores[0] + r.seed_scores[1]) / 2.0);
    EXPECT_EQ(r.reward, r.score_after > r.score_before ? 1 : 0);
  }
  int winners = 0;
  for (const auto& r : result.records) winners += r.reward;
  EXPECT_EQ(result.metrics.winner_count, winners);
  EXPECT_EQ(static_cast<int>(result.winners.size()), winners);
}

TEST(EStep, WorkerCountDoesNotChangeResults) {
  const auto backend = toy_backend();
  auto config = small_config();
  const auto data = toy_dataset();
  const auto a = e_step(backend, toy::ToyDomain{}, data, config, 1, 5);
  config.workers = 4;
  const auto b = e_step(backend, toy::ToyDomain{}, data, config, 1, 5);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(selfedit::to_json(a.records[i]), selfedit::to_json(b.records[i]));
  }
}

TEST(EStep, FailedSamplesAreFlaggedNotRewarded) {
  const auto backend = toy_backend();
  const FaultyDomain domain(2, ErrorCode::kDecodeFailure);
  const auto result = e_step(backend, domain, toy_dataset(), small_config(), 1, 5);
  int flagged = 0;
  for (const auto& r : result.records) {
    if (r.flagged) {
      ++flagged;
      EXPECT_EQ(r.reward, 0);
      EXPECT_EQ(r.score_after, r.score_before);
      EXPECT_FALSE(r.flag_reason.empty());
    }
  }
  EXPECT_EQ(flagged, static_cast<int>(result.records.size()) - 2);
  EXPECT_EQ(result.metrics.flagged_count, flagged);
}

TEST(Run, BackendOutageAbortsKeepingCompletedRounds) {
  auto backend = toy_backend();
  auto config = small_config();
  const int per_round = config.contexts_per_round * config.samples_per_context;
  const FaultyDomain domain(per_round, ErrorCode::kBackendUnavailable);
  const auto result = run(backend, domain, toy_dataset(), config, 5);
  EXPECT_TRUE(result.aborted);
  EXPECT_NE(result.abort_reason.find("injected"), std::string::npos);
  ASSERT_EQ(result.rounds.size(), 1u);
  EXPECT_EQ(static_cast<int>(result.rounds[0].records.size()), per_round);
}

TEST(MStep, StalePolicyIsRejected) {
  auto backend = toy_backend();
  auto result = e_step(backend, toy::ToyDomain{}, toy_dataset(), small_config(), 1, 5);
  ASSERT_FALSE(result.winners.empty());
  backend.merge(backend.zero_adapter(toy::toy_inner_config()));
  try {
    m_step(backend, result, toy::toy_m_step_config(), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStalePolicy);
  }
}

TEST(MStep, NoWinnersIsANoOp) {
  auto backend = toy_backend();
  RoundResult empty;
  empty.round = 1;
  const auto fp = backend.fingerprint();
  m_step(backend, empty, toy::toy_m_step_config(), 1);
  EXPECT_EQ(backend.fingerprint(), fp);
}

TEST(MStep, WinnersChangeThePolicy) {
  auto backend = toy_backend();
  const auto result = e_step(backend, toy::ToyDomain{}, toy_dataset(), small_config(), 1, 5);
  ASSERT_FALSE(result.winners.empty());
  const auto before = backend.template_probabilities();
  m_step(backend, result, toy::toy_m_step_config(), 1);
  EXPECT_FALSE(backend.template_probabilities().isApprox(before));
}

TEST(Run, WriterProducesRecordsEventsAndSummary) {
  auto backend = toy_backend();
  const auto dir = std::filesystem::temp_directory_path() / "selfedit_restem_writer";
  std::filesystem::remove_all(dir);
  JsonlRunWriter writer(dir);
  const auto config = small_config();
  const auto result = run(backend, toy::ToyDomain{}, toy_dataset(), config, 5, &writer);
  ASSERT_EQ(result.rounds.size(), 2u);
  EXPECT_NE(result.rounds[0].policy_after, result.rounds[0].policy_before);
  auto count_lines = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) n += line.empty() ? 0 : 1;
    return n;
  };
  const int records = config.rounds * config.contexts_per_round * config.samples_per_context;
  EXPECT_EQ(count_lines(dir / "records.jsonl"), records);
  EXPECT_EQ(count_lines(dir / "events.jsonl"), records * config.seeds_per_sample);
  std::ifstream in(dir / "round_summary.json");
  const auto summary = nlohmann::json::parse(in);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[1]["round"], 2);
}

}  // namespace

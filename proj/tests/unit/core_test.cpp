#include <gtest/gtest.h>

#include <set>

#include "selfedit/core/error.hpp"
#include "selfedit/core/grid.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/core/types.hpp"

namespace {

using namespace selfedit;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Grid, RejectsRaggedOversizedAndOutOfRangeInput) {
  EXPECT_EQ(code_of([] { Grid({{1, 2}, {3}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Grid({{10}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Grid(std::vector<std::vector<int>>{}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { Grid(std::vector<std::vector<int>>(31, std::vector<int>(1, 0))); }),
            ErrorCode::kInvalidArgument);
  const Grid g{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 3);
  EXPECT_EQ(g.at(1, 2), 6);
  EXPECT_EQ(g.to_rows(), (std::vector<std::vector<int>>{{1, 2, 3}, {4, 5, 6}}));
}

TEST(Grid, JsonRoundTrip) {
  const Grid g{{0, 9}, {3, 4}};
  EXPECT_EQ(grid_from_json(to_json(g)), g);
}

TEST(DeriveSeed, IsStableAndPartSensitive) {
  EXPECT_EQ(derive_seed(7, "generate", std::uint64_t{1}), derive_seed(7, "generate", std::uint64_t{1}));
  EXPECT_NE(derive_seed(7, "generate", std::uint64_t{1}), derive_seed(7, "inner", std::uint64_t{1}));
  EXPECT_NE(derive_seed(7, "generate"), derive_seed(8, "generate"));
  EXPECT_NE(derive_seed(7, "a", "bc"), derive_seed(7, "ab", "c"));
}

TEST(Random, UnitUniformAndIndexRanges) {
  Rng rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = unit_uniform(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = uniform_index(rng, 7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_EQ(uniform_index(rng, 1), 0u);
}

TEST(Random, StandardNormalMoments) {
  Rng rng(3);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = standard_normal(rng);
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.03);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(TaskInstance, ValidateRequiresIdContextAndEvaluation) {
  TaskInstance t{"id", "context", EvaluationSpec(QaSet{{{"q", "a"}}})};
  EXPECT_NO_THROW(t.validate());
  t.context.clear();
  EXPECT_EQ(code_of([&] { t.validate(); }), ErrorCode::kInvalidArgument);
  TaskInstance empty_eval{"id", "c", EvaluationSpec(QaSet{})};
  EXPECT_EQ(code_of([&] { empty_eval.validate(); }), ErrorCode::kInvalidArgument);
  const TaskInstance a{"same", "c", EvaluationSpec(QaSet{{{"q", "a"}}})};
  EXPECT_ANY_THROW(validate_dataset({a, a}));
}

TEST(EvaluationSpec, KindAccessors) {
  const EvaluationSpec qa(QaSet{{{"q", "a"}}});
  EXPECT_EQ(qa.kind(), EvaluationKind::kQaSet);
  EXPECT_EQ(qa.qa().size(), 1u);
  EXPECT_ANY_THROW((void)qa.io());
  const EvaluationSpec io(HeldOutPair{{Grid{{1}}, Grid{{2}}}});
  EXPECT_EQ(io.kind(), EvaluationKind::kHeldOutIoPair);
  EXPECT_EQ(io.io().output, Grid{{2}});
}

TEST(TrainingDocument, PromptCompletionMarksOutputSpan) {
  const auto doc = TrainingDocument::prompt_completion("prompt ", "completion");
  EXPECT_EQ(doc.text, "prompt completion");
  EXPECT_EQ(doc.prompt(), "prompt ");
  EXPECT_EQ(doc.completion(), "completion");
  const auto plain = TrainingDocument::plain("abc");
  EXPECT_FALSE(plain.output_begin.has_value());
}

TEST(FinetuneConfig, ValidateRejectsBadValues) {
  FinetuneConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.scaling(), 2.0);
  c.rank = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = FinetuneConfig{};
  c.learning_rate = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = FinetuneConfig{};
  c.target_layers.clear();
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(FinetuneConfig, OutputMaskNeedsMarkedSpans) {
  FinetuneConfig c;
  EXPECT_EQ(code_of([&] { validate_documents({}, c); }), ErrorCode::kEmptyDocuments);
  c.loss_mask = LossMask::kOutputTokensOnly;
  EXPECT_ANY_THROW(validate_documents({TrainingDocument::plain("x")}, c));
  EXPECT_NO_THROW(validate_documents({TrainingDocument::prompt_completion("p", "c")}, c));
}

TEST(FinetuneConfig, JsonIsStrictAndRoundTrips) {
  FinetuneConfig c;
  c.rank = 8;
  c.loss_mask = LossMask::kOutputTokensOnly;
  const auto back = finetune_config_from_json(to_json(c), FinetuneConfig{}, "cfg");
  EXPECT_EQ(back.rank, 8);
  EXPECT_EQ(back.loss_mask, LossMask::kOutputTokensOnly);
  try {
    (void)finetune_config_from_json(nlohmann::json{{"leanring_rate", 1.0}}, FinetuneConfig{}, "loop.inner");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.path(), "loop.inner.leanring_rate");
    EXPECT_EQ(e.code(), ErrorCode::kSchemaViolation);
  }
}

TEST(RewardRecord, JsonRoundTrip) {
  RewardRecord r;
  r.context_id = "c";
  r.self_edit_id = "c/r1/s0";
  r.sample_index = 2;
  r.score_before = 0.25;
  r.score_after = 0.5;
  r.seed_scores = {0.5};
  r.seeds_used = 1;
  r.reward = 1;
  r.policy_fingerprint.value = 0xabcdef;
  r.raw = "text";
  const auto back = reward_record_from_json(to_json(r));
  EXPECT_EQ(back.self_edit_id, r.self_edit_id);
  EXPECT_EQ(back.policy_fingerprint, r.policy_fingerprint);
  EXPECT_EQ(back.seed_scores, r.seed_scores);
  EXPECT_EQ(back.raw, "text");
}

TEST(ErrorCode, HasStableNames) {
  EXPECT_EQ(to_string(ErrorCode::kEmptyResults), "empty-results");
  EXPECT_EQ(to_string(ErrorCode::kBackendUnavailable), "backend-unavailable");
}

}  // namespace

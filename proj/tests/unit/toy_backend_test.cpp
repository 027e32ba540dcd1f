#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "selfedit/core/error.hpp"
#include "selfedit/fewshot/tool_config.hpp"
#include "selfedit/knowledge/prompts.hpp"
#include "selfedit/toy/backend.hpp"
#include "selfedit/toy/world.hpp"

namespace {

using namespace selfedit;
using namespace selfedit::toy;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

ToyBackend make_backend(std::uint64_t seed = 7) {
  ToyModelConfig c;
  c.seed = seed;
  return ToyBackend(c);
}

TEST(ToyWorld, FactsHaveDistinctKeys) {
  const auto world = make_world(3, 40, 3);
  ASSERT_EQ(world.facts.size(), 40u);
  std::set<std::pair<int, int>> keys;
  for (const auto& f : world.facts) {
    EXPECT_TRUE(keys.emplace(f.entity, f.attribute).second);
    EXPECT_LT(f.value, world.alphabet.values);
  }
  const auto again = make_world(3, 40, 3);
  EXPECT_EQ(again.facts, world.facts);
}

TEST(ToyWorld, RejectsImpossibleRequests) {
  EXPECT_EQ(code_of([] { (void)make_world(1, 16 * 8 + 1, 3); }), ErrorCode::kAlphabetExhausted);
  EXPECT_EQ(code_of([] { (void)make_world(1, 0, 3); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { (void)make_world(1, 4, 5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { (void)make_world(1, 4, 1); }), ErrorCode::kInvalidArgument);
}

TEST(ToyWorld, TemplatesRender) {
  const ToyAlphabet a;
  const Fact f{1, 2, 9};
  EXPECT_EQ(render_fact(a, ToyTemplate::kAligned, f), "e1 a2 v9");
  EXPECT_EQ(render_fact(a, ToyTemplate::kReversed, f), "v9 a2 e1");
  EXPECT_EQ(render_fact(a, ToyTemplate::kDistractor, f), "e1 a2 v0");
  EXPECT_EQ(render_fact(a, ToyTemplate::kSwapped, f), "a2 e1 v9");
  EXPECT_EQ(fact_line(a, f), "FACT e1 a2 v9");
  EXPECT_EQ(parse_fact_lines(a, "noise\nFACT e1 a2 v9\nFACT x"), std::vector<Fact>{f});
}

TEST(ToyWorld, ContextsDropShortTrailingGroupAndRoundTrip) {
  const auto world = make_world(5, 7, 3);
  const auto contexts = make_contexts(world, 3);
  ASSERT_EQ(contexts.size(), 2u);
  EXPECT_EQ(contexts[0].id, "ctx-0");
  EXPECT_EQ(contexts[1].evaluation.qa().size(), 3u);
  const auto back = world_from_json(to_json(world));
  EXPECT_EQ(back.facts, world.facts);
  EXPECT_EQ(back.seed, world.seed);
}

TEST(ToyBackend, GenerationIsSeededAndDispatchesOnPromptShape) {
  const auto backend = make_backend();
  const auto world = make_world(1, 3, 3);
  const auto ctx = make_contexts(world, 3).front();
  const auto prompt = ToyDomain{}.build_prompt(ctx);
  SamplingParams s;
  s.seed = 42;
  const auto g1 = backend.generate(prompt, s);
  const auto g2 = backend.generate(prompt, s);
  EXPECT_EQ(g1.text, g2.text);
  EXPECT_GE(backend.infer_template(prompt, g1.text), 0);

  const auto answer = backend.generate(knowledge::build_qa_prompt(fact_question(world.alphabet, world.facts[0]).question), SamplingParams::greedy(8)).text;
  EXPECT_EQ(answer.rfind('v', 0), 0u);
}

TEST(ToyBackend, TruncatesAtMaxTokens) {
  const auto backend = make_backend();
  const auto world = make_world(1, 6, 3);
  const auto prompt = ToyDomain{}.build_prompt(make_contexts(world, 6).front());
  auto s = SamplingParams::greedy(4);
  const auto g = backend.generate(prompt, s);
  EXPECT_TRUE(g.truncated);
}

TEST(ToyBackend, FinetuneRaisesAccuracyWithoutTouchingBase) {
  const auto backend = make_backend();
  const auto world = make_world(2, 3, 3);
  const auto ctx = make_contexts(world, 3).front();
  std::vector<TrainingDocument> docs{TrainingDocument::plain(render_facts(world.alphabet, ToyTemplate::kAligned, world.facts))};
  const auto before_fp = backend.fingerprint();
  const double before = backend.evaluate(nullptr, ctx.evaluation, 1);
  const auto adapter = backend.finetune(docs, toy_inner_config(), 3);
  const double after = backend.evaluate(&adapter, ctx.evaluation, 1);
  EXPECT_EQ(after, 1.0);
  EXPECT_LE(before, after);
  EXPECT_EQ(backend.fingerprint(), before_fp);
  EXPECT_EQ(backend.evaluate(nullptr, ctx.evaluation, 1), before);
}

TEST(ToyBackend, MergeChangesFingerprintAndStalesOldAdapters) {
  auto backend = make_backend();
  const auto world = make_world(2, 3, 3);
  const auto ctx = make_contexts(world, 3).front();
  std::vector<TrainingDocument> docs{TrainingDocument::plain(render_facts(world.alphabet, ToyTemplate::kAligned, world.facts))};
  const auto a1 = backend.finetune(docs, toy_inner_config(), 3);
  const auto a2 = backend.finetune(docs, toy_inner_config(), 4);
  const auto fp = backend.fingerprint();
  backend.merge(a1);
  EXPECT_NE(backend.fingerprint(), fp);
  EXPECT_EQ(backend.evaluate(nullptr, ctx.evaluation, 1), 1.0);
  EXPECT_EQ(code_of([&] { (void)backend.evaluate(&a2, ctx.evaluation, 1); }), ErrorCode::kStaleAdapter);
  EXPECT_EQ(code_of([&] { backend.merge(a2); }), ErrorCode::kStaleAdapter);
}

TEST(ToyBackend, ZeroAdapterMergeStillAdvancesRevision) {
  auto backend = make_backend();
  const auto fp = backend.fingerprint();
  backend.merge(backend.zero_adapter(toy_inner_config()));
  EXPECT_NE(backend.fingerprint(), fp);
}

TEST(ToyBackend, CloneIsIndependent) {
  auto backend = make_backend();
  auto copy = backend.clone();
  EXPECT_EQ(copy->fingerprint(), backend.fingerprint());
  copy->merge(copy->finetune({TrainingDocument::plain("e1 a1 v1")}, toy_inner_config(), 1));
  EXPECT_NE(copy->fingerprint(), backend.fingerprint());
}

TEST(ToyBackend, ReinforceShiftsPolicyTowardsMatchedTemplate) {
  auto backend = make_backend();
  const auto world = make_world(2, 3, 3);
  const auto ctx = make_contexts(world, 3).front();
  const auto prompt = ToyDomain{}.build_prompt(ctx);
  const auto completion = render_facts(world.alphabet, ToyTemplate::kReversed, world.facts);
  EXPECT_EQ(backend.infer_template(prompt, completion), 1);
  const double before = backend.template_probabilities()(1);
  backend.reinforce(std::vector<TrainingDocument>{TrainingDocument::prompt_completion(prompt, completion),
                     TrainingDocument::prompt_completion(prompt, "unmatched")},
                    toy_m_step_config(), 1);
  EXPECT_GT(backend.template_probabilities()(1), before);
  EXPECT_NEAR(backend.template_probabilities().sum(), 1.0, 1e-12);
}

TEST(ToyBackend, ToolMenuCompletionsAreRecognised) {
  const auto backend = make_backend();
  const auto menu = default_tool_menu();
  ASSERT_FALSE(menu.empty());
  EXPECT_EQ(backend.infer_tool(selfedit::fewshot::to_canonical_json(menu[0])), 0);
  EXPECT_EQ(backend.infer_tool("{}"), -1);
}

TEST(ToyDomain, ScoresAreAccuracies) {
  const auto backend = make_backend();
  const auto world = make_world(2, 3, 3);
  const auto ctx = make_contexts(world, 3).front();
  ToyDomain domain;
  const auto edit = domain.parse(ctx, "e", render_facts(world.alphabet, ToyTemplate::kAligned, world.facts));
  EXPECT_EQ(domain.score_adapted(backend, ctx, edit, toy_inner_config(), 5), 1.0);
  const auto bad = domain.parse(ctx, "e", render_facts(world.alphabet, ToyTemplate::kDistractor, world.facts));
  EXPECT_EQ(domain.score_adapted(backend, ctx, bad, toy_inner_config(), 5), 0.0);
}

}  // namespace

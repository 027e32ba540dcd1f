#include <benchmark/benchmark.h>

#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/fewshot/augment.hpp"
#include "selfedit/fewshot/transforms.hpp"
#include "selfedit/restem/loop.hpp"
#include "selfedit/toy/backend.hpp"
#include "selfedit/toy/world.hpp"

namespace {

using namespace selfedit;

toy::ToyModelConfig model_config() {
  toy::ToyModelConfig c;
  c.seed = 7;
  return c;
}

void BM_ToyFinetune(benchmark::State& state) {
  const toy::ToyBackend backend(model_config());
  const auto world = toy::make_world(7, 30, 3);
  const auto contexts = toy::make_contexts(world, 3);
  const std::vector<TrainingDocument> docs = {
      {toy::render_facts(world.alphabet, toy::ToyTemplate::kAligned, {world.facts[0], world.facts[1]}), {}}};
  const auto config = toy::toy_inner_config();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(backend.finetune(docs, config, ++seed));
}
BENCHMARK(BM_ToyFinetune);

void BM_ToyEvaluate(benchmark::State& state) {
  const toy::ToyBackend backend(model_config());
  const auto world = toy::make_world(7, 30, 3);
  const auto contexts = toy::make_contexts(world, 3);
  for (auto _ : state) benchmark::DoNotOptimize(backend.evaluate(nullptr, contexts[0].evaluation, 1));
}
BENCHMARK(BM_ToyEvaluate);

void BM_DihedralTransforms(benchmark::State& state) {
  const auto side = static_cast<int>(state.range(0));
  const auto task = fewshot::make_synthetic_task("bench", fewshot::Transform::kRotate90, 1, side, side, 3);
  for (auto _ : state) {
    for (auto t : fewshot::kDihedral) benchmark::DoNotOptimize(fewshot::apply(task.test.input, t));
  }
}
BENCHMARK(BM_DihedralTransforms)->Arg(3)->Arg(10)->Arg(30);

void BM_AugmentedDataset(benchmark::State& state) {
  const auto task = fewshot::make_synthetic_task("bench", fewshot::Transform::kTranspose, 3, 5, 5, 11);
  ToolConfig config;
  config.use_basic_augmentations = true;
  config.use_size_augmentations = true;
  config.use_chain_augmentations = true;
  config.use_repeat_augmentations = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fewshot::build_augmented_dataset(task, config, 5));
}
BENCHMARK(BM_AugmentedDataset)->Arg(0)->Arg(1);

void BM_ToyEStep(benchmark::State& state) {
  const toy::ToyBackend backend(model_config());
  const toy::ToyDomain domain;
  const auto world = toy::make_world(7, 30, 3);
  const auto contexts = toy::make_contexts(world, 3);
  restem::LoopConfig config;
  config.contexts_per_round = 10;
  config.samples_per_context = 5;
  config.seeds_per_sample = 1;
  config.inner = toy::toy_inner_config();
  config.m_step = toy::toy_m_step_config();
  config.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(restem::e_step(backend, domain, contexts, config, 1, 7));
}
BENCHMARK(BM_ToyEStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

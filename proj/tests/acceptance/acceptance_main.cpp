// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "brute_force.hpp"
#include "continual_replay.hpp"
#include "selfedit/continual/retention.hpp"
#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/experiment/config.hpp"
#include "selfedit/experiment/report.hpp"
#include "selfedit/experiment/runner.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/fewshot/augment.hpp"
#include "selfedit/fewshot/tool_config.hpp"
#include "selfedit/fewshot/transforms.hpp"
#include "selfedit/fewshot/ttt.hpp"
#include "selfedit/knowledge/grading.hpp"
#include "selfedit/knowledge/knowledge.hpp"
#include "selfedit/knowledge/prompts.hpp"
#include "selfedit/knowledge/split.hpp"
#include "selfedit/remote/backend.hpp"
#include "selfedit/remote/client.hpp"
#include "selfedit/remote/stub_server.hpp"
#include "selfedit/restem/loop.hpp"
#include "selfedit/toy/backend.hpp"
#include "selfedit/toy/model.hpp"
#include "selfedit/toy/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace selfedit;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("selfedit-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

experiment::RunConfig reference_config(const fs::path& out) {
  auto c = experiment::default_config(experiment::Domain::kToy, experiment::BackendKind::kToy);
  c.seed = 7;
  c.toy.world_seed = 7;
  c.toy.facts = 30;
  c.toy.facts_per_context = 3;
  c.loop.contexts_per_round = 10;
  c.loop.samples_per_context = 5;
  c.loop.reward_mode = RewardMode::kThreshold;
  c.loop.rounds = 2;
  c.output_dir = out.string();
  return c;
}

// Mean threshold reward of each template over the reference contexts, scored
// with the library's inner loop.
std::vector<double> template_rewards(const experiment::RunConfig& c) {
  toy::ToyModelConfig model;
  model.seed = c.seed;
  const toy::ToyBackend backend(model);
  const toy::ToyDomain domain;
  const auto world = toy::make_world(*c.toy.world_seed, c.toy.facts, c.toy.templates);
  const auto contexts = toy::make_contexts(world, c.toy.facts_per_context);
  std::vector<double> rewards(static_cast<std::size_t>(c.toy.templates), 0.0);
  for (const auto& task : contexts) {
    const double before = domain.score_unadapted(backend, task, restem::before_seed(c.seed, task.id));
    const auto facts = toy::parse_fact_lines(world.alphabet, task.context);
    for (int k = 0; k < c.toy.templates; ++k) {
      const auto raw = toy::render_facts(world.alphabet, static_cast<toy::ToyTemplate>(k), facts);
      const auto edit = domain.parse(task, "probe", raw);
      const double after = domain.score_adapted(backend, task, edit, c.loop.inner, restem::inner_seed(c.seed, task.id, 0));
      if (after > before) rewards[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(contexts.size());
    }
  }
  return rewards;
}

Check toy_end_to_end() {
  Check c;
  const auto fixture = json::parse(read_file(fs::path(SELFEDIT_FIXTURES_DIR) / "toy_reference.json"));
  const auto out = scratch_dir("toy");
  const auto config = reference_config(out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto outcome = experiment::run_experiment(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(outcome.exit_code == 0, "run failed: " + outcome.message);
  if (!c.ok) return c;
  const auto summary = json::parse(read_file(out / "summary.json"));
  const auto rewards = template_rewards(config);

  std::vector<double> expected;
  {
    const double uniform = 1.0 / static_cast<double>(rewards.size());
    double e = 0.0;
    for (double r : rewards) e += uniform * r;
    expected.push_back(e);
  }
  for (const auto& p : summary.at("policy")) {
    const auto probs = p.at("template_probabilities").get<std::vector<double>>();
    double e = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) e += probs[k] * rewards[k];
    expected.push_back(e);
  }
  c.expect(expected.size() == 3, "expected two policy updates");
  for (std::size_t i = 1; i < expected.size(); ++i) {
    c.expect(expected[i] >= expected[i - 1], "E[r] decreased at update " + std::to_string(i));
  }
  const auto& rounds = summary.at("rounds");
  const double first = rounds.at(0).at("metrics").at("mean_score_after").get<double>();
  const double second = rounds.at(1).at("metrics").at("mean_score_after").get<double>();
  const double margin = second - first;
  const double target = fixture.at("margin").get<double>();
  c.expect(std::abs(margin - target) <= fixture.at("margin_tolerance").get<double>(), "margin off the fixture");
  c.expect(margin > 0.0, "round 2 did not improve on round 1");
  c.expect(seconds < fixture.at("max_runtime_seconds").get<double>(), "runtime over budget");
  char buf[256];
  std::snprintf(buf, sizeof buf, "E[r] %.4f -> %.4f -> %.4f, margin %.4f (fixture %.4f), %.2fs", expected[0],
                expected[1], expected[2], margin, target, seconds);
  if (c.ok) c.detail = buf;
  else c.detail += std::string(" [") + buf + "]";
  return c;
}

Check estimator_equivalence() {
  Check c;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    const int K = 2 + static_cast<int>(rng() % 7);
    const int n = 1 + static_cast<int>(rng() % 12);
    std::normal_distribution<double> normal(0.0, 1.5);
    std::vector<double> z(static_cast<std::size_t>(K));
    for (auto& x : z) x = normal(rng);
    std::vector<int> samples;
    std::vector<int> rewards;
    std::vector<int> winners;
    for (int i = 0; i < n; ++i) {
      samples.push_back(static_cast<int>(rng() % static_cast<unsigned>(K)));
      rewards.push_back(static_cast<int>(rng() % 2));
      if (rewards.back()) winners.push_back(samples.back());
    }
    if (winners.empty()) {
      rewards[0] = 1;
      winners.push_back(samples[0]);
    }
    const Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(z.data(), K);
    const auto lib = toy::policy_sft_loss_and_grad(zv, winners, n);
    const std::vector<double> lib_grad(lib.gradient.data(), lib.gradient.data() + K);
    const auto est = oracle::restricted_estimator(z, samples, rewards);
    const auto fd = oracle::central_difference(
        [&](const std::vector<double>& x) {
          return toy::policy_sft_loss_and_grad(Eigen::Map<const Eigen::VectorXd>(x.data(), K), winners, n).loss;
        },
        z);
    worst = std::max({worst, oracle::relative_error(lib_grad, est), oracle::relative_error(lib_grad, fd)});
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", worst);
  c.expect(worst <= 1e-5, std::string("relative error ") + buf);
  if (c.ok) c.detail = std::string("20 instances, worst relative error ") + buf;
  return c;
}

Check reward_filtering() {
  Check c;
  std::mt19937_64 rng(99);
  int argmax_winners = 0;
  for (int batch = 0; batch < 200; ++batch) {
    const int contexts = 1 + static_cast<int>(rng() % 6);
    const int m = 1 + static_cast<int>(rng() % 6);
    std::vector<RewardRecord> records;
    std::vector<oracle::ScoredSample> samples;
    for (int ctx = 0; ctx < contexts; ++ctx) {
      const double before = static_cast<double>(rng() % 5) / 4.0;
      for (int j = 0; j < m; ++j) {
        RewardRecord r;
        r.context_id = "c" + std::to_string(ctx);
        r.sample_index = j;
        r.score_before = before;
        r.score_after = static_cast<double>(rng() % 5) / 4.0;  // coarse grid forces ties
        records.push_back(r);
        samples.push_back({r.context_id, j, r.score_before, r.score_after});
      }
    }
    // Shuffle so contexts interleave.
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<RewardRecord> shuffled;
    std::vector<oracle::ScoredSample> shuffled_samples;
    for (auto i : order) {
      shuffled.push_back(records[i]);
      shuffled_samples.push_back(samples[i]);
    }
    const auto thr = restem::assign_rewards(shuffled, RewardMode::kThreshold);
    const auto arg = restem::assign_rewards(shuffled, RewardMode::kArgmax);
    const auto thr_oracle = oracle::threshold_rewards(shuffled_samples);
    const auto arg_oracle = oracle::argmax_rewards(shuffled_samples);
    std::map<std::string, int> per_context;
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      c.expect(thr[i].reward == thr_oracle[i], "threshold mismatch in batch " + std::to_string(batch));
      c.expect(arg[i].reward == arg_oracle[i], "argmax mismatch in batch " + std::to_string(batch));
      c.expect(thr[i].context_id == shuffled[i].context_id, "record order changed");
      per_context[arg[i].context_id] += arg[i].reward;
      argmax_winners += arg[i].reward;
    }
    for (const auto& [ctx, count] : per_context) c.expect(count <= 1, "more than one argmax winner in " + ctx);
  }
  if (c.ok) c.detail = "200 batches, " + std::to_string(argmax_winners) + " argmax winners checked";
  return c;
}

Grid random_grid(std::mt19937_64& rng, int rows, int cols) {
  Grid g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int col = 0; col < cols; ++col) g.set(r, col, static_cast<int>(rng() % 10));
  return g;
}

Check grid_algebra() {
  using fewshot::apply;
  using fewshot::Transform;
  Check c;
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 1000; ++i) {
    const Grid g = random_grid(rng, 1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 12));
    const Grid r1 = apply(g, Transform::kRotate90);
    c.expect(apply(apply(apply(r1, Transform::kRotate90), Transform::kRotate90), Transform::kRotate90) == g,
             "rotate90^4 != id");
    c.expect(apply(apply(g, Transform::kFlipHorizontal), Transform::kFlipHorizontal) == g, "flipH^2 != id");
    c.expect(apply(apply(g, Transform::kFlipVertical), Transform::kFlipVertical) == g, "flipV^2 != id");
    c.expect(apply(apply(g, Transform::kTranspose), Transform::kTranspose) == g, "transpose^2 != id");
    c.expect(apply(g, Transform::kRotate180) == apply(r1, Transform::kRotate90), "rotate180 != rotate90^2");
  }
  // Every augmented pair must, after undoing some dihedral transform, still
  // follow the task's relation.
  int pairs = 0;
  ToolConfig config{true, true, true, false, TrainingStrategy::kAllTokens, 1e-4, 1};
  for (int t = 0; t < 25 && c.ok; ++t) {
    const auto relation = fewshot::kDihedral[rng() % 8];
    const auto task = fewshot::make_synthetic_task("alg" + std::to_string(t), relation, 3, 3, 4, rng());
    for (const auto& doc : fewshot::build_augmented_dataset(task, config, rng())) {
      for (const auto& block : toy::parse_grid_blocks(doc.text)) {
        if (!block.output) continue;
        bool consistent = false;
        for (auto tr : fewshot::kDihedral) {
          const auto inv = fewshot::inverse(tr);
          if (apply(apply(block.input, inv), relation) == apply(*block.output, inv)) consistent = true;
        }
        c.expect(consistent, "augmented pair breaks the relation in task " + task.id);
        ++pairs;
      }
    }
  }
  if (c.ok) c.detail = "1000 grids, " + std::to_string(pairs) + " augmented pairs";
  return c;
}

Check step_budget() {
  Check c;
  struct Case {
    long long size;
    int epochs;
    int batch;
    long long steps;
  };
  // steps = ceil(size / batch) * epochs
  const Case table[20] = {
      {1, 1, 1, 1},      {2, 1, 2, 1},       {3, 1, 2, 2},      {10, 3, 2, 15},    {11, 3, 2, 18},
      {12, 2, 5, 6},     {100, 1, 1, 100},   {375, 1, 1, 375},  {376, 1, 1, 376},  {750, 1, 2, 375},
      {751, 1, 2, 376},  {125, 3, 1, 375},  {125, 3, 2, 189},  {64, 8, 2, 256},   {7, 7, 7, 7},
      {8, 7, 7, 14},     {9, 5, 4, 15},       {200, 2, 3, 134},  {1, 400, 2, 400},  {49, 15, 2, 375},
  };
  int i = 0;
  for (const auto& row : table) {
    ToolConfig config;
    config.num_train_epochs = row.epochs;
    const long long got = fewshot::estimate_steps(row.size, config, row.batch);
    c.expect(got == row.steps, "case " + std::to_string(i) + ": got " + std::to_string(got));
    c.expect(fewshot::within_step_budget(got) == (row.steps <= 375), "budget decision wrong in case " + std::to_string(i));
    ++i;
  }
  c.expect(fewshot::within_step_budget(375) && !fewshot::within_step_budget(376), "375 boundary");
  // The harness refuses a config above the bound before training.
  const auto task = fewshot::make_synthetic_task("budget", fewshot::Transform::kRotate90, 3, 3, 3, 5);
  toy::ToyBackend backend;
  ToolConfig heavy{true, true, true, true, TrainingStrategy::kAllTokens, 1e-4, 50};
  try {
    (void)fewshot::ttt_adapt_and_eval(backend, task, heavy, 1);
    c.expect(false, "over-budget config was trained");
  } catch (const Error& e) {
    c.expect(e.code() == ErrorCode::kStepBudgetExceeded, std::string("wrong error: ") + e.what());
  }
  if (c.ok) c.detail = "20 cases, 375 accepted, 376 rejected";
  return c;
}

Check golden_prompts() {
  using knowledge::PromptVariant;
  Check c;
  const fs::path dir = fs::path(SELFEDIT_FIXTURES_DIR) / "prompts";
  const std::pair<PromptVariant, const char*> variants[] = {
      {PromptVariant::kImplications, "implications"},
      {PromptVariant::kImplicationsLong, "implications-long"},
      {PromptVariant::kImplicationsVeryLong, "implications-very-long"},
      {PromptVariant::kRewrite, "rewrite"},
      {PromptVariant::kSelfQa, "self-qa"},
  };
  int templates = 0;
  auto fill = [](std::string text, const std::string& slot, const std::string& value) {
    const auto pos = text.find(slot);
    if (pos != std::string::npos) text.replace(pos, slot.size(), value);
    return text;
  };
  const std::string passage = "The {river} floods each spring.\nFarmers plant afterwards.";
  for (const auto& [variant, name] : variants) {
    const auto golden = read_file(dir / (std::string(name) + ".txt"));
    c.expect(!golden.empty(), std::string("missing fixture ") + name);
    c.expect(std::string(knowledge::self_edit_template(variant)) == golden, std::string("template differs: ") + name);
    c.expect(knowledge::build_self_edit_prompt(passage, variant) == fill(golden, "{passage}", passage),
             std::string("filled prompt differs: ") + name);
    ++templates;
  }
  const auto qa = read_file(dir / "qa.txt");
  c.expect(std::string(knowledge::kQaTemplate) == qa, "QA template differs");
  c.expect(knowledge::build_qa_prompt("Who wrote it?") == fill(qa, "{question}", "Who wrote it?"), "QA prompt differs");
  const auto grading = read_file(dir / "grading.txt");
  c.expect(std::string(knowledge::kGradingTemplate) == grading, "grading template differs");
  c.expect(knowledge::build_grading_prompt("Q?", "gold {pred}", "pred") ==
               fill(fill(fill(grading, "{question}", "Q?"), "{pred}", "pred"), "{gold}", "gold {pred}"),
           "grading prompt differs");
  templates += 2;

  const auto cases = json::parse(read_file(fs::path(SELFEDIT_FIXTURES_DIR) / "splitting" / "cases.json"));
  for (const auto& k : cases) {
    const auto docs = knowledge::split_into_documents(
        k.at("generation").get<std::string>(),
        knowledge::prompt_variant_from_string(k.at("variant").get<std::string>()),
        knowledge::self_edit_source_from_string(k.at("source").get<std::string>()),
        k.at("regime") == "cpt" ? knowledge::SplitRegime::kCpt : knowledge::SplitRegime::kSinglePassage);
    c.expect(docs == k.at("documents").get<std::vector<std::string>>(),
             "split case " + k.at("name").get<std::string>());
  }
  if (c.ok) c.detail = std::to_string(templates) + " templates, " + std::to_string(cases.size()) + " split cases";
  return c;
}

Check tool_config_schema() {
  Check c;
  const json example = json::parse(R"({
  "data_generation": {
    "use_basic_augmentations": true,
    "use_size_augmentations": false,
    "use_chain_augmentations": true,
    "use_repeat_augmentations": false
  },
  "training": {
    "strategy": "train_using_all_tokens",
    "learning_rate": 0.0001,
    "num_train_epochs": 2
  }
})");
  try {
    const auto parsed = fewshot::parse_tool_config(example.dump(2), true);
    c.expect(parsed == ToolConfig{true, false, true, false, TrainingStrategy::kAllTokens, 1e-4, 2},
             "example parsed to the wrong values");
  } catch (const std::exception& e) {
    c.expect(false, std::string("example rejected: ") + e.what());
  }
  struct Mutation {
    std::string path;
    std::function<void(json&)> apply;
  };
  const std::vector<Mutation> mutations = {
      {"training.strategy", [](json& j) { j["training"]["strategy"] = "train_using_some_tokens"; }},
      {"data_generation.use_size_augmentations",
       [](json& j) { j["data_generation"].erase("use_size_augmentations"); }},
      {"training.learning_rate", [](json& j) { j["training"].erase("learning_rate"); }},
      {"data_generation.use_basic_augmentations", [](json& j) { j["data_generation"]["use_basic_augmentations"] = "true"; }},
      {"training.num_train_epochs", [](json& j) { j["training"]["num_train_epochs"] = 2.5; }},
      {"training.learning_rate", [](json& j) { j["training"]["learning_rate"] = "1e-4"; }},
      {"training.batch_size", [](json& j) { j["training"]["batch_size"] = 2; }},
      {"notes", [](json& j) { j["notes"] = "extra"; }},
      {"training", [](json& j) { j.erase("training"); }},
      {"data_generation", [](json& j) { j["data_generation"] = json::array(); }},
  };
  int rejected = 0;
  for (const auto& m : mutations) {
    json j = example;
    m.apply(j);
    try {
      (void)fewshot::parse_tool_config(j.dump());
      c.expect(false, "mutation accepted: " + m.path);
    } catch (const SchemaError& e) {
      c.expect(e.path() == m.path, "expected path " + m.path + ", got " + e.path());
      ++rejected;
    } catch (const std::exception& e) {
      c.expect(false, "mutation " + m.path + " raised a non-schema error: " + e.what());
    }
  }
  if (c.ok) c.detail = "example accepted, " + std::to_string(rejected) + "/10 mutations rejected with paths";
  return c;
}

remote::EndpointConfig stub_endpoint(const remote::StubServer& server) {
  remote::EndpointConfig e;
  e.base_url = server.base_url();
  e.model = "base-model";
  e.timeout = std::chrono::milliseconds(5000);
  e.retry.max_attempts = 3;
  e.retry.initial_backoff = std::chrono::milliseconds(1);
  e.retry.max_backoff = std::chrono::milliseconds(5);
  e.poll_interval = std::chrono::milliseconds(1);
  e.job_deadline = std::chrono::milliseconds(5000);
  return e;
}

Check protocol_contract() {
  Check c;
  // Retry then succeed: 503 and 429 are retried with identical bodies.
  {
    remote::StubScript script;
    script.chat_failures = {503, 429};
    script.canned_reply = "v3";
    remote::StubServer server(script);
    server.start();
    remote::RemoteBackend backend(std::make_shared<remote::Client>(stub_endpoint(server)));
    const auto g = backend.generate("FACT e1 a1 v3", SamplingParams{1.0, 16, 5});
    const auto reqs = server.requests();
    c.expect(g.text == "v3", "generation text");
    c.expect(reqs.size() == 3, "expected 3 chat attempts, saw " + std::to_string(reqs.size()));
    c.expect(reqs.size() == 3 && reqs[0].body == reqs[2].body, "retried bodies differ");
  }
  // Exhausted retries surface as backend-unavailable.
  {
    remote::StubScript script;
    script.chat_failures = {500, 502, 503};
    remote::StubServer server(script);
    server.start();
    remote::RemoteBackend backend(std::make_shared<remote::Client>(stub_endpoint(server)));
    try {
      (void)backend.generate("hello", SamplingParams{});
      c.expect(false, "exhausted retries did not throw");
    } catch (const Error& e) {
      c.expect(e.code() == ErrorCode::kBackendUnavailable, std::string("wrong error: ") + e.what());
    }
  }
  // Finetune: a retried submit creates one job, polling walks queued -> running -> succeeded.
  {
    remote::StubScript script;
    script.finetune_failures = {503};
    script.polls_queued = 2;
    script.polls_running = 2;
    remote::StubServer server(script);
    server.start();
    remote::RemoteBackend backend(std::make_shared<remote::Client>(stub_endpoint(server)));
    const auto adapter =
        backend.finetune({TrainingDocument::plain("e1 a1 v3")}, knowledge::default_single_passage_config(), 11);
    c.expect(server.jobs_created() == 1, "duplicate finetune jobs");
    std::set<std::string> keys;
    for (const auto& r : server.requests()) {
      if (r.method == "POST" && r.path == "/finetune") keys.insert(r.headers.count("Idempotency-Key") ? r.headers.at("Idempotency-Key") : "");
    }
    c.expect(keys.size() == 1 && !keys.begin()->empty(), "submits did not share one idempotency key");
    const auto history = server.job_history("job-1");
    const std::vector<std::string> want = {"queued", "queued", "running", "running", "succeeded"};
    c.expect(history == want, "unexpected poll history");
    c.expect(adapter.id == "base-model:ft-job-1", "fine-tuned model name: " + adapter.id);
  }
  // Failed job.
  {
    remote::StubScript script;
    script.job_fails = true;
    remote::StubServer server(script);
    server.start();
    remote::RemoteBackend backend(std::make_shared<remote::Client>(stub_endpoint(server)));
    try {
      (void)backend.finetune({TrainingDocument::plain("x")}, knowledge::default_single_passage_config(), 1);
      c.expect(false, "failed job did not throw");
    } catch (const Error& e) {
      c.expect(e.code() == ErrorCode::kJobFailed, std::string("wrong error: ") + e.what());
    }
  }
  // Grading is greedy and both QA and grading prompts arrive byte-exact.
  {
    remote::StubScript script;
    script.responder = [](const std::string& prompt, const json&) {
      return prompt.rfind("You are a grading assistant.", 0) == 0 ? std::string("Yes.") : std::string("Paris");
    };
    remote::StubServer server(script);
    server.start();
    auto client = std::make_shared<remote::Client>(stub_endpoint(server));
    auto grader = std::make_shared<remote::RemoteGrader>(client);
    remote::RemoteBackend backend(client, grader);
    const EvaluationSpec spec(QaSet{{QaItem{"What is the capital of France?", "Paris"}}});
    const double score = backend.evaluate(nullptr, spec, 3);
    c.expect(score == 1.0, "graded score");
    const auto prompts = server.prompts();
    c.expect(prompts.size() == 2, "expected an answer and a grading request");
    if (prompts.size() == 2) {
      c.expect(prompts[0] == knowledge::build_qa_prompt("What is the capital of France?"), "QA prompt not byte-exact");
      c.expect(prompts[1] == knowledge::build_grading_prompt("What is the capital of France?", "Paris", "Paris"),
               "grading prompt not byte-exact");
    }
    for (const auto& r : server.requests()) {
      const auto body = json::parse(r.body);
      c.expect(body.at("temperature").get<double>() == 0.0, "non-greedy evaluation request");
    }
  }
  if (c.ok) c.detail = "retry, exhaustion, idempotent submit, polling, job failure, greedy grading, byte-exact prompts";
  return c;
}

Check continual_harness() {
  Check c;
  const auto world = toy::make_world(7, 9, 3);
  const auto contexts = toy::make_contexts(world, 3);
  toy::ToyModelConfig model;
  model.seed = 7;
  const toy::ToyBackend backend(model);
  const toy::ToyDomain domain;
  continual::StreamOptions options;
  options.runs = 4;
  options.finetune = toy::toy_inner_config();
  options.sampling = SamplingParams{1.0, 1024, 0};
  const auto matrix = continual::run_stream(backend, domain, contexts, options, 21);
  const auto replay = oracle::replay_continual(model, contexts, 4, options.finetune, 1.0, 21);
  c.expect(matrix.tasks() == 3 && matrix.runs_completed == 4, "shape");
  bool any_sem = false;
  for (std::size_t t = 0; t <= 3; ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      c.expect(matrix.values[t][j].has_value() == replay.mean[t][j].has_value(), "NA pattern differs");
      if (!replay.mean[t][j]) continue;
      c.expect(*matrix.values[t][j] == *replay.mean[t][j], "value differs at " + std::to_string(t) + "," + std::to_string(j));
      c.expect(std::abs(*matrix.sems[t][j] - *replay.sem[t][j]) <= 1e-12, "sem differs");
      any_sem = any_sem || *matrix.sems[t][j] > 0.0;
    }
  }
  c.expect(!matrix.values[1][1] && !matrix.values[1][2] && matrix.values[0][2], "row layout");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> xs(1 + rng() % 20);
    for (auto& x : xs) x = unif(rng);
    c.expect(std::abs(continual::sem(xs) - oracle::two_pass_sem(xs)) <= 1e-12, "sem vs two-pass");
  }
  options.runs = 1;
  const auto single = continual::run_stream(backend, domain, contexts, options, 21);
  for (const auto& row : single.sems)
    for (const auto& s : row) c.expect(!s || *s == 0.0, "runs=1 produced a non-zero sem");
  if (c.ok) c.detail = std::string("T=3 runs=4 matches replay") + (any_sem ? ", non-trivial sems" : "");
  return c;
}

Check determinism() {
  Check c;
  const auto a = scratch_dir("det-a");
  const auto b = scratch_dir("det-b");
  const auto w = scratch_dir("det-workers");
  experiment::run_experiment(reference_config(a));
  experiment::run_experiment(reference_config(b));
  auto parallel = reference_config(w);
  parallel.loop.workers = 4;
  experiment::run_experiment(parallel);
  for (const char* f : {"records.jsonl", "events.jsonl", "round_summary.json"}) {
    const auto left = read_file(a / f);
    c.expect(!left.empty(), std::string("missing ") + f);
    c.expect(left == read_file(b / f), std::string(f) + " differs between repeats");
    c.expect(left == read_file(w / f), std::string(f) + " differs with 4 workers");
  }
  experiment::write_report(a);
  const auto first = read_file(a / "report" / "round_series.csv") + read_file(a / "report" / "method_table.csv");
  experiment::write_report(a);
  const auto second = read_file(a / "report" / "round_series.csv") + read_file(a / "report" / "method_table.csv");
  c.expect(first == second, "report is not replayable");
  if (c.ok) c.detail = "records, events and summaries bit-identical across repeats and worker counts";
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Check()>> criteria[] = {
      {"toy_end_to_end", toy_end_to_end},
      {"estimator_equivalence", estimator_equivalence},
      {"reward_filtering", reward_filtering},
      {"grid_transform_algebra", grid_algebra},
      {"step_budget", step_budget},
      {"golden_prompts_and_splitting", golden_prompts},
      {"tool_config_schema", tool_config_schema},
      {"protocol_contract", protocol_contract},
      {"continual_harness", continual_harness},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Check result;
    try {
      result = run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.ok) ++failures;
    std::cout << (result.ok ? "PASS " : "FAIL ") << name << ": " << result.detail << std::endl;
  }
  std::error_code ec;
  fs::remove_all(fs::temp_directory_path() / ("selfedit-acceptance-" + std::to_string(::getpid())), ec);
  return failures == 0 ? 0 : 1;
}

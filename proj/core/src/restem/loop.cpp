#include "selfedit/restem/loop.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::restem {

void LoopConfig::validate() const {
  if (contexts_per_round < 1 || samples_per_context < 1 || seeds_per_sample < 1 || rounds < 1 || workers < 1)
    throw Error(ErrorCode::kInvalidArgument, "loop counts must all be at least 1");
  if (sampling.temperature < 0.0 || sampling.max_tokens < 1)
    throw Error(ErrorCode::kInvalidArgument, "invalid sampling parameters");
  m_step.validate();
  inner.validate();
}

nlohmann::json to_json(const RoundMetrics& m) {
  return {{"mean_score_before", m.mean_score_before},
          {"mean_score_after", m.mean_score_after},
          {"winner_count", m.winner_count},
          {"flagged_count", m.flagged_count}};
}

nlohmann::json round_summary_json(const RoundResult& r) {
  return {{"round", r.round},
          {"records", r.records.size()},
          {"metrics", to_json(r.metrics)},
          {"policy_before", r.policy_before.hex()},
          {"policy_after", r.policy_after.hex()}};
}

std::vector<RewardRecord> assign_rewards(std::vector<RewardRecord> records, RewardMode mode) {
  if (mode == RewardMode::kThreshold) {
    for (auto& r : records) r.reward = r.score_after > r.score_before ? 1 : 0;
    return records;
  }
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.reward = 0;
    const double gain = r.score_after - r.score_before;
    if (!(gain > 0.0)) continue;
    auto it = best.find(r.context_id);
    if (it == best.end()) {
      best.emplace(r.context_id, i);
      continue;
    }
    const auto& cur = records[it->second];
    const double cur_gain = cur.score_after - cur.score_before;
    if (gain > cur_gain || (gain == cur_gain && r.sample_index < cur.sample_index)) it->second = i;
  }
  for (const auto& [ctx, i] : best) records[i].reward = 1;
  return records;
}

std::uint64_t generation_seed(std::uint64_t seed, int round, const std::string& context_id, int sample_index) {
  return derive_seed(seed, "generate", static_cast<std::uint64_t>(round), context_id,
                     static_cast<std::uint64_t>(sample_index));
}

std::uint64_t inner_seed(std::uint64_t seed, const std::string& context_id, int seed_index) {
  return derive_seed(seed, "inner", context_id, static_cast<std::uint64_t>(seed_index));
}

std::uint64_t before_seed(std::uint64_t seed, const std::string& context_id) {
  return derive_seed(seed, "before", context_id);
}

std::uint64_t m_step_seed(std::uint64_t seed, int round) {
  return derive_seed(seed, "mstep", static_cast<std::uint64_t>(round));
}

std::vector<std::size_t> sample_batch(std::size_t dataset_size, int contexts, std::uint64_t seed, int round) {
  if (contexts < 1 || static_cast<std::size_t>(contexts) > dataset_size)
    throw Error(ErrorCode::kInvalidArgument, "dataset has fewer instances than contexts per round");
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, "batch", static_cast<std::uint64_t>(round)));
  for (std::size_t i = 0; i < static_cast<std::size_t>(contexts); ++i) {
    std::size_t j = i + uniform_index(rng, dataset_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(contexts));
  return idx;
}

namespace {

// Runs job(i) for i in [0, n) on up to `workers` threads. The first
// exception stops further jobs from starting and is rethrown.
template <typename Job>
void parallel_for(std::size_t n, int workers, Job job) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (!stop.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

bool is_unavailable(const Error& e) { return e.code() == ErrorCode::kBackendUnavailable; }

}  // namespace

RoundResult e_step(const ModelBackend& backend, const SelfEditDomain& domain, const std::vector<TaskInstance>& batch,
                   const LoopConfig& config, int round, std::uint64_t seed) {
  config.validate();
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty context batch");
  const Fingerprint policy = backend.fingerprint();
  const std::size_t m = static_cast<std::size_t>(config.samples_per_context);

  std::vector<double> before(batch.size());
  std::vector<std::string> prompts(batch.size());
  parallel_for(batch.size(), config.workers, [&](std::size_t c) {
    prompts[c] = domain.build_prompt(batch[c]);
    before[c] = domain.score_unadapted(backend, batch[c], before_seed(seed, batch[c].id));
  });

  std::vector<RewardRecord> records(batch.size() * m);
  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    const std::size_t c = i / m;
    const int j = static_cast<int>(i % m);
    const TaskInstance& task = batch[c];
    RewardRecord& rec = records[i];
    rec.context_id = task.id;
    rec.sample_index = j;
    rec.self_edit_id = task.id + "/r" + std::to_string(round) + "/s" + std::to_string(j);
    rec.score_before = before[c];
    rec.policy_fingerprint = policy;
    try {
      SamplingParams sampling = config.sampling;
      sampling.seed = generation_seed(seed, round, task.id, j);
      Generation g = backend.generate(prompts[c], sampling);
      rec.raw = g.text;
      SelfEdit edit = domain.parse(task, rec.self_edit_id, std::move(g.text));
      for (int s = 0; s < config.seeds_per_sample; ++s) {
        rec.seed_scores.push_back(domain.score_adapted(backend, task, edit, config.inner, inner_seed(seed, task.id, s)));
      }
      rec.seeds_used = config.seeds_per_sample;
      rec.score_after =
          std::accumulate(rec.seed_scores.begin(), rec.seed_scores.end(), 0.0) / rec.seeds_used;
      if (g.truncated) {
        rec.flagged = true;
        rec.flag_reason = "truncated generation";
      }
    } catch (const Error& e) {
      if (is_unavailable(e)) throw;
      rec.flagged = true;
      rec.flag_reason = e.what();
      rec.score_after = rec.score_before;
      rec.seed_scores.clear();
      rec.seeds_used = 0;
    } catch (const std::exception& e) {
      rec.flagged = true;
      rec.flag_reason = e.what();
      rec.score_after = rec.score_before;
      rec.seed_scores.clear();
      rec.seeds_used = 0;
    }
  });

  RoundResult result;
  result.round = round;
  result.policy_before = policy;
  result.records = assign_rewards(std::move(records), config.reward_mode);
  double sum_before = 0.0;
  double sum_after = 0.0;
  for (const auto& r : result.records) {
    sum_before += r.score_before;
    sum_after += r.score_after;
    if (r.flagged) ++result.metrics.flagged_count;
    if (r.reward == 1) {
      const std::size_t c = static_cast<std::size_t>(&r - result.records.data()) / m;
      result.winners.push_back({r.context_id, prompts[c], r.raw, r.sample_index});
    }
  }
  const double n = static_cast<double>(result.records.size());
  result.metrics.mean_score_before = sum_before / n;
  result.metrics.mean_score_after = sum_after / n;
  result.metrics.winner_count = static_cast<int>(result.winners.size());
  result.policy_after = policy;
  return result;
}

void m_step(ModelBackend& backend, const RoundResult& round, const FinetuneConfig& config, std::uint64_t seed) {
  const Fingerprint current = backend.fingerprint();
  for (const auto& r : round.records) {
    if (r.policy_fingerprint != current)
      throw Error(ErrorCode::kStalePolicy, "record " + r.self_edit_id + " was scored under policy " +
                                               r.policy_fingerprint.hex() + ", current is " + current.hex());
  }
  if (round.winners.empty()) return;
  std::vector<TrainingDocument> examples;
  examples.reserve(round.winners.size());
  for (const auto& w : round.winners) examples.push_back(TrainingDocument::prompt_completion(w.prompt, w.raw));
  FinetuneConfig masked = config;
  masked.loss_mask = LossMask::kOutputTokensOnly;
  backend.reinforce(examples, masked, seed);
}

RunResult run(ModelBackend& backend, const SelfEditDomain& domain, const std::vector<TaskInstance>& dataset,
              const LoopConfig& config, std::uint64_t seed, RoundObserver* observer) {
  config.validate();
  validate_dataset(dataset);
  RunResult out;
  for (int round = 1; round <= config.rounds; ++round) {
    std::vector<TaskInstance> batch;
    for (std::size_t i : sample_batch(dataset.size(), config.contexts_per_round, seed, round))
      batch.push_back(dataset[i]);
    try {
      RoundResult result = e_step(backend, domain, batch, config, round, seed);
      m_step(backend, result, config.m_step, m_step_seed(seed, round));
      result.policy_after = backend.fingerprint();
      if (observer) {
        observer->after_update(round, backend);
        observer->on_round(result);
      }
      out.rounds.push_back(std::move(result));
    } catch (const Error& e) {
      if (!is_unavailable(e)) throw;
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
  }
  return out;
}

JsonlRunWriter::JsonlRunWriter(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
  std::ofstream(directory_ / "records.jsonl", std::ios::trunc);
  std::ofstream(directory_ / "events.jsonl", std::ios::trunc);
}

void JsonlRunWriter::on_round(const RoundResult& result) {
  {
    std::ofstream out(directory_ / "records.jsonl", std::ios::app);
    for (const auto& r : result.records) {
      nlohmann::json j = to_json(r);
      j["round"] = result.round;
      out << j.dump() << '\n';
    }
  }
  {
    // One event per inner-loop evaluation, in record then seed order.
    std::ofstream out(directory_ / "events.jsonl", std::ios::app);
    for (const auto& r : result.records) {
      for (std::size_t s = 0; s < r.seed_scores.size(); ++s) {
        nlohmann::json e{{"event", "inner_eval"},     {"round", result.round},
                         {"context_id", r.context_id}, {"self_edit_id", r.self_edit_id},
                         {"seed_index", s},            {"score", r.seed_scores[s]}};
        out << e.dump() << '\n';
      }
    }
  }
  summaries_.push_back(round_summary_json(result));
  std::ofstream(directory_ / "round_summary.json", std::ios::trunc) << summaries_.dump(2) << '\n';
}

}  // namespace selfedit::restem

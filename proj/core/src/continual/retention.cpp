#include "selfedit/continual/retention.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::continual {

double sem(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "sem of an empty sample");
  const std::size_t n = samples.size();
  if (n == 1) return 0.0;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double variance = ss / static_cast<double>(n - 1);
  return std::sqrt(variance / static_cast<double>(n));
}

std::uint64_t stream_generation_seed(std::uint64_t seed, int run, int step) {
  return derive_seed(seed, "continual-gen", static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(step));
}

std::uint64_t stream_finetune_seed(std::uint64_t seed, int run, int step) {
  return derive_seed(seed, "continual-ft", static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(step));
}

std::uint64_t stream_eval_seed(std::uint64_t seed, int run, int row, int task) {
  return derive_seed(seed, "continual-eval", static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(row),
                     static_cast<std::uint64_t>(task));
}

std::vector<std::vector<std::optional<double>>> run_replica(const ModelBackend& base, const SelfEditDomain& domain,
                                                            const std::vector<TaskInstance>& tasks,
                                                            const StreamOptions& options, std::uint64_t seed,
                                                            int run) {
  const int T = static_cast<int>(tasks.size());
  std::vector<std::vector<std::optional<double>>> rows(static_cast<std::size_t>(T + 1),
                                                       std::vector<std::optional<double>>(tasks.size()));
  auto model = base.clone();
  for (int j = 0; j < T; ++j) {
    rows[0][static_cast<std::size_t>(j)] =
        domain.score_unadapted(*model, tasks[static_cast<std::size_t>(j)], stream_eval_seed(seed, run, 0, j));
  }
  for (int t = 1; t <= T; ++t) {
    const TaskInstance& task = tasks[static_cast<std::size_t>(t - 1)];
    SamplingParams sampling = options.sampling;
    sampling.seed = stream_generation_seed(seed, run, t);
    Generation g = model->generate(domain.build_prompt(task), sampling);
    const SelfEdit edit =
        domain.parse(task, task.id + "/run" + std::to_string(run) + "/edit" + std::to_string(t), std::move(g.text));
    const AdapterHandle adapter =
        model->finetune(domain.training_documents(task, edit), options.finetune, stream_finetune_seed(seed, run, t));
    model->merge(adapter);
    for (int j = 0; j < t; ++j) {
      rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] =
          domain.score_unadapted(*model, tasks[static_cast<std::size_t>(j)], stream_eval_seed(seed, run, t, j));
    }
  }
  return rows;
}

RetentionMatrix aggregate(const std::vector<std::string>& task_ids, const ReplicaScores& replicas) {
  RetentionMatrix m;
  m.task_ids = task_ids;
  m.runs_completed = static_cast<int>(replicas.size());
  const std::size_t T = task_ids.size();
  m.values.assign(T + 1, std::vector<std::optional<double>>(T));
  m.sems = m.values;
  if (replicas.empty()) return m;
  for (const auto& run : replicas) {
    bool ok = run.size() == T + 1;
    for (const auto& row : run) ok = ok && row.size() == T;
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "replica scores do not match the task count");
  }
  for (std::size_t t = 0; t <= T; ++t) {
    for (std::size_t j = 0; j < T; ++j) {
      std::vector<double> samples;
      for (const auto& run : replicas) {
        if (run[t][j]) samples.push_back(*run[t][j]);
      }
      if (samples.empty()) continue;
      double mean = 0.0;
      for (double x : samples) mean += x;
      m.values[t][j] = mean / static_cast<double>(samples.size());
      m.sems[t][j] = sem(samples);
    }
  }
  return m;
}

RetentionMatrix run_stream(const ModelBackend& base, const SelfEditDomain& domain,
                           const std::vector<TaskInstance>& tasks, const StreamOptions& options, std::uint64_t seed,
                           ReplicaScores* replicas) {
  if (tasks.empty()) throw Error(ErrorCode::kInvalidArgument, "continual stream needs at least one task");
  if (options.runs < 1 || options.workers < 1) throw Error(ErrorCode::kInvalidArgument, "runs must be >= 1");
  validate_dataset(tasks);
  options.finetune.validate();

  const std::size_t runs = static_cast<std::size_t>(options.runs);
  std::vector<std::optional<std::vector<std::vector<std::optional<double>>>>> results(runs);
  std::vector<std::string> failures(runs);
  auto work = [&](std::size_t r) {
    try {
      results[r] = run_replica(base, domain, tasks, options, seed, static_cast<int>(r));
    } catch (const std::exception& e) {
      failures[r] = "run " + std::to_string(r) + " excluded: " + e.what();
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(options.workers), runs);
  if (threads <= 1) {
    for (std::size_t r = 0; r < runs; ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < runs; r = next++) work(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  ReplicaScores completed;
  std::vector<std::string> excluded;
  for (std::size_t r = 0; r < runs; ++r) {
    if (results[r]) completed.push_back(std::move(*results[r]));
    else excluded.push_back(failures[r]);
  }
  if (completed.empty()) {
    throw Error(ErrorCode::kEmptyResults,
                "every continual replica failed" + (excluded.empty() ? std::string() : "; first: " + excluded[0]));
  }
  std::vector<std::string> ids;
  for (const auto& t : tasks) ids.push_back(t.id);
  RetentionMatrix m = aggregate(ids, completed);
  m.runs_requested = options.runs;
  m.excluded = std::move(excluded);
  if (replicas) *replicas = std::move(completed);
  return m;
}

namespace {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

nlohmann::json grid_json(const std::vector<std::vector<std::optional<double>>>& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : grid) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::string to_csv(const std::vector<std::string>& task_ids,
                   const std::vector<std::vector<std::optional<double>>>& grid) {
  std::string out = "edits";
  for (const auto& id : task_ids) out += "," + id;
  out += '\n';
  for (std::size_t t = 0; t < grid.size(); ++t) {
    out += std::to_string(t);
    for (const auto& v : grid[t]) out += "," + (v ? format_number(*v) : std::string("NA"));
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const RetentionMatrix& m) {
  return {{"task_ids", m.task_ids},
          {"values", grid_json(m.values)},
          {"sems", grid_json(m.sems)},
          {"runs_requested", m.runs_requested},
          {"runs_completed", m.runs_completed},
          {"excluded", m.excluded}};
}

void write_retention(const std::filesystem::path& directory, const RetentionMatrix& m) {
  std::filesystem::create_directories(directory);
  std::ofstream(directory / "retention_values.csv") << to_csv(m.task_ids, m.values);
  std::ofstream(directory / "retention_sems.csv") << to_csv(m.task_ids, m.sems);
  std::ofstream(directory / "retention.json") << to_json(m).dump(2) << '\n';
}

}  // namespace selfedit::continual

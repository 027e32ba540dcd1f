#include "selfedit/fewshot/arc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::fewshot {

using nlohmann::json;

void ArcTask::validate() const {
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "ARC task " + id + " has no train pairs");
}

namespace {

GridPair pair_from_json(const json& value) {
  if (!value.is_object() || !value.contains("input") || !value.contains("output")) {
    throw Error(ErrorCode::kInvalidArgument, "ARC pair needs input and output");
  }
  return {grid_from_json(value["input"]), grid_from_json(value["output"])};
}

}  // namespace

ArcTask arc_task_from_json(const json& value, std::string id) {
  if (!value.is_object() || !value.contains("train") || !value.contains("test")) {
    throw Error(ErrorCode::kInvalidArgument, "ARC task " + id + " needs train and test arrays");
  }
  ArcTask task;
  task.id = std::move(id);
  for (const auto& pair : value["train"]) task.train.push_back(pair_from_json(pair));
  if (!value["test"].is_array() || value["test"].empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ARC task " + task.id + " has no test pair");
  }
  task.test = pair_from_json(value["test"].front());
  task.validate();
  return task;
}

ArcTask load_arc_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path.string());
  return arc_task_from_json(json::parse(in), path.stem().string());
}

std::vector<ArcTask> load_arc_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ArcTask> tasks;
  for (const auto& file : files) tasks.push_back(load_arc_task(file));
  return tasks;
}

json to_json(const ArcTask& task) {
  json train = json::array();
  for (const auto& pair : task.train) {
    train.push_back({{"input", to_json(pair.input)}, {"output", to_json(pair.output)}});
  }
  json test = json::array({{{"input", to_json(task.test.input)}, {"output", to_json(task.test.output)}}});
  return {{"train", train}, {"test", test}};
}

std::string serialize_grid(const Grid& grid) {
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.rows() * (grid.cols() + 1)));
  for (int r = 0; r < grid.rows(); ++r) {
    if (r > 0) out.push_back('\n');
    for (int c = 0; c < grid.cols(); ++c) out.push_back(static_cast<char>('0' + grid.at(r, c)));
  }
  return out;
}

Grid parse_grid(std::string_view text) {
  std::vector<std::vector<int>> rows;
  std::size_t pos = 0;
  // Skip leading blank lines.
  while (pos < text.size() && (text[pos] == '\n' || text[pos] == '\r' || text[pos] == ' ')) ++pos;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) break;
    auto& row = rows.emplace_back();
    for (char ch : line) {
      if (ch < '0' || ch > '9') {
        throw Error(ErrorCode::kDecodeFailure, "non-digit cell in decoded grid");
      }
      row.push_back(ch - '0');
    }
    pos = end + 1;
  }
  if (rows.empty()) throw Error(ErrorCode::kDecodeFailure, "no grid rows decoded");
  const auto width = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != width) throw Error(ErrorCode::kDecodeFailure, "decoded grid is not rectangular");
  }
  if (rows.size() > Grid::kMaxSide || width > Grid::kMaxSide) {
    throw Error(ErrorCode::kDecodeFailure, "decoded grid exceeds 30 cells per side");
  }
  return Grid(rows);
}

std::string serialize_pair(const GridPair& pair) {
  return "input:\n" + serialize_grid(pair.input) + "\noutput:\n" + serialize_grid(pair.output) + "\n";
}

std::string serialize_demonstrations(const std::vector<GridPair>& pairs) {
  std::string out;
  for (const auto& pair : pairs) out += serialize_pair(pair);
  return out;
}

std::string build_query_prompt(const ArcTask& task) {
  task.validate();
  return serialize_demonstrations(task.train) + "input:\n" + serialize_grid(task.test.input) + "\noutput:\n";
}

TrainingDocument build_demonstration_document(const std::vector<GridPair>& context, const GridPair& target) {
  std::string prompt = serialize_demonstrations(context) + "input:\n" + serialize_grid(target.input) + "\noutput:\n";
  return TrainingDocument::prompt_completion(prompt, serialize_grid(target.output) + "\n");
}

TaskInstance to_task_instance(const ArcTask& task) {
  task.validate();
  return {task.id, serialize_demonstrations(task.train), EvaluationSpec(HeldOutPair{task.test})};
}

ArcTask make_synthetic_task(std::string id, Transform relation, int train_pairs, int rows, int cols,
                            std::uint64_t seed) {
  if (train_pairs < 1) throw Error(ErrorCode::kInvalidArgument, "synthetic task needs train pairs");
  Rng rng(seed);
  auto random_grid = [&] {
    Grid g(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) g.set(r, c, static_cast<int>(uniform_index(rng, Grid::kNumColors)));
    }
    return g;
  };
  ArcTask task;
  task.id = std::move(id);
  for (int i = 0; i <= train_pairs; ++i) {
    Grid input = random_grid();
    GridPair pair{input, apply(input, relation)};
    if (i < train_pairs) {
      task.train.push_back(std::move(pair));
    } else {
      task.test = std::move(pair);
    }
  }
  return task;
}

}  // namespace selfedit::fewshot

#include "selfedit/experiment/report.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selfedit/core/error.hpp"

namespace selfedit::experiment {

using nlohmann::json;

const std::vector<ReferenceRow>& reference_knowledge_results() {
  static const std::vector<ReferenceRow> rows = {
      {"Base model", "single-passage", 32.7},
      {"Train on Passage", "single-passage", 33.5},
      {"Train on Passage + Synthetic", "single-passage", 39.7},
      {"Train on Passage + GPT-4.1 Synthetic", "single-passage", 46.3},
      {"Self-edit RL", "single-passage", 47.0},
      {"Base model", "cpt", 32.7},
      {"Train on Passage", "cpt", 32.2},
      {"Train on Passage + Synthetic", "cpt", 41.0},
      {"Train on Passage + GPT-4.1 Synthetic", "cpt", 39.4},
      {"Self-edit RL", "cpt", 43.8},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_fewshot_results() {
  static const std::vector<ReferenceRow> rows = {
      {"ICL", "fewshot", 0.0},
      {"TTT + Self-Edit (w/o prior RL)", "fewshot", 20.0},
      {"Self-edit RL", "fewshot", 72.5},
      {"Oracle TTT", "fewshot", 100.0},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_prompt_variant_results() {
  static const std::vector<ReferenceRow> rows = {
      {"No self-edit", "original", 33.5},
      {"implications", "original", 39.7},
      {"implications", "round-1", 43.7},
      {"implications", "round-2", 47.0},
      {"implications-long", "original", 49.3},
      {"implications-long", "round-1", 52.4},
      {"implications-long", "round-2", 51.8},
      {"implications-very-long", "original", 45.0},
      {"implications-very-long", "round-1", 51.5},
      {"implications-very-long", "round-2", 52.1},
      {"rewrite", "original", 49.4},
      {"rewrite", "round-1", 55.3},
      {"rewrite", "round-2", 55.6},
      {"self-qa", "original", 37.3},
      {"self-qa", "round-1", 42.8},
      {"self-qa", "round-2", 48.7},
  };
  return rows;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::optional<json> read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << text;
  return path;
}

}  // namespace

std::vector<std::filesystem::path> write_report(const std::filesystem::path& results_dir) {
  const auto summary = read_json(results_dir / "summary.json");
  const auto rounds = read_json(results_dir / "round_summary.json");
  const auto fewshot_eval = read_json(results_dir / "fewshot_eval.json");
  const bool has_retention = std::filesystem::exists(results_dir / "retention_values.csv");
  const bool has_rounds = rounds && rounds->is_array() && !rounds->empty();
  if (!has_rounds && !fewshot_eval && !has_retention) {
    throw Error(ErrorCode::kEmptyResults, "no results to report in " + results_dir.string());
  }

  const auto report = results_dir / "report";
  std::filesystem::create_directories(report);
  std::vector<std::filesystem::path> written;

  std::ostringstream series;
  series << "round,mean_score_before,mean_score_after,winner_count,flagged_count\n";
  if (has_rounds) {
    for (const auto& r : *rounds) {
      const auto& m = r.at("metrics");
      series << r.at("round").get<int>() << ',' << fixed(m.at("mean_score_before").get<double>()) << ','
             << fixed(m.at("mean_score_after").get<double>()) << ',' << m.at("winner_count").get<int>() << ','
             << m.at("flagged_count").get<int>() << '\n';
    }
  }
  written.push_back(write_file(report / "round_series.csv", series.str()));

  std::ostringstream methods;
  methods << "method,score\n";
  if (has_rounds) {
    methods << "Base model," << fixed(rounds->front().at("metrics").at("mean_score_before").get<double>()) << '\n';
    for (const auto& r : *rounds) {
      methods << "Self-edit round " << r.at("round").get<int>() << ','
              << fixed(r.at("metrics").at("mean_score_after").get<double>()) << '\n';
    }
  }
  if (fewshot_eval) {
    methods << "Base model (no adaptation)," << fixed(fewshot_eval->at("base").get<double>()) << '\n';
    methods << "Self-edit before RL," << fixed(fewshot_eval->at("before_rl").at("success_rate").get<double>())
            << '\n';
    methods << "Self-edit after RL," << fixed(fewshot_eval->at("after_rl").at("success_rate").get<double>())
            << '\n';
  }
  written.push_back(write_file(report / "method_table.csv", methods.str()));

  std::ostringstream refs;
  refs << "table,method,setting,accuracy_percent\n";
  const std::pair<const char*, const std::vector<ReferenceRow>*> tables[] = {
      {"knowledge", &reference_knowledge_results()},
      {"fewshot", &reference_fewshot_results()},
      {"prompt-variants", &reference_prompt_variant_results()},
  };
  for (const auto& [name, rows] : tables) {
    for (const auto& row : *rows) {
      refs << name << ',' << csv_field(row.method) << ',' << row.setting << ',' << fixed(row.accuracy_percent, 1)
           << '\n';
    }
  }
  written.push_back(write_file(report / "reference_results.csv", refs.str()));

  if (has_retention) {
    std::ifstream in(results_dir / "retention_values.csv", std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    written.push_back(write_file(report / "retention_heatmap.csv", buf.str()));
  }
  (void)summary;
  return written;
}

}  // namespace selfedit::experiment

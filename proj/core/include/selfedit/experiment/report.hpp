#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace selfedit::experiment {

/// Method name and accuracy in percent.
struct ReferenceRow {
  std::string method;
  std::string setting;
  double accuracy_percent = 0.0;
};

/// Published large-model results for the knowledge domain (single passage
/// and continued pretraining).
const std::vector<ReferenceRow>& reference_knowledge_results();
/// Published success rates for the few-shot domain.
const std::vector<ReferenceRow>& reference_fewshot_results();
/// Published accuracy per prompt variant and training round.
const std::vector<ReferenceRow>& reference_prompt_variant_results();

/// Reads a results directory and writes report/round_series.csv,
/// report/method_table.csv, report/reference_results.csv and, for continual
/// runs, report/retention_heatmap.csv. Output is a pure function of the
/// directory contents. Throws Error(kEmptyResults) when there is nothing to
/// report. Returns the files written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& results_dir);

}  // namespace selfedit::experiment

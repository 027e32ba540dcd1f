#include "selfedit/knowledge/knowledge.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "selfedit/core/error.hpp"
#include "selfedit/core/json.hpp"
#include "selfedit/core/random.hpp"

namespace selfedit::knowledge {

FinetuneConfig default_single_passage_config() {
  FinetuneConfig c;
  c.rank = 32;
  c.scale = 64.0;
  c.learning_rate = 1e-3;
  c.epochs = 10;
  c.batch_size = 1;
  return c;
}

FinetuneConfig default_cpt_config() {
  FinetuneConfig c = default_single_passage_config();
  c.epochs = 3;
  c.batch_size = 8;
  return c;
}

FinetuneConfig default_m_step_config() {
  FinetuneConfig c;
  c.rank = 64;
  c.scale = 128.0;
  c.learning_rate = 3e-4;
  c.epochs = 2;
  c.batch_size = 10;
  return c;
}

QaScore graded_qa_score(const ModelBackend& backend, const AdapterHandle* adapter,
                        const std::vector<QaItem>& questions, const GraderClient& grader, std::uint64_t seed,
                        int max_answer_tokens) {
  if (questions.empty()) throw Error(ErrorCode::kInvalidArgument, "no questions to score");
  QaScore out;
  out.total = static_cast<int>(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    SamplingParams sampling = SamplingParams::greedy(max_answer_tokens);
    sampling.seed = derive_seed(seed, "qa-answer", static_cast<std::uint64_t>(i));
    Generation answer = backend.generate(build_qa_prompt(questions[i].question), sampling, adapter);
    // An empty answer cannot convey the gold answer; skip the grader call.
    if (answer.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    GradeResult g = grade(questions[i].question, questions[i].gold, answer.text, grader);
    if (g.correct) ++out.correct;
    if (g.unparseable) ++out.unparseable;
  }
  out.score = static_cast<double>(out.correct) / static_cast<double>(out.total);
  return out;
}

namespace {

std::vector<TrainingDocument> documents_for(const TaskInstance& task, const SelfEdit& edit, bool include_passage) {
  std::vector<TrainingDocument> docs;
  if (include_passage) docs.push_back(TrainingDocument::plain(task.context));
  for (const auto& d : edit.documents()) docs.push_back(TrainingDocument::plain(d));
  return docs;
}

}  // namespace

double inner_update_and_eval(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                             const FinetuneConfig& config, const GraderClient& grader, std::uint64_t seed,
                             const InnerLoopOptions& options) {
  if (options.seeds < 1) throw Error(ErrorCode::kInvalidArgument, "seeds must be positive");
  if (task.evaluation.kind() != EvaluationKind::kQaSet)
    throw Error(ErrorCode::kInvalidArgument, "knowledge tasks are scored on question sets");
  auto docs = documents_for(task, edit, options.include_passage);
  double total = 0.0;
  for (int s = 0; s < options.seeds; ++s) {
    std::uint64_t run_seed = derive_seed(seed, "knowledge-inner", static_cast<std::uint64_t>(s));
    AdapterHandle adapter = backend.finetune(docs, config, run_seed);
    total += graded_qa_score(backend, &adapter, task.evaluation.qa(), grader, run_seed, options.max_answer_tokens)
                 .score;
  }
  return total / options.seeds;
}

CptResult run_cpt(const ModelBackend& backend, const std::vector<TaskInstance>& passages,
                  const FinetuneConfig& config, const GraderClient& grader, std::uint64_t seed,
                  const CptOptions& options) {
  if (passages.empty()) throw Error(ErrorCode::kInvalidArgument, "no passages");
  if (options.samples_per_passage < 0) throw Error(ErrorCode::kInvalidArgument, "negative sample count");
  std::vector<TrainingDocument> docs;
  std::vector<QaItem> questions;
  for (const auto& p : passages) {
    docs.push_back(TrainingDocument::plain(p.context));
    std::string prompt = build_self_edit_prompt(p.context, options.variant);
    for (int j = 0; j < options.samples_per_passage; ++j) {
      SamplingParams sampling = options.sampling;
      sampling.seed = derive_seed(seed, "cpt-generate", p.id, static_cast<std::uint64_t>(j));
      Generation g = backend.generate(prompt, sampling);
      for (auto& d : split_into_documents(g.text, options.variant, SelfEditSource::kSelf, SplitRegime::kCpt))
        docs.push_back(TrainingDocument::plain(std::move(d)));
    }
    const auto& qa = p.evaluation.qa();
    questions.insert(questions.end(), qa.begin(), qa.end());
  }
  AdapterHandle adapter = backend.finetune(docs, config, derive_seed(seed, "cpt-finetune"));
  CptResult result;
  result.documents = docs.size();
  result.qa = graded_qa_score(backend, &adapter, questions, grader, derive_seed(seed, "cpt-eval"),
                              options.max_answer_tokens);
  return result;
}

KnowledgeDomain::KnowledgeDomain(const GraderClient& grader, KnowledgeDomainOptions options)
    : grader_(grader), options_(options) {}

std::string KnowledgeDomain::build_prompt(const TaskInstance& task) const {
  return build_self_edit_prompt(task.context, options_.variant);
}

SelfEdit KnowledgeDomain::parse(const TaskInstance& task, std::string id, std::string raw) const {
  SelfEdit edit;
  edit.id = std::move(id);
  edit.context_id = task.id;
  edit.payload = split_into_documents(raw, options_.variant, options_.source, SplitRegime::kSinglePassage);
  edit.raw = std::move(raw);
  return edit;
}

double KnowledgeDomain::score_unadapted(const ModelBackend& backend, const TaskInstance& task,
                                        std::uint64_t seed) const {
  return graded_qa_score(backend, nullptr, task.evaluation.qa(), grader_, seed, options_.max_answer_tokens).score;
}

double KnowledgeDomain::score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                      const FinetuneConfig& inner, std::uint64_t seed) const {
  AdapterHandle adapter = backend.finetune(training_documents(task, edit), inner, seed);
  return graded_qa_score(backend, &adapter, task.evaluation.qa(), grader_, seed, options_.max_answer_tokens).score;
}

std::vector<TrainingDocument> KnowledgeDomain::training_documents(const TaskInstance& task,
                                                                  const SelfEdit& edit) const {
  return documents_for(task, edit, options_.include_passage);
}

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kDecodeFailure, path.string() + ": " + e.what());
  }
}

}  // namespace

std::vector<TaskInstance> load_knowledge_dataset(const std::filesystem::path& path) {
  nlohmann::json root = read_json(path);
  if (!root.is_array()) throw SchemaError("", "dataset must be a JSON array");
  std::vector<TaskInstance> tasks;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& entry = root[i];
    std::string where = "[" + std::to_string(i) + "]";
    check_object_keys(entry, {"id", "passage", "qa"}, where);
    if (!entry.contains("id") || !entry["id"].is_string()) throw SchemaError(where + ".id", "expected string");
    if (!entry.contains("passage") || !entry["passage"].is_string())
      throw SchemaError(where + ".passage", "expected string");
    if (!entry.contains("qa") || !entry["qa"].is_array()) throw SchemaError(where + ".qa", "expected array");
    QaSet qa;
    for (std::size_t k = 0; k < entry["qa"].size(); ++k) {
      const auto& item = entry["qa"][k];
      std::string ipath = where + ".qa[" + std::to_string(k) + "]";
      check_object_keys(item, {"question", "gold"}, ipath);
      if (!item.contains("question") || !item["question"].is_string())
        throw SchemaError(ipath + ".question", "expected string");
      if (!item.contains("gold") || !item["gold"].is_string()) throw SchemaError(ipath + ".gold", "expected string");
      qa.items.push_back({item["question"].get<std::string>(), item["gold"].get<std::string>()});
    }
    TaskInstance t{entry["id"].get<std::string>(), entry["passage"].get<std::string>(), EvaluationSpec(qa)};
    t.validate();
    tasks.push_back(std::move(t));
  }
  validate_dataset(tasks);
  return tasks;
}

void save_knowledge_dataset(const std::filesystem::path& path, const std::vector<TaskInstance>& tasks) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const auto& t : tasks) {
    nlohmann::ordered_json qa = nlohmann::ordered_json::array();
    for (const auto& item : t.evaluation.qa()) qa.push_back({{"question", item.question}, {"gold", item.gold}});
    root.push_back({{"id", t.id}, {"passage", t.context}, {"qa", qa}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << root.dump(2) << '\n';
}

std::vector<TaskInstance> load_squad_v11(const std::filesystem::path& path, std::size_t max_passages) {
  nlohmann::json root = read_json(path);
  if (!root.contains("data") || !root["data"].is_array()) throw SchemaError("data", "expected array");
  std::vector<TaskInstance> tasks;
  for (const auto& article : root["data"]) {
    std::string title = article.value("title", "article");
    const auto& paragraphs = article.at("paragraphs");
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      if (max_passages != 0 && tasks.size() >= max_passages) return tasks;
      const auto& para = paragraphs[p];
      QaSet qa;
      for (const auto& q : para.at("qas")) {
        const auto& answers = q.at("answers");
        if (answers.empty()) continue;
        qa.items.push_back({q.at("question").get<std::string>(), answers[0].at("text").get<std::string>()});
      }
      if (qa.items.empty()) continue;
      tasks.push_back({title + "-" + std::to_string(p), para.at("context").get<std::string>(), EvaluationSpec(qa)});
    }
  }
  validate_dataset(tasks);
  return tasks;
}

}  // namespace selfedit::knowledge

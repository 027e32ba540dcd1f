#include "selfedit/toy/backend.hpp"

#include <cctype>
#include <cstring>

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/arc.hpp"
#include "selfedit/fewshot/tool_config.hpp"
#include "selfedit/fewshot/transforms.hpp"
#include "selfedit/knowledge/prompts.hpp"
#include "selfedit/knowledge/split.hpp"

namespace selfedit::toy {

namespace {

constexpr std::string_view kToolMarker = "You are configuring a model training pipeline";

ToolConfig menu_entry(bool basic, bool size, bool chain, bool repeat, TrainingStrategy strategy, double lr,
                      int epochs) {
  return {basic, size, chain, repeat, strategy, lr, epochs};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\n' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Cuts the text after max_tokens whitespace-separated words.
Generation limit_tokens(std::string text, int max_tokens) {
  int words = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    if (words == max_tokens) {
      std::size_t cut = i;
      while (cut > 0 && std::isspace(static_cast<unsigned char>(text[cut - 1]))) --cut;
      text.resize(cut);
      return {std::move(text), true};
    }
    ++words;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  }
  return {std::move(text), false};
}

// Entity and attribute named in a question such as "e3 a1".
std::pair<int, int> question_keys(const ToyAlphabet& alphabet, std::string_view question) {
  std::vector<TrainingDocument> doc{TrainingDocument::plain(std::string(question) + " v0")};
  auto batch = parse_batch(alphabet, doc, LossMask::kAllTokens);
  const auto& item = batch.facts.back();
  return {item.entity, item.attribute};
}

int pick(const Eigen::VectorXd& logits, const SamplingParams& sampling) {
  if (sampling.temperature == 0.0) return argmax(logits);
  Rng rng(sampling.seed);
  return sample_categorical(tempered_softmax(logits, sampling.temperature), unit_uniform(rng));
}

void hash_matrix(std::uint64_t& h, const Eigen::MatrixXd& m) {
  const auto rows = static_cast<std::uint64_t>(m.rows());
  const auto cols = static_cast<std::uint64_t>(m.cols());
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(&rows), sizeof rows), h);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(&cols), sizeof cols), h);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size()), h);
}

}  // namespace

std::vector<ToolConfig> default_tool_menu() {
  using S = TrainingStrategy;
  return {
      menu_entry(false, false, false, false, S::kAllTokens, 1e-4, 2),
      menu_entry(true, false, false, false, S::kOutputTokens, 1e-4, 1),
      menu_entry(false, false, false, false, S::kOutputTokens, 50.0, 4),
      menu_entry(true, true, false, false, S::kAllTokens, 50.0, 3),
      menu_entry(true, true, true, true, S::kAllTokens, 40.0, 3),
      menu_entry(false, true, false, false, S::kOutputTokens, 30.0, 2),
  };
}

ToyBackend::ToyBackend(ToyModelConfig config)
    : config_(std::move(config)),
      params_(init_params(config_.alphabet, config_.templates, static_cast<int>(config_.tool_menu.size()),
                          config_.init_scale, config_.seed)) {}

ToyBackend::ToyBackend(ToyModelConfig config, ToyParams params) : config_(std::move(config)), params_(std::move(params)) {
  if (params_.templates.size() != config_.templates ||
      params_.tools.size() != static_cast<Eigen::Index>(config_.tool_menu.size()) ||
      params_.entity.rows() != config_.alphabet.entities || params_.attribute.rows() != config_.alphabet.attributes ||
      params_.bias.cols() != config_.alphabet.values || params_.grid.cols() != kGridTransforms)
    throw Error(ErrorCode::kInvalidArgument, "toy parameters do not match the model config");
}

ToyParams ToyBackend::effective(const AdapterHandle* adapter) const {
  if (adapter == nullptr) return params_;
  if (adapter->base_fingerprint != fingerprint())
    throw Error(ErrorCode::kStaleAdapter, "adapter " + adapter->id + " was trained against another base");
  const auto* state = dynamic_cast<const ToyAdapterState*>(adapter->state.get());
  if (state == nullptr) throw Error(ErrorCode::kInvalidArgument, "adapter does not belong to the toy backend");
  return apply_adapter(params_, state->adapter);
}

Generation ToyBackend::generate(std::string_view prompt, const SamplingParams& sampling,
                                const AdapterHandle* adapter) const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  if (sampling.temperature < 0.0 || sampling.max_tokens < 1)
    throw Error(ErrorCode::kInvalidArgument, "invalid sampling parameters");
  const ToyParams p = effective(adapter);

  if (prompt.find(kToolMarker) != std::string_view::npos && !config_.tool_menu.empty()) {
    const int k = pick(p.tools, sampling);
    return limit_tokens(fewshot::to_canonical_json(config_.tool_menu[static_cast<std::size_t>(k)]),
                        sampling.max_tokens);
  }

  const std::string_view tail = trim(prompt);
  if (ends_with(tail, "Answer:")) {
    const std::size_t q = prompt.rfind("Question: ");
    if (q != std::string_view::npos) {
      std::string_view question = prompt.substr(q + 10);
      question = question.substr(0, question.find('\n'));
      const auto [e, a] = question_keys(config_.alphabet, question);
      const int v = pick(value_logits(p, e, a), sampling);
      return limit_tokens(config_.alphabet.value(v), sampling.max_tokens);
    }
  }

  if (ends_with(prompt, "output:\n")) {
    const auto blocks = parse_grid_blocks(prompt);
    if (!blocks.empty() && !blocks.back().output) {
      const int k = pick(p.grid.row(0).transpose(), sampling);
      Grid out = fewshot::apply(blocks.back().input, fewshot::kDihedral[static_cast<std::size_t>(k)]);
      return limit_tokens(fewshot::serialize_grid(out), sampling.max_tokens);
    }
  }

  const auto facts = parse_fact_lines(config_.alphabet, prompt);
  if (facts.empty()) return {};
  const int k = pick(p.templates, sampling);
  return limit_tokens(render_facts(config_.alphabet, static_cast<ToyTemplate>(k), facts), sampling.max_tokens);
}

AdapterHandle ToyBackend::finetune(const std::vector<TrainingDocument>& documents, const FinetuneConfig& config,
                                   std::uint64_t seed) const {
  config.validate();
  validate_documents(documents, config);
  const ToyBatch batch = parse_batch(config_.alphabet, documents, config.loss_mask);
  auto state = std::make_shared<ToyAdapterState>();
  state->adapter = train_adapter(params_, batch, config, seed);

  std::uint64_t h = fnv1a("toy-adapter");
  for (const auto& f : state->adapter.factors) {
    if (!f) continue;
    hash_matrix(h, f->a);
    hash_matrix(h, f->b);
  }
  AdapterHandle handle;
  handle.id = "toy-" + Fingerprint{h}.hex();
  handle.base_fingerprint = fingerprint();
  handle.rank = config.rank;
  handle.scale = config.scale;
  handle.state = std::move(state);
  return handle;
}

double ToyBackend::evaluate(const AdapterHandle* adapter, const EvaluationSpec& evaluation,
                            std::uint64_t seed) const {
  (void)seed;  // decoding is greedy
  if (evaluation.empty()) throw Error(ErrorCode::kInvalidArgument, "empty evaluation");
  const ToyParams p = effective(adapter);
  if (evaluation.kind() == EvaluationKind::kHeldOutIoPair) {
    const auto& io = evaluation.io();
    const int k = argmax(p.grid.row(0).transpose());
    return fewshot::apply(io.input, fewshot::kDihedral[static_cast<std::size_t>(k)]) == io.output ? 1.0 : 0.0;
  }
  const auto& qa = evaluation.qa();
  int correct = 0;
  for (const auto& item : qa) {
    const auto [e, a] = question_keys(config_.alphabet, item.question);
    const int v = argmax(value_logits(p, e, a));
    if (config_.alphabet.value(v) == trim(item.gold)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(qa.size());
}

void ToyBackend::merge(const AdapterHandle& adapter) {
  params_ = effective(&adapter);
  ++params_.revision;
}

int ToyBackend::infer_template(std::string_view prompt, std::string_view completion) const {
  const auto facts = parse_fact_lines(config_.alphabet, prompt);
  if (facts.empty()) return -1;
  for (int k = 0; k < config_.templates; ++k) {
    if (render_facts(config_.alphabet, static_cast<ToyTemplate>(k), facts) == completion) return k;
  }
  return -1;
}

int ToyBackend::infer_tool(std::string_view completion) const {
  for (std::size_t k = 0; k < config_.tool_menu.size(); ++k) {
    if (fewshot::to_canonical_json(config_.tool_menu[k]) == trim(completion)) return static_cast<int>(k);
  }
  return -1;
}

void ToyBackend::reinforce(const std::vector<TrainingDocument>& examples, const FinetuneConfig& config,
                           std::uint64_t seed) {
  (void)seed;  // the update is deterministic
  config.validate();
  if (examples.empty()) throw Error(ErrorCode::kEmptyDocuments, "no policy-update examples");
  std::vector<int> templates;
  std::vector<int> tools;
  for (const auto& ex : examples) {
    if (ex.prompt().find(kToolMarker) != std::string_view::npos) {
      if (int k = infer_tool(ex.completion()); k >= 0) tools.push_back(k);
    } else if (int k = infer_template(ex.prompt(), ex.completion()); k >= 0) {
      templates.push_back(k);
    }
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!templates.empty())
      params_.templates =
          policy_m_step(params_.templates, templates, config.learning_rate / static_cast<double>(templates.size()));
    if (!tools.empty())
      params_.tools = policy_m_step(params_.tools, tools, config.learning_rate / static_cast<double>(tools.size()));
  }
  ++params_.revision;
}

Fingerprint ToyBackend::fingerprint() const {
  std::uint64_t h = fnv1a("toy-params");
  hash_matrix(h, params_.entity);
  hash_matrix(h, params_.attribute);
  hash_matrix(h, params_.bias);
  hash_matrix(h, params_.grid);
  hash_matrix(h, params_.templates);
  hash_matrix(h, params_.tools);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(&params_.revision), sizeof params_.revision), h);
  return {h};
}

std::unique_ptr<ModelBackend> ToyBackend::clone() const { return std::make_unique<ToyBackend>(*this); }

Eigen::VectorXd ToyBackend::template_probabilities() const { return softmax(params_.templates); }

AdapterHandle ToyBackend::zero_adapter(const FinetuneConfig& config) const {
  config.validate();
  const auto targets = target_tables(config.target_layers);
  auto state = std::make_shared<ToyAdapterState>();
  state->adapter.rank = config.rank;
  state->adapter.scale = config.scale;
  for (std::size_t t = 0; t < kNumTables; ++t) {
    if (!targets[t]) continue;
    const auto& table = params_.table(static_cast<ToyTable>(t));
    state->adapter.factors[t] = LowRankFactors{Eigen::MatrixXd::Zero(table.rows(), config.rank),
                                               Eigen::MatrixXd::Zero(config.rank, table.cols())};
  }
  return {"toy-zero", fingerprint(), config.rank, config.scale, std::move(state)};
}

std::string ToyDomain::build_prompt(const TaskInstance& task) const {
  return knowledge::build_self_edit_prompt(task.context, knowledge::PromptVariant::kImplications);
}

SelfEdit ToyDomain::parse(const TaskInstance& task, std::string id, std::string raw) const {
  SelfEdit edit;
  edit.id = std::move(id);
  edit.context_id = task.id;
  edit.payload = knowledge::split_into_documents(raw, knowledge::PromptVariant::kImplications,
                                                 knowledge::SelfEditSource::kSelf,
                                                 knowledge::SplitRegime::kSinglePassage);
  edit.raw = std::move(raw);
  return edit;
}

double ToyDomain::score_unadapted(const ModelBackend& backend, const TaskInstance& task, std::uint64_t seed) const {
  return backend.evaluate(nullptr, task.evaluation, seed);
}

double ToyDomain::score_adapted(const ModelBackend& backend, const TaskInstance& task, const SelfEdit& edit,
                                const FinetuneConfig& inner, std::uint64_t seed) const {
  const AdapterHandle adapter = backend.finetune(training_documents(task, edit), inner, seed);
  return backend.evaluate(&adapter, task.evaluation, seed);
}

FinetuneConfig toy_inner_config() {
  FinetuneConfig c;
  c.rank = 4;
  c.scale = 8.0;
  c.learning_rate = 0.5;
  c.epochs = 20;
  c.batch_size = 1;
  c.loss_mask = LossMask::kAllTokens;
  c.target_layers = {"entity", "attribute"};
  return c;
}

FinetuneConfig toy_m_step_config() {
  FinetuneConfig c;
  c.rank = 1;
  c.scale = 1.0;
  c.learning_rate = 1.0;
  c.epochs = 2;
  c.batch_size = 1;
  c.target_layers = {"all"};
  return c;
}

}  // namespace selfedit::toy

#include "selfedit/toy/model.hpp"

#include <cmath>
#include <limits>

#include "selfedit/core/error.hpp"
#include "selfedit/core/random.hpp"
#include "selfedit/fewshot/transforms.hpp"

namespace selfedit::toy {

Eigen::MatrixXd& ToyParams::table(ToyTable t) {
  switch (t) {
    case ToyTable::kEntity: return entity;
    case ToyTable::kAttribute: return attribute;
    case ToyTable::kBias: return bias;
    case ToyTable::kGrid: return grid;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown table");
}

const Eigen::MatrixXd& ToyParams::table(ToyTable t) const { return const_cast<ToyParams*>(this)->table(t); }

ToyParams init_params(const ToyAlphabet& alphabet, int templates, int tools, double init_scale, std::uint64_t seed) {
  if (templates < 1 || tools < 0) throw Error(ErrorCode::kInvalidArgument, "bad policy head sizes");
  ToyParams p;
  Rng rng(derive_seed(seed, "toy-init"));
  auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = init_scale * standard_normal(rng);
    return m;
  };
  p.entity = draw(alphabet.entities, alphabet.values);
  p.attribute = draw(alphabet.attributes, alphabet.values);
  p.bias = draw(1, alphabet.values);
  p.grid = Eigen::MatrixXd::Zero(1, kGridTransforms);
  p.grid(0, 0) = 1.0;
  p.templates = Eigen::VectorXd::Zero(templates);
  p.tools = Eigen::VectorXd::Zero(tools);
  return p;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class TokenKind { kEntity, kAttribute, kValue, kKeyword };

struct Token {
  TokenKind kind;
  int index;
  std::size_t offset;
};

int parse_index(std::string_view token, int limit) {
  if (token.size() < 2) return -1;
  int v = 0;
  for (char c : token.substr(1)) {
    if (c < '0' || c > '9') return -1;
    v = v * 10 + (c - '0');
    if (v >= limit) return -1;
  }
  if (token.size() > 2 && token[1] == '0') return -1;
  return v;
}

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

std::vector<Token> tokenize(const ToyAlphabet& alphabet, std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    Token t{TokenKind::kKeyword, -1, i};
    if (word == "FACT") {
      t.kind = TokenKind::kKeyword;
    } else if (word[0] == 'e' && (t.index = parse_index(word, alphabet.entities)) >= 0) {
      t.kind = TokenKind::kEntity;
    } else if (word[0] == 'a' && (t.index = parse_index(word, alphabet.attributes)) >= 0) {
      t.kind = TokenKind::kAttribute;
    } else if (word[0] == 'v' && (t.index = parse_index(word, alphabet.values)) >= 0) {
      t.kind = TokenKind::kValue;
    } else {
      throw Error(ErrorCode::kUnknownToken, "unknown token '" + std::string(word) + "'");
    }
    tokens.push_back(t);
    i = j;
  }
  return tokens;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::uint8_t consistent_transforms(const Grid& input, const Grid& output) {
  std::uint8_t mask = 0;
  for (std::size_t k = 0; k < fewshot::kDihedral.size(); ++k) {
    if (fewshot::apply(input, fewshot::kDihedral[k]) == output) mask |= static_cast<std::uint8_t>(1u << k);
  }
  return mask;
}

}  // namespace

bool is_grid_document(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    if (!line.empty()) return line == "input:";
    pos = end + 1;
  }
  return false;
}

std::vector<GridBlock> parse_grid_blocks(std::string_view text) {
  std::vector<GridBlock> blocks;
  enum class Mode { kNone, kInput, kOutput } mode = Mode::kNone;
  std::vector<std::vector<int>> rows;
  std::size_t pending_offset = 0;

  auto flush = [&](bool at_end) {
    if (mode == Mode::kNone) return;
    if (rows.empty() && at_end && mode == Mode::kOutput) return;  // open query block
    if (rows.empty()) throw Error(ErrorCode::kUnknownToken, "grid block without rows");
    Grid g(rows);
    if (mode == Mode::kInput) {
      blocks.push_back({std::move(g), std::nullopt, 0});
    } else {
      blocks.back().output = std::move(g);
      blocks.back().output_offset = pending_offset;
    }
    rows.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t next = end + 1;
    if (line == "input:") {
      flush(false);
      mode = Mode::kInput;
    } else if (line == "output:") {
      if (mode != Mode::kInput) throw Error(ErrorCode::kUnknownToken, "output block without input");
      flush(false);
      mode = Mode::kOutput;
      pending_offset = std::min(next, text.size());
    } else if (!trim(line).empty()) {
      if (mode == Mode::kNone) throw Error(ErrorCode::kUnknownToken, "grid rows outside a block");
      std::vector<int> row;
      for (char c : line) {
        if (c < '0' || c > '9') throw Error(ErrorCode::kUnknownToken, "non-digit in grid row");
        row.push_back(c - '0');
      }
      rows.push_back(std::move(row));
    }
    pos = next;
  }
  flush(true);
  return blocks;
}

ToyBatch parse_batch(const ToyAlphabet& alphabet, const std::vector<TrainingDocument>& documents, LossMask mask) {
  ToyBatch batch;
  for (const auto& doc : documents) {
    const std::size_t begin =
        mask == LossMask::kOutputTokensOnly ? doc.output_begin.value_or(doc.text.size()) : 0;
    if (is_grid_document(doc.text)) {
      for (const auto& block : parse_grid_blocks(doc.text)) {
        if (!block.output || block.output_offset < begin) continue;
        const std::uint8_t c = consistent_transforms(block.input, *block.output);
        if (c != 0) batch.grids.push_back({c});
      }
      continue;
    }
    const auto tokens = tokenize(alphabet, doc.text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind != TokenKind::kValue || tokens[i].offset < begin) continue;
      FactItem item;
      item.value = tokens[i].index;
      if (i >= 1 && tokens[i - 1].kind == TokenKind::kEntity) {
        item.entity = tokens[i - 1].index;
      } else if (i >= 1 && tokens[i - 1].kind == TokenKind::kAttribute) {
        item.attribute = tokens[i - 1].index;
        if (i >= 2 && tokens[i - 2].kind == TokenKind::kEntity) item.entity = tokens[i - 2].index;
      }
      batch.facts.push_back(item);
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Loss

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - m).exp();
  return p / p.sum();
}

Eigen::VectorXd tempered_softmax(const Eigen::VectorXd& logits, double temperature) {
  if (temperature < 0.0) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (temperature == 0.0) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
    p(argmax(logits)) = 1.0;
    return p;
  }
  return softmax(logits / temperature);
}

int argmax(const Eigen::VectorXd& logits) {
  int best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = static_cast<int>(i);
  }
  return best;
}

int sample_categorical(const Eigen::VectorXd& probabilities, double u) {
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    cumulative += probabilities(k);
    if (cumulative > u) return static_cast<int>(k);
  }
  // Rounding left the total just under u; fall back to the last non-zero entry.
  for (Eigen::Index k = probabilities.size() - 1; k >= 0; --k) {
    if (probabilities(k) > 0.0) return static_cast<int>(k);
  }
  return 0;
}

Eigen::VectorXd value_logits(const ToyParams& params, int entity, int attribute) {
  Eigen::VectorXd logits = params.bias.row(0).transpose();
  if (entity >= 0) logits += params.entity.row(entity).transpose();
  if (attribute >= 0) logits += params.attribute.row(attribute).transpose();
  return logits;
}

ToyLoss toy_loss_and_grad(const ToyParams& params, const ToyBatch& batch) {
  ToyLoss out;
  auto& g = out.gradients.tables;
  for (int t = 0; t < kNumTables; ++t) {
    const auto& table = params.table(static_cast<ToyTable>(t));
    g[static_cast<std::size_t>(t)] = Eigen::MatrixXd::Zero(table.rows(), table.cols());
  }
  out.items = batch.size();
  if (out.items == 0) return out;

  auto& dU = g[0];
  auto& dQ = g[1];
  auto& db = g[2];
  auto& dg = g[3];
  double total = 0.0;
  for (const auto& item : batch.facts) {
    Eigen::VectorXd logits = value_logits(params, item.entity, item.attribute);
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    const double z = p.sum();
    p /= z;
    total += -(logits(item.value) - m - std::log(z));
    p(item.value) -= 1.0;
    db.row(0) += p.transpose();
    if (item.entity >= 0) dU.row(item.entity) += p.transpose();
    if (item.attribute >= 0) dQ.row(item.attribute) += p.transpose();
  }
  if (!batch.grids.empty()) {
    const Eigen::VectorXd p = softmax(params.grid.row(0).transpose());
    for (const auto& item : batch.grids) {
      double mass = 0.0;
      for (int k = 0; k < kGridTransforms; ++k) {
        if (item.consistent & (1u << k)) mass += p(k);
      }
      total += -std::log(mass);
      for (int k = 0; k < kGridTransforms; ++k) {
        double grad = p(k);
        if (item.consistent & (1u << k)) grad -= p(k) / mass;
        dg(0, k) += grad;
      }
    }
  }
  const double n = static_cast<double>(out.items);
  out.loss = total / n;
  for (auto& m : g) m /= n;
  return out;
}

ToyLoss toy_loss_and_grad(const ToyParams& params, const std::vector<TrainingDocument>& documents, LossMask mask) {
  if (documents.empty()) throw Error(ErrorCode::kEmptyDocuments, "no training documents");
  ToyAlphabet alphabet{static_cast<int>(params.entity.rows()), static_cast<int>(params.attribute.rows()),
                       static_cast<int>(params.bias.cols())};
  return toy_loss_and_grad(params, parse_batch(alphabet, documents, mask));
}

// ---------------------------------------------------------------------------
// Policy head

Eigen::VectorXd policy_m_step(const Eigen::VectorXd& logits, const std::vector<int>& winners, double step) {
  if (winners.empty()) throw Error(ErrorCode::kInvalidArgument, "policy update needs at least one winner");
  PolicyLoss l = policy_sft_loss_and_grad(logits, winners, 1.0);
  return logits - step * l.gradient;
}

PolicyLoss policy_sft_loss_and_grad(const Eigen::VectorXd& logits, const std::vector<int>& winners,
                                    double normalizer) {
  if (!(normalizer > 0.0)) throw Error(ErrorCode::kInvalidArgument, "normalizer must be positive");
  const Eigen::VectorXd p = softmax(logits);
  const double m = logits.maxCoeff();
  const double log_z = m + std::log((logits.array() - m).exp().sum());
  PolicyLoss out;
  out.gradient = Eigen::VectorXd::Zero(logits.size());
  for (int w : winners) {
    if (w < 0 || w >= logits.size()) throw Error(ErrorCode::kInvalidArgument, "winner index out of range");
    out.loss -= logits(w) - log_z;
    out.gradient += p;
    out.gradient(w) -= 1.0;
  }
  out.loss /= normalizer;
  out.gradient /= normalizer;
  return out;
}

double expected_reward(const Eigen::VectorXd& probabilities, const Eigen::VectorXd& rewards) {
  if (probabilities.size() != rewards.size()) throw Error(ErrorCode::kInvalidArgument, "size mismatch");
  return probabilities.dot(rewards);
}

// ---------------------------------------------------------------------------
// Adapters

std::array<bool, kNumTables> target_tables(const std::vector<std::string>& target_layers) {
  std::array<bool, kNumTables> on{};
  auto set = [&](ToyTable t) { on[static_cast<std::size_t>(t)] = true; };
  for (const auto& name : target_layers) {
    if (name == "entity") set(ToyTable::kEntity);
    else if (name == "attribute") set(ToyTable::kAttribute);
    else if (name == "bias") set(ToyTable::kBias);
    else if (name == "grid") set(ToyTable::kGrid);
    else if (name == "all") on.fill(true);
    else if (name == "q_proj" || name == "k_proj" || name == "v_proj" || name == "o_proj") {
      set(ToyTable::kEntity);
      set(ToyTable::kAttribute);
    } else if (name == "gate_proj" || name == "up_proj" || name == "down_proj") {
      set(ToyTable::kBias);
      set(ToyTable::kGrid);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown target layer for the toy model: " + name);
    }
  }
  return on;
}

ToyParams apply_adapter(const ToyParams& base, const ToyAdapter& adapter) {
  ToyParams out = base;
  for (int t = 0; t < kNumTables; ++t) {
    const auto& f = adapter.factors[static_cast<std::size_t>(t)];
    if (f) out.table(static_cast<ToyTable>(t)) += adapter.scaling() * (f->a * f->b);
  }
  return out;
}

AdapterLoss adapter_loss_and_grad(const ToyParams& base, const ToyAdapter& adapter, const ToyBatch& batch) {
  const ToyLoss l = toy_loss_and_grad(apply_adapter(base, adapter), batch);
  AdapterLoss out;
  out.loss = l.loss;
  const double s = adapter.scaling();
  for (std::size_t t = 0; t < kNumTables; ++t) {
    const auto& f = adapter.factors[t];
    if (!f) continue;
    const auto& G = l.gradients.tables[t];
    out.gradients[t] = LowRankFactors{s * G * f->b.transpose(), s * f->a.transpose() * G};
  }
  return out;
}

ToyAdapter train_adapter(const ToyParams& base, const ToyBatch& batch, const FinetuneConfig& config,
                         std::uint64_t seed) {
  config.validate();
  const auto targets = target_tables(config.target_layers);
  ToyAdapter adapter;
  adapter.rank = config.rank;
  adapter.scale = config.scale;
  Rng rng(derive_seed(seed, "toy-adapter-init"));
  const double sd = 1.0 / std::sqrt(static_cast<double>(config.rank));
  for (std::size_t t = 0; t < kNumTables; ++t) {
    if (!targets[t]) continue;
    const auto& table = base.table(static_cast<ToyTable>(t));
    LowRankFactors f{Eigen::MatrixXd(table.rows(), config.rank), Eigen::MatrixXd::Zero(config.rank, table.cols())};
    for (Eigen::Index r = 0; r < f.a.rows(); ++r)
      for (Eigen::Index c = 0; c < f.a.cols(); ++c) f.a(r, c) = sd * standard_normal(rng);
    adapter.factors[t] = std::move(f);
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const AdapterLoss l = adapter_loss_and_grad(base, adapter, batch);
    for (std::size_t t = 0; t < kNumTables; ++t) {
      if (!adapter.factors[t]) continue;
      adapter.factors[t]->a -= config.learning_rate * l.gradients[t]->a;
      adapter.factors[t]->b -= config.learning_rate * l.gradients[t]->b;
    }
  }
  return adapter;
}

}  // namespace selfedit::toy

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "selfedit/core/grid.hpp"
#include "selfedit/core/types.hpp"
#include "selfedit/toy/world.hpp"

namespace selfedit::toy {

/// Parameter tables that adapters can target.
enum class ToyTable : int { kEntity = 0, kAttribute = 1, kBias = 2, kGrid = 3 };
inline constexpr int kNumTables = 4;
inline constexpr int kGridTransforms = 8;

/// Fact scorer: logit(v | e, a) = U[e, v] + Q[a, v] + b[v]. The grid head
/// scores the eight dihedral transforms; z and tool are the policy heads over
/// rendering templates and tool-menu entries.
struct ToyParams {
  Eigen::MatrixXd entity;     // |entities| x |values|
  Eigen::MatrixXd attribute;  // |attributes| x |values|
  Eigen::MatrixXd bias;       // 1 x |values|
  Eigen::MatrixXd grid;       // 1 x 8
  Eigen::VectorXd templates;  // K
  Eigen::VectorXd tools;      // tool menu size
  std::uint64_t revision = 0;

  [[nodiscard]] Eigen::MatrixXd& table(ToyTable t);
  [[nodiscard]] const Eigen::MatrixXd& table(ToyTable t) const;
};

/// Fact tables drawn from init_scale * N(0, 1); grid head starts at 1 on the
/// identity transform; policy heads start uniform.
ToyParams init_params(const ToyAlphabet& alphabet, int templates, int tools, double init_scale, std::uint64_t seed);

struct ToyGradients {
  std::array<Eigen::MatrixXd, kNumTables> tables;
};

struct ToyLoss {
  double loss = 0.0;
  std::size_t items = 0;
  ToyGradients gradients;
};

/// Parsed training signal of a document set.
struct FactItem {
  int entity = -1;     // -1 when the preceding tokens carry no entity feature
  int attribute = -1;  // -1 when absent
  int value = 0;
};

struct GridItem {
  std::uint8_t consistent = 0;  // bit k set when transform k maps input to output
};

struct ToyBatch {
  std::vector<FactItem> facts;
  std::vector<GridItem> grids;

  [[nodiscard]] std::size_t size() const noexcept { return facts.size() + grids.size(); }
};

/// One "input:" block of a grid document with its "output:" block, if any.
/// output_offset is the byte offset where the output rows begin.
struct GridBlock {
  Grid input;
  std::optional<Grid> output;
  std::size_t output_offset = 0;
};

/// Reads alternating "input:"/"output:" blocks of digit rows. Blank lines are
/// skipped; any other line throws Error(kUnknownToken). A trailing empty
/// "output:" block is left open (output unset).
std::vector<GridBlock> parse_grid_blocks(std::string_view text);

/// True when the first non-blank line is "input:".
bool is_grid_document(std::string_view text);

/// Tokenises documents by whitespace over the world's alphabets. Value tokens
/// are the predicted positions; a value directly after an attribute sees that
/// attribute (plus the entity before it), a value directly after an entity
/// sees only the entity. Documents holding "input:"/"output:" grid blocks
/// yield one item per pair. Under the output-tokens-only mask only items in
/// the marked span count. Throws Error(kUnknownToken).
ToyBatch parse_batch(const ToyAlphabet& alphabet, const std::vector<TrainingDocument>& documents, LossMask mask);

/// Mean cross-entropy over all items with exact gradients per table. Throws
/// Error(kEmptyDocuments) for an empty document list.
ToyLoss toy_loss_and_grad(const ToyParams& params, const std::vector<TrainingDocument>& documents, LossMask mask);
ToyLoss toy_loss_and_grad(const ToyParams& params, const ToyBatch& batch);

Eigen::VectorXd value_logits(const ToyParams& params, int entity, int attribute);
/// Argmax with ties broken toward the lowest index.
int argmax(const Eigen::VectorXd& logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
/// softmax(logits / temperature); temperature 0 puts all mass on the argmax.
Eigen::VectorXd tempered_softmax(const Eigen::VectorXd& logits, double temperature);
/// Index of the first k with cumulative mass above u in [0, 1).
int sample_categorical(const Eigen::VectorXd& probabilities, double u);

/// One gradient step on -sum_{k in winners} log softmax(z)_k (winners may
/// repeat). Throws Error(kInvalidArgument) for an empty winner list.
Eigen::VectorXd policy_m_step(const Eigen::VectorXd& logits, const std::vector<int>& winners, double step);

struct PolicyLoss {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Supervised loss -(1 / normalizer) * sum_{k in winners} log softmax(z)_k.
PolicyLoss policy_sft_loss_and_grad(const Eigen::VectorXd& logits, const std::vector<int>& winners,
                                    double normalizer);

/// sum_k pi_k r_k.
double expected_reward(const Eigen::VectorXd& probabilities, const Eigen::VectorXd& rewards);

/// Low-rank factors of one table: delta = (scale / rank) * A * B.
struct LowRankFactors {
  Eigen::MatrixXd a;  // rows x rank
  Eigen::MatrixXd b;  // rank x cols
};

struct ToyAdapter {
  int rank = 0;
  double scale = 0.0;
  std::array<std::optional<LowRankFactors>, kNumTables> factors;

  [[nodiscard]] double scaling() const noexcept { return scale / rank; }
};

/// Maps finetune target-layer names to tables. Accepts the table names
/// ("entity", "attribute", "bias", "grid"), "all", and projection aliases:
/// q/k/v/o_proj drive the fact tables, gate/up/down_proj the bias and grid
/// heads. Throws Error(kInvalidArgument) for other names.
std::array<bool, kNumTables> target_tables(const std::vector<std::string>& target_layers);

/// base + adapter deltas; the base is not modified.
ToyParams apply_adapter(const ToyParams& base, const ToyAdapter& adapter);

/// Loss and factor gradients for the adapted model.
struct AdapterLoss {
  double loss = 0.0;
  std::array<std::optional<LowRankFactors>, kNumTables> gradients;
};
AdapterLoss adapter_loss_and_grad(const ToyParams& base, const ToyAdapter& adapter, const ToyBatch& batch);

/// Full-batch gradient descent on the factors for config.epochs passes.
/// A starts at N(0, 1 / rank), B at zero. batch_size is not used.
ToyAdapter train_adapter(const ToyParams& base, const ToyBatch& batch, const FinetuneConfig& config,
                         std::uint64_t seed);

}  // namespace selfedit::toy

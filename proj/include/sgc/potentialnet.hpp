#pragma once

// The staged spatial graph convolution model, its single-stage ablation,
// the ligand-only control and the plain gated graph network baseline.

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sgc/chemio.hpp"
#include "sgc/graphbuild.hpp"
#include "sgc/layers.hpp"

namespace sgc::inline SGC_PRECISION_TAG {

enum class ModelMode { staged, single_update, ligand_only, ggnn_plain };
enum class TaskKind { regression, multitask_classification };

std::string to_string(ModelMode mode);
std::string to_string(TaskKind kind);
ModelMode parse_model_mode(const std::string& s);
TaskKind parse_task_kind(const std::string& s);

struct ModelConfig {
  ModelMode mode = ModelMode::staged;
  TaskKind task_kind = TaskKind::regression;
  std::size_t task_count = 1;
  graph::EdgeSchema schema;
  std::vector<std::string> element_vocab = chem::ElementVocab::default_vocab().symbols();

  std::size_t f_bond = 64;
  std::size_t f_spatial = 64;
  std::size_t f_gather = 64;
  std::size_t bond_k = 1;
  std::size_t spatial_k = 2;  // 0 skips the spatial stage in staged mode
  std::size_t k = 2;          // layers of ggnn_plain
  std::vector<std::size_t> fc_widths{128, 1};
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double dropout = 0.0;

  /// Unset: mlp for the PotentialNet modes, linear for ggnn_plain.
  std::optional<nn::MessageKind> message_kind;
  /// Stage-2 bond slices reuse the stage-1 message networks.
  bool share_bond_messages = false;
  std::uint64_t seed = 0;

  std::size_t input_width() const;
  nn::MessageKind effective_message_kind() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const graph::EdgeSchema& schema);
graph::EdgeSchema schema_from_json(const nlohmann::json& j);

/// A featurized sample: graph plus optional per-task labels.
struct Sample {
  std::string id;
  graph::GraphTensors graph;
  std::vector<std::optional<double>> labels;
};

class PotentialNetModel {
 public:
  /// Parameters are initialized from `config.seed`.
  explicit PotentialNetModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// 1 x T prediction (logits for classification). `rng` drives dropout.
  ad::Var forward(const graph::GraphTensors& g, bool train, Rng& rng) const;
  ad::Var forward(const graph::GraphTensors& g) const;

  /// Throws ShapeError when `g` was not built with this model's schema/vocab.
  void check_compatible(const graph::GraphTensors& g) const;

 private:
  struct Stage {
    nn::EdgeMessageNet messages;
    nn::GRUCell gru;
    nn::GatherGate gate;
    std::size_t layers = 0;
  };

  ad::Var run_stage(const Stage& stage, const nn::EdgeSlices& slices, ad::Var h) const;

  ModelConfig config_;
  ParameterSet params_;
  std::optional<Stage> bond_stage_;
  std::optional<Stage> spatial_stage_;
  nn::FCStack head_;
};

/// Per-entry loss weights for a batch of label vectors. Regression: mean
/// squared error over all present entries. Classification: mean over tasks
/// with at least one present label of the per-task mean BCE. Absent entries
/// get weight 0. Throws NumericError when every label is absent.
std::vector<Tensor> loss_weights(const std::vector<const std::vector<std::optional<double>>*>& labels,
                                 std::size_t task_count, TaskKind kind);

/// Loss of one prediction against labels with absences.
ad::Var loss(const ad::Var& pred, const std::vector<std::optional<double>>& labels, TaskKind kind);

/// Weighted loss term for one sample of a batch.
ad::Var weighted_loss(const ad::Var& pred, const std::vector<std::optional<double>>& labels,
                      const Tensor& weights, TaskKind kind);

/// Eval-mode predictions, one row per sample in input order.
Tensor predict_batch(const PotentialNetModel& model, std::span<const Sample> samples);

}  // namespace sgc::inline SGC_PRECISION_TAG

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hdnn/layers.hpp"
#include "hdnn/normalizer.hpp"

namespace hdnn {

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

struct DenseSpec {
  std::size_t units = 0;
};
struct Conv1dSpec {
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  // Absent padding means "same" (stride 1 only): pad so the length is kept.
  std::optional<std::size_t> padding;
};
struct ReluSpec {};
struct BatchNormSpec {};
struct DropoutSpec {
  double rate = 0.25;
};
struct MaxPool1dSpec {
  std::size_t window = 2;
  std::size_t stride = 2;
};
struct GlobalAvgPoolSpec {};

using LayerSpec = std::variant<DenseSpec, Conv1dSpec, ReluSpec, BatchNormSpec, DropoutSpec,
                               MaxPool1dSpec, GlobalAvgPoolSpec>;

enum class BranchKind { NumericMLP, SequenceCNN };
enum class TaskKind { Regression, Classification };

/// One feature-learning branch. NumericMLP consumes a [B x features] matrix,
/// SequenceCNN a [B x channels x length] tensor; both must end in a flat
/// per-sample feature vector (SequenceCNN via a global pooling stage).
struct BranchSpec {
  std::string name;
  BranchKind kind = BranchKind::NumericMLP;
  std::size_t input_features = 0;  // NumericMLP
  std::size_t input_channels = 0;  // SequenceCNN
  std::size_t input_length = 0;    // SequenceCNN
  std::vector<LayerSpec> layers;
};

/// Target-learning head: fully connected stack over the concatenated branch
/// features. Classification heads emit raw logits; softmax lives in the loss.
struct HeadSpec {
  std::vector<LayerSpec> layers;
  std::size_t output_width = 1;
  TaskKind task = TaskKind::Regression;
};

struct ModelConfig {
  std::vector<BranchSpec> branches;
  HeadSpec head;
  std::uint64_t seed = 0;
};

// Stock architectures. Input widths are the caller's (they depend on the
// dataset); everything else is the default layer stack.
ModelConfig stock_hdnn_config(std::size_t numeric_features, std::size_t curve_channels,
                              std::size_t curve_length, std::uint64_t seed);
ModelConfig stock_cnn_config(std::size_t curve_channels, std::size_t curve_length,
                             std::uint64_t seed);
ModelConfig stock_mlp_config(std::size_t numeric_features, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// End-to-end hybrid network: per-branch feature learners, feature-wise
/// concatenation, and a shared head. Branches execute and concatenate in
/// branch-name order, independent of their order in the config, so two
/// configs listing the same branches differently are the same model.
class HybridModel {
 public:
  explicit HybridModel(const ModelConfig& config);

  HybridModel(const HybridModel&) = delete;
  HybridModel& operator=(const HybridModel&) = delete;
  HybridModel(HybridModel&&) = default;
  HybridModel& operator=(HybridModel&&) = default;

  const ModelConfig& config() const { return config_; }

  /// Forward pass; `inputs` maps branch name to that branch's input tensor,
  /// all sharing one batch size. Train mode retains caches for backward.
  Tensor forward(const std::map<std::string, Tensor>& inputs, Mode mode);

  /// Backward from the gradient of a scalar loss w.r.t. the predictions.
  /// Writes every parameter gradient; requires a prior Train-mode forward.
  void backward(const Tensor& d_predictions);

  std::vector<ParamRef> parameters();
  std::vector<BufferRef> buffers();
  std::size_t parameter_count() const;
  void zero_grads();

  struct FeatureSlice {
    std::string branch;
    std::size_t offset = 0;
    std::size_t width = 0;
  };
  /// Concatenated-feature layout, in execution (name) order.
  const std::vector<FeatureSlice>& feature_layout() const { return layout_; }
  std::size_t head_input_width() const;

  std::vector<std::string> branch_names() const;
  BranchKind branch_kind(const std::string& name) const;

  /// Smallest kink margin across all layers after the last Train forward
  /// (see Layer::kink_margin); used to reject ill-posed gradient-check
  /// points.
  double min_kink_margin() const;

  // Snapshot/restore of all parameter and buffer values (not grads).
  std::vector<Tensor> state_snapshot() const;
  void restore_state(const std::vector<Tensor>& state);

  /// Reset the dropout mask stream (training determinism).
  void reseed_dropout(std::uint64_t seed);

  /// Fitted input statistics; attached by training, carried by checkpoints.
  std::optional<Normalizer> normalizer;

 private:
  struct BranchNet {
    std::string name;
    BranchKind kind;
    std::vector<std::unique_ptr<Layer>> layers;
    std::size_t output_width = 0;
  };

  ModelConfig config_;
  std::vector<BranchNet> branches_;  // sorted by name
  std::vector<std::unique_ptr<Layer>> head_;
  std::vector<std::size_t> split_widths_;
  std::vector<FeatureSlice> layout_;
  RngStream dropout_rng_;
  bool has_forward_cache_ = false;
};

}  // namespace hdnn

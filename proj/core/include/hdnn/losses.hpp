#pragma once

#include <cstdint>
#include <vector>

#include "hdnn/layers.hpp"
#include "hdnn/tensor.hpp"

namespace hdnn {

struct LossGrad {
  double loss;
  Tensor grad;
};

/// Mean squared error over equal-shape tensors:
///   loss = (1/M) * sum_j (pred_j - target_j)^2,  grad_j = 2 (pred_j - target_j) / M.
LossGrad mse_loss(const Tensor& pred, const Tensor& target);

struct CrossEntropyResult {
  double loss;      // mean over instances
  double loss_sum;  // plain sum over instances (= M * loss)
  Tensor grad;      // gradient of the mean form: (softmax - onehot) / M
};

/// Multiclass cross entropy on raw logits [M x C] with integer class labels.
/// Softmax is computed inside with a per-row max shift for stability.
CrossEntropyResult cross_entropy_loss(const Tensor& logits, const std::vector<std::size_t>& labels);

/// Mean absolute error.
double mae(const Tensor& pred, const Tensor& target);

/// Squared Pearson correlation coefficient between pred and target. Returns 0
/// when either side has zero variance. Sign-blind: anti-correlated inputs
/// also score 1 (this is not the coefficient of determination).
double r_squared(const Tensor& pred, const Tensor& target);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double r_squared = 0.0;
  std::size_t count = 0;
};

Metrics compute_metrics(const Tensor& pred, const Tensor& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam optimizer state: one first- and second-moment tensor per parameter
/// plus a shared step counter. Moments are lazily sized to the parameter list
/// on the first step and shape-checked afterwards.
///
/// Update, with bias-corrected moments m_hat and v_hat:
///   p <- p - lr * m_hat / sqrt(v_hat + eps)
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config);

  void step(const std::vector<ParamRef>& params);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }
  bool initialized() const { return !first_moment_.empty(); }
  const std::vector<Tensor>& first_moments() const { return first_moment_; }
  const std::vector<Tensor>& second_moments() const { return second_moment_; }

  // Checkpoint restore path.
  void restore(std::uint64_t step_count, std::vector<Tensor> first, std::vector<Tensor> second);

 private:
  AdamConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

/// One Adam update over the given parameter/gradient pairs.
void adam_step(const std::vector<ParamRef>& params, AdamState& state);

}  // namespace hdnn

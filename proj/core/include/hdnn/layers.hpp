#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hdnn/rng.hpp"
#include "hdnn/tensor.hpp"

namespace hdnn {

enum class Mode { Train, Infer };

// Named view of a trainable parameter and its gradient slot inside a layer.
struct ParamRef {
  std::string name;
  Tensor* value;
  Tensor* grad;
};

// Named view of a persistent non-trainable buffer (running statistics).
struct BufferRef {
  std::string name;
  Tensor* value;
};

/// Differentiable layer with an explicit forward and backward pass.
///
/// A Train-mode forward caches whatever backward needs; backward consumes
/// that cache, writes parameter gradients into the layers' grad slots, and
/// returns the gradient w.r.t. the input. Calling backward twice for one
/// forward, or without a forward, is an error.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;

  virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    (void)prefix;
    (void)out;
  }
  virtual void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
    (void)prefix;
    (void)out;
  }

  // Distance of the last Train-mode forward from the nearest gradient kink
  // (ReLU zero crossing, pooling tie). Infinite for smooth layers; used to
  // reject ill-posed finite-difference check points.
  virtual double kink_margin() const { return std::numeric_limits<double>::infinity(); }
};

/// Fully connected layer: y = x W + b with W[in x out], bias broadcast over
/// the batch. Backward: dx = dy W^T, dW = x^T dy, db = column sums of dy.
class Dense final : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  std::string kind() const override { return "dense"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  void init_parameters(RngStream& rng);  // He normal, zero bias

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  Tensor grad_weight;
  Tensor grad_bias;

 private:
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// 1-d convolution over [B x C_in x L] in the cross-correlation convention
/// with zero padding:
///   y[b][o][t] = bias[o] + sum_c sum_j x[b][c][t*stride + j - padding] * K[o][c][j]
/// Accumulation order is fixed: input channel outer, kernel index inner.
class Conv1d final : public Layer {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
         std::size_t stride, std::size_t padding);

  std::string kind() const override { return "conv1d"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

  void init_parameters(RngStream& rng);  // He normal over fan_in = C_in * k

  static std::size_t output_length(std::size_t input_length, std::size_t kernel_size,
                                   std::size_t stride, std::size_t padding);

  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t kernel_size() const { return kernel.dim(2); }
  std::size_t stride() const { return stride_; }
  std::size_t padding() const { return padding_; }

  Tensor kernel;  // [out_ch, in_ch, k]
  Tensor bias;    // [out_ch]
  Tensor grad_kernel;
  Tensor grad_bias;

 private:
  std::size_t stride_;
  std::size_t padding_;
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// max(x, 0); the gradient at exactly zero is defined as zero.
class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;
  double kink_margin() const override;

 private:
  Tensor cached_input_;
  bool has_cache_ = false;
};

/// Batch normalization over [B x F] (per feature) or [B x C x L] (per channel,
/// statistics pooled over batch and length). Train mode normalizes with the
/// batch mean and biased batch variance and updates the running statistics;
/// Infer mode normalizes with the running statistics.
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t features, double momentum = 0.1, double epsilon = 1e-5);

  std::string kind() const override { return "batch_norm"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override;

  std::size_t features() const { return gamma.size(); }
  double momentum() const { return momentum_; }
  double epsilon() const { return epsilon_; }

  Tensor gamma;  // scale, init 1
  Tensor beta;   // shift, init 0
  Tensor running_mean;
  Tensor running_var;
  Tensor grad_gamma;
  Tensor grad_beta;

 private:
  double momentum_;
  double epsilon_;
  // Cached from the last Train forward.
  Tensor cached_normalized_;
  Tensor cached_inv_std_;  // per feature
  Shape cached_shape_;
  bool has_cache_ = false;
};

/// Inverted dropout: Train mode keeps each element with probability 1 - rate
/// and scales survivors by 1/(1 - rate); Infer mode is the identity. Backward
/// applies the identical mask and scale.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  std::string kind() const override { return "dropout"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;

  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor cached_mask_;  // already includes the 1/(1-rate) scale
  bool has_cache_ = false;
};

/// Windowed maximum over the length axis of [B x C x L]. Backward routes the
/// upstream gradient to each window's argmax (lowest index on ties).
class MaxPool1d final : public Layer {
 public:
  MaxPool1d(std::size_t window, std::size_t stride);

  std::string kind() const override { return "max_pool1d"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;
  double kink_margin() const override;

  static std::size_t output_length(std::size_t input_length, std::size_t window,
                                   std::size_t stride);

  std::size_t window() const { return window_; }
  std::size_t stride() const { return stride_; }

 private:
  std::size_t window_;
  std::size_t stride_;
  Shape cached_in_shape_;
  std::vector<std::size_t> cached_argmax_;
  double cached_margin_ = std::numeric_limits<double>::infinity();
  bool has_cache_ = false;
};

/// Per-channel mean over the length axis: [B x C x L] -> [B x C]. Backward
/// distributes dy/L uniformly over the pooled positions.
class GlobalAvgPool final : public Layer {
 public:
  std::string kind() const override { return "global_avg_pool"; }
  Tensor forward(const Tensor& x, Mode mode, RngStream* rng = nullptr) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Shape cached_in_shape_;
  bool has_cache_ = false;
};

/// Feature-wise concatenation of per-sample flat features, in list order.
/// All parts must share the batch dimension.
Tensor concat_features(const std::vector<Tensor>& parts);

/// Splits an upstream gradient back into per-part gradients of the given
/// widths; the exact inverse of concat_features.
std::vector<Tensor> split_features(const Tensor& dy, const std::vector<std::size_t>& widths);

}  // namespace hdnn

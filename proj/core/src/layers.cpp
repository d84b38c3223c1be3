#include "hdnn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hdnn/errors.hpp"

namespace hdnn {

namespace {

void require_cache(bool has_cache, const char* kind) {
  if (!has_cache) {
    throw Error(std::string(kind) + ": backward called without a matching Train-mode forward");
  }
}

void require_rank(const Tensor& x, std::size_t rank, const char* kind) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(kind) + ": expected rank-" + std::to_string(rank) +
                     " input, got shape " + shape_to_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : weight({in_features, out_features}),
      bias({out_features}),
      grad_weight({in_features, out_features}),
      grad_bias({out_features}) {}

void Dense::init_parameters(RngStream& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_features()));
  weight = rng.normal_tensor(weight.shape(), 0.0, stddev);
  bias.fill(0.0);
}

Tensor Dense::forward(const Tensor& x, Mode mode, RngStream*) {
  require_rank(x, 2, "dense");
  const std::size_t batch = x.dim(0);
  const std::size_t d_in = in_features(), d_out = out_features();
  if (x.dim(1) != d_in) {
    throw ShapeError("dense: input width " + std::to_string(x.dim(1)) + " != " +
                     std::to_string(d_in));
  }
  Tensor y({batch, d_out});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < d_out; ++j) {
      double acc = bias[j];
      for (std::size_t i = 0; i < d_in; ++i) acc += x.at(b, i) * weight.at(i, j);
      y.at(b, j) = acc;
    }
  }
  if (mode == Mode::Train) {
    cached_input_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  require_cache(has_cache_, "dense");
  has_cache_ = false;
  const Tensor& x = cached_input_;
  const std::size_t batch = x.dim(0);
  const std::size_t d_in = in_features(), d_out = out_features();
  if (dy.rank() != 2 || dy.dim(0) != batch || dy.dim(1) != d_out) {
    throw ShapeError("dense: upstream gradient shape " + shape_to_string(dy.shape()) +
                     " does not match output");
  }

  for (std::size_t i = 0; i < d_in; ++i) {
    for (std::size_t j = 0; j < d_out; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < batch; ++b) acc += x.at(b, i) * dy.at(b, j);
      grad_weight.at(i, j) = acc;
    }
  }
  for (std::size_t j = 0; j < d_out; ++j) {
    double acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b) acc += dy.at(b, j);
    grad_bias[j] = acc;
  }

  Tensor dx({batch, d_in});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < d_in; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d_out; ++j) acc += dy.at(b, j) * weight.at(i, j);
      dx.at(b, i) = acc;
    }
  }
  return dx;
}

void Dense::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &weight, &grad_weight});
  out.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size,
               std::size_t stride, std::size_t padding)
    : kernel({out_channels, in_channels, kernel_size}),
      bias({out_channels}),
      grad_kernel({out_channels, in_channels, kernel_size}),
      grad_bias({out_channels}),
      stride_(stride),
      padding_(padding) {
  if (stride == 0) throw ValueError("conv1d: stride must be >= 1");
}

void Conv1d::init_parameters(RngStream& rng) {
  const double fan_in = static_cast<double>(in_channels() * kernel_size());
  kernel = rng.normal_tensor(kernel.shape(), 0.0, std::sqrt(2.0 / fan_in));
  bias.fill(0.0);
}

std::size_t Conv1d::output_length(std::size_t input_length, std::size_t kernel_size,
                                  std::size_t stride, std::size_t padding) {
  const std::size_t padded = input_length + 2 * padding;
  if (kernel_size > padded) {
    throw ShapeError("conv1d: kernel size " + std::to_string(kernel_size) +
                     " exceeds padded input length " + std::to_string(padded));
  }
  return (padded - kernel_size) / stride + 1;
}

Tensor Conv1d::forward(const Tensor& x, Mode mode, RngStream*) {
  require_rank(x, 3, "conv1d");
  const std::size_t batch = x.dim(0), c_in = in_channels(), length = x.dim(2);
  if (x.dim(1) != c_in) {
    throw ShapeError("conv1d: input has " + std::to_string(x.dim(1)) + " channels, expected " +
                     std::to_string(c_in));
  }
  const std::size_t c_out = out_channels(), k = kernel_size();
  const std::size_t out_len = output_length(length, k, stride_, padding_);

  Tensor y({batch, c_out, out_len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      for (std::size_t t = 0; t < out_len; ++t) {
        double acc = bias[o];
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t * stride_ + j) - static_cast<std::ptrdiff_t>(padding_);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
            acc += x.at(b, c, static_cast<std::size_t>(src)) * kernel.at(o, c, j);
          }
        }
        y.at(b, o, t) = acc;
      }
    }
  }
  if (mode == Mode::Train) {
    cached_input_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor Conv1d::backward(const Tensor& dy) {
  require_cache(has_cache_, "conv1d");
  has_cache_ = false;
  const Tensor& x = cached_input_;
  const std::size_t batch = x.dim(0), c_in = in_channels(), length = x.dim(2);
  const std::size_t c_out = out_channels(), k = kernel_size();
  const std::size_t out_len = output_length(length, k, stride_, padding_);
  if (dy.rank() != 3 || dy.dim(0) != batch || dy.dim(1) != c_out || dy.dim(2) != out_len) {
    throw ShapeError("conv1d: upstream gradient shape " + shape_to_string(dy.shape()) +
                     " does not match output");
  }

  grad_kernel.fill(0.0);
  grad_bias.fill(0.0);
  Tensor dx({batch, c_in, length});

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < c_out; ++o) {
      for (std::size_t t = 0; t < out_len; ++t) {
        const double g = dy.at(b, o, t);
        grad_bias[o] += g;
        for (std::size_t c = 0; c < c_in; ++c) {
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src =
                static_cast<std::ptrdiff_t>(t * stride_ + j) - static_cast<std::ptrdiff_t>(padding_);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(length)) continue;
            grad_kernel.at(o, c, j) += g * x.at(b, c, static_cast<std::size_t>(src));
            dx.at(b, c, static_cast<std::size_t>(src)) += g * kernel.at(o, c, j);
          }
        }
      }
    }
  }
  return dx;
}

void Conv1d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".kernel", &kernel, &grad_kernel});
  out.push_back({prefix + ".bias", &bias, &grad_bias});
}

// ---------------------------------------------------------------------------
// Relu
// ---------------------------------------------------------------------------

Tensor Relu::forward(const Tensor& x, Mode mode, RngStream*) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  if (mode == Mode::Train) {
    cached_input_ = x;
    has_cache_ = true;
  }
  return y;
}

Tensor Relu::backward(const Tensor& dy) {
  require_cache(has_cache_, "relu");
  has_cache_ = false;
  if (!dy.same_shape(cached_input_)) {
    throw ShapeError("relu: upstream gradient shape mismatch");
  }
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) {
    dx[i] = cached_input_[i] > 0.0 ? dy[i] : 0.0;
  }
  return dx;
}

double Relu::kink_margin() const {
  if (!has_cache_) return std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cached_input_.size(); ++i) {
    margin = std::min(margin, std::abs(cached_input_[i]));
  }
  return margin;
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t features, double momentum, double epsilon)
    : gamma({features}, 1.0),
      beta({features}),
      running_mean({features}),
      running_var({features}, 1.0),
      grad_gamma({features}),
      grad_beta({features}),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (epsilon <= 0.0) throw ValueError("batch_norm: epsilon must be > 0");
}

namespace {

// Iteration helper over both accepted layouts: [B, F] and [B, C, L]. Feature f
// owns `per_feature` positions in every sample.
struct BnLayout {
  std::size_t batch, features, inner;  // inner = 1 (2-d) or L (3-d)
  std::size_t count() const { return batch * inner; }
  std::size_t index(std::size_t b, std::size_t f, std::size_t i) const {
    return (b * features + f) * inner + i;
  }
};

BnLayout bn_layout(const Tensor& x, std::size_t features) {
  if (x.rank() == 2) {
    if (x.dim(1) != features) {
      throw ShapeError("batch_norm: input has " + std::to_string(x.dim(1)) +
                       " features, expected " + std::to_string(features));
    }
    return {x.dim(0), features, 1};
  }
  if (x.rank() == 3) {
    if (x.dim(1) != features) {
      throw ShapeError("batch_norm: input has " + std::to_string(x.dim(1)) +
                       " channels, expected " + std::to_string(features));
    }
    return {x.dim(0), features, x.dim(2)};
  }
  throw ShapeError("batch_norm: expected rank-2 or rank-3 input, got shape " +
                   shape_to_string(x.shape()));
}

}  // namespace

Tensor BatchNorm::forward(const Tensor& x, Mode mode, RngStream*) {
  const BnLayout lay = bn_layout(x, features());
  Tensor y(x.shape());

  if (mode == Mode::Infer) {
    for (std::size_t f = 0; f < lay.features; ++f) {
      const double inv_std = 1.0 / std::sqrt(running_var[f] + epsilon_);
      const double m = running_mean[f];
      for (std::size_t b = 0; b < lay.batch; ++b) {
        for (std::size_t i = 0; i < lay.inner; ++i) {
          const std::size_t idx = lay.index(b, f, i);
          y[idx] = gamma[f] * ((x[idx] - m) * inv_std) + beta[f];
        }
      }
    }
    return y;
  }

  const std::size_t n = lay.count();
  if (n < 2) {
    throw ValueError("batch_norm: Train mode requires at least 2 values per feature, got " +
                     std::to_string(n));
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  cached_normalized_ = Tensor(x.shape());
  cached_inv_std_ = Tensor({lay.features});
  cached_shape_ = x.shape();

  for (std::size_t f = 0; f < lay.features; ++f) {
    double m = 0.0;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      for (std::size_t i = 0; i < lay.inner; ++i) m += x[lay.index(b, f, i)];
    }
    m *= inv_n;
    double var = 0.0;  // biased
    for (std::size_t b = 0; b < lay.batch; ++b) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const double d = x[lay.index(b, f, i)] - m;
        var += d * d;
      }
    }
    var *= inv_n;

    const double inv_std = 1.0 / std::sqrt(var + epsilon_);
    cached_inv_std_[f] = inv_std;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const std::size_t idx = lay.index(b, f, i);
        const double xn = (x[idx] - m) * inv_std;
        cached_normalized_[idx] = xn;
        y[idx] = gamma[f] * xn + beta[f];
      }
    }
    running_mean[f] = (1.0 - momentum_) * running_mean[f] + momentum_ * m;
    running_var[f] = (1.0 - momentum_) * running_var[f] + momentum_ * var;
  }
  has_cache_ = true;
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  require_cache(has_cache_, "batch_norm");
  has_cache_ = false;
  if (dy.shape() != cached_shape_) {
    throw ShapeError("batch_norm: upstream gradient shape mismatch");
  }
  const BnLayout lay = bn_layout(dy, features());
  const double inv_n = 1.0 / static_cast<double>(lay.count());

  Tensor dx(dy.shape());
  for (std::size_t f = 0; f < lay.features; ++f) {
    double sum_dy = 0.0, sum_dy_xn = 0.0;
    for (std::size_t b = 0; b < lay.batch; ++b) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const std::size_t idx = lay.index(b, f, i);
        sum_dy += dy[idx];
        sum_dy_xn += dy[idx] * cached_normalized_[idx];
      }
    }
    grad_beta[f] = sum_dy;
    grad_gamma[f] = sum_dy_xn;

    const double scale = gamma[f] * cached_inv_std_[f];
    for (std::size_t b = 0; b < lay.batch; ++b) {
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const std::size_t idx = lay.index(b, f, i);
        dx[idx] = scale * (dy[idx] - inv_n * sum_dy - cached_normalized_[idx] * inv_n * sum_dy_xn);
      }
    }
  }
  return dx;
}

void BatchNorm::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma, &grad_gamma});
  out.push_back({prefix + ".beta", &beta, &grad_beta});
}

void BatchNorm::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ValueError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

Tensor Dropout::forward(const Tensor& x, Mode mode, RngStream* rng) {
  if (mode == Mode::Infer || rate_ == 0.0) {
    if (mode == Mode::Train) {
      cached_mask_ = Tensor(x.shape(), 1.0);
      has_cache_ = true;
    }
    return x;
  }
  if (rng == nullptr) throw Error("dropout: Train-mode forward requires an RngStream");

  const double keep = 1.0 - rate_;
  const double inv_keep = 1.0 / keep;
  cached_mask_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng->next_uniform() < keep ? inv_keep : 0.0;
    cached_mask_[i] = m;
    y[i] = x[i] * m;
  }
  has_cache_ = true;
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  require_cache(has_cache_, "dropout");
  has_cache_ = false;
  if (!dy.same_shape(cached_mask_)) {
    throw ShapeError("dropout: upstream gradient shape mismatch");
  }
  return mul(dy, cached_mask_);
}

// ---------------------------------------------------------------------------
// MaxPool1d
// ---------------------------------------------------------------------------

MaxPool1d::MaxPool1d(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window == 0) throw ValueError("max_pool1d: window must be >= 1");
  if (stride == 0) throw ValueError("max_pool1d: stride must be >= 1");
}

std::size_t MaxPool1d::output_length(std::size_t input_length, std::size_t window,
                                     std::size_t stride) {
  if (window > input_length) {
    throw ShapeError("max_pool1d: window " + std::to_string(window) + " exceeds input length " +
                     std::to_string(input_length));
  }
  return (input_length - window) / stride + 1;
}

Tensor MaxPool1d::forward(const Tensor& x, Mode mode, RngStream*) {
  require_rank(x, 3, "max_pool1d");
  const std::size_t batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const std::size_t out_len = output_length(length, window_, stride_);

  Tensor y({batch, channels, out_len});
  std::vector<std::size_t> arg(batch * channels * out_len);
  double margin = std::numeric_limits<double>::infinity();

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < out_len; ++t) {
        const std::size_t start = t * stride_;
        std::size_t best = start;
        double best_val = x.at(b, c, start);
        double runner_up = -std::numeric_limits<double>::infinity();
        for (std::size_t w = 1; w < window_; ++w) {
          const double v = x.at(b, c, start + w);
          if (v > best_val) {
            runner_up = best_val;
            best_val = v;
            best = start + w;
          } else {
            runner_up = std::max(runner_up, v);
          }
        }
        if (window_ > 1) margin = std::min(margin, best_val - runner_up);
        y.at(b, c, t) = best_val;
        arg[(b * channels + c) * out_len + t] = best;
      }
    }
  }
  if (mode == Mode::Train) {
    cached_in_shape_ = x.shape();
    cached_argmax_ = std::move(arg);
    cached_margin_ = margin;
    has_cache_ = true;
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& dy) {
  require_cache(has_cache_, "max_pool1d");
  has_cache_ = false;
  const std::size_t batch = cached_in_shape_[0], channels = cached_in_shape_[1];
  const std::size_t out_len = output_length(cached_in_shape_[2], window_, stride_);
  if (dy.rank() != 3 || dy.dim(0) != batch || dy.dim(1) != channels || dy.dim(2) != out_len) {
    throw ShapeError("max_pool1d: upstream gradient shape mismatch");
  }
  Tensor dx(cached_in_shape_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < out_len; ++t) {
        dx.at(b, c, cached_argmax_[(b * channels + c) * out_len + t]) += dy.at(b, c, t);
      }
    }
  }
  return dx;
}

double MaxPool1d::kink_margin() const {
  return has_cache_ ? cached_margin_ : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// GlobalAvgPool
// ---------------------------------------------------------------------------

Tensor GlobalAvgPool::forward(const Tensor& x, Mode mode, RngStream*) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t batch = x.dim(0), channels = x.dim(1), length = x.dim(2);
  const double inv_len = 1.0 / static_cast<double>(length);
  Tensor y({batch, channels});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < length; ++t) acc += x.at(b, c, t);
      y.at(b, c) = acc * inv_len;
    }
  }
  if (mode == Mode::Train) {
    cached_in_shape_ = x.shape();
    has_cache_ = true;
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  require_cache(has_cache_, "global_avg_pool");
  has_cache_ = false;
  const std::size_t batch = cached_in_shape_[0], channels = cached_in_shape_[1];
  const std::size_t length = cached_in_shape_[2];
  if (dy.rank() != 2 || dy.dim(0) != batch || dy.dim(1) != channels) {
    throw ShapeError("global_avg_pool: upstream gradient shape mismatch");
  }
  const double inv_len = 1.0 / static_cast<double>(length);
  Tensor dx(cached_in_shape_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = dy.at(b, c) * inv_len;
      for (std::size_t t = 0; t < length; ++t) dx.at(b, c, t) = g;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Feature concatenation
// ---------------------------------------------------------------------------

Tensor concat_features(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValueError("concat_features: empty part list");
  const std::size_t batch = parts.front().dim(0);
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2) {
      throw ShapeError("concat_features: parts must be rank-2, got " + shape_to_string(p.shape()));
    }
    if (p.dim(0) != batch) {
      throw ShapeError("concat_features: batch mismatch, " + std::to_string(p.dim(0)) + " vs " +
                       std::to_string(batch));
    }
    total += p.dim(1);
  }
  Tensor out({batch, total});
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t off = 0;
    for (const Tensor& p : parts) {
      const std::size_t w = p.dim(1);
      for (std::size_t i = 0; i < w; ++i) out.at(b, off + i) = p.at(b, i);
      off += w;
    }
  }
  return out;
}

std::vector<Tensor> split_features(const Tensor& dy, const std::vector<std::size_t>& widths) {
  require_rank(dy, 2, "split_features");
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  if (total != dy.dim(1)) {
    throw ShapeError("split_features: widths sum to " + std::to_string(total) +
                     ", gradient has " + std::to_string(dy.dim(1)) + " features");
  }
  const std::size_t batch = dy.dim(0);
  std::vector<Tensor> parts;
  parts.reserve(widths.size());
  std::size_t off = 0;
  for (std::size_t w : widths) {
    Tensor p({batch, w});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < w; ++i) p.at(b, i) = dy.at(b, off + i);
    }
    parts.push_back(std::move(p));
    off += w;
  }
  return parts;
}

}  // namespace hdnn

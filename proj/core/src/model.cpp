#include "hdnn/model.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "hdnn/errors.hpp"

namespace hdnn {

namespace {

// Running activation shape while a layer stack is assembled.
struct BuildShape {
  bool flat = true;
  std::size_t width = 0;     // flat
  std::size_t channels = 0;  // spatial
  std::size_t length = 0;    // spatial
};

std::string describe(const BuildShape& s) {
  if (s.flat) return "[B x " + std::to_string(s.width) + "]";
  return "[B x " + std::to_string(s.channels) + " x " + std::to_string(s.length) + "]";
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, BuildShape& shape,
                                  const std::string& where) {
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    if (!shape.flat) {
      throw ShapeError(where + ": dense layer needs a flat input, have " + describe(shape));
    }
    if (d->units == 0) throw ValueError(where + ": dense layer needs units >= 1");
    auto layer = std::make_unique<Dense>(shape.width, d->units);
    shape.width = d->units;
    return layer;
  }
  if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
    if (shape.flat) {
      throw ShapeError(where + ": conv1d needs a channel x length input, have " + describe(shape));
    }
    if (c->filters == 0 || c->kernel == 0) {
      throw ValueError(where + ": conv1d needs filters >= 1 and kernel >= 1");
    }
    std::size_t padding;
    if (c->padding.has_value()) {
      padding = *c->padding;
    } else {
      // "same" padding: stride 1 and an odd kernel keep the length.
      if (c->stride != 1) {
        throw ValueError(where + ": same padding requires stride 1");
      }
      if (c->kernel % 2 == 0) {
        throw ValueError(where + ": same padding requires an odd kernel");
      }
      padding = (c->kernel - 1) / 2;
    }
    const std::size_t out_len = Conv1d::output_length(shape.length, c->kernel, c->stride, padding);
    auto layer = std::make_unique<Conv1d>(shape.channels, c->filters, c->kernel, c->stride, padding);
    shape.channels = c->filters;
    shape.length = out_len;
    return layer;
  }
  if (std::holds_alternative<ReluSpec>(spec)) {
    return std::make_unique<Relu>();
  }
  if (std::holds_alternative<BatchNormSpec>(spec)) {
    return std::make_unique<BatchNorm>(shape.flat ? shape.width : shape.channels);
  }
  if (const auto* d = std::get_if<DropoutSpec>(&spec)) {
    return std::make_unique<Dropout>(d->rate);
  }
  if (const auto* p = std::get_if<MaxPool1dSpec>(&spec)) {
    if (shape.flat) {
      throw ShapeError(where + ": max_pool1d needs a channel x length input, have " +
                       describe(shape));
    }
    shape.length = MaxPool1d::output_length(shape.length, p->window, p->stride);
    return std::make_unique<MaxPool1d>(p->window, p->stride);
  }
  if (std::holds_alternative<GlobalAvgPoolSpec>(spec)) {
    if (shape.flat) {
      throw ShapeError(where + ": global_avg_pool needs a channel x length input, have " +
                       describe(shape));
    }
    shape.flat = true;
    shape.width = shape.channels;
    return std::make_unique<GlobalAvgPool>();
  }
  throw Error(where + ": unhandled layer spec");
}

void init_stack(std::vector<std::unique_ptr<Layer>>& layers, RngStream& rng) {
  for (auto& layer : layers) {
    if (auto* dense = dynamic_cast<Dense*>(layer.get())) dense->init_parameters(rng);
    if (auto* conv = dynamic_cast<Conv1d*>(layer.get())) conv->init_parameters(rng);
  }
}

}  // namespace

ModelConfig stock_hdnn_config(std::size_t numeric_features, std::size_t curve_channels,
                              std::size_t curve_length, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seed = seed;
  ModelConfig mlp = stock_mlp_config(numeric_features, seed);
  ModelConfig cnn = stock_cnn_config(curve_channels, curve_length, seed);
  cfg.branches.push_back(mlp.branches.front());
  cfg.branches.push_back(cnn.branches.front());
  cfg.head.layers = {DenseSpec{64}, ReluSpec{}, DropoutSpec{0.25}, DenseSpec{1}};
  cfg.head.output_width = 1;
  cfg.head.task = TaskKind::Regression;
  return cfg;
}

ModelConfig stock_cnn_config(std::size_t curve_channels, std::size_t curve_length,
                             std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seed = seed;
  BranchSpec seq;
  seq.name = "seq";
  seq.kind = BranchKind::SequenceCNN;
  seq.input_channels = curve_channels;
  seq.input_length = curve_length;
  seq.layers = {Conv1dSpec{16, 5, 1, std::nullopt}, BatchNormSpec{}, ReluSpec{},
                MaxPool1dSpec{2, 2},
                Conv1dSpec{32, 5, 1, std::nullopt}, BatchNormSpec{}, ReluSpec{},
                MaxPool1dSpec{2, 2},
                Conv1dSpec{64, 3, 1, std::nullopt}, BatchNormSpec{}, ReluSpec{},
                GlobalAvgPoolSpec{}};
  cfg.branches.push_back(std::move(seq));
  cfg.head.layers = {DenseSpec{64}, ReluSpec{}, DropoutSpec{0.25}, DenseSpec{1}};
  cfg.head.output_width = 1;
  cfg.head.task = TaskKind::Regression;
  return cfg;
}

ModelConfig stock_mlp_config(std::size_t numeric_features, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seed = seed;
  BranchSpec num;
  num.name = "num";
  num.kind = BranchKind::NumericMLP;
  num.input_features = numeric_features;
  num.layers = {DenseSpec{32}, ReluSpec{}, DenseSpec{32}, ReluSpec{}};
  cfg.branches.push_back(std::move(num));
  cfg.head.layers = {DenseSpec{64}, ReluSpec{}, DropoutSpec{0.25}, DenseSpec{1}};
  cfg.head.output_width = 1;
  cfg.head.task = TaskKind::Regression;
  return cfg;
}

HybridModel::HybridModel(const ModelConfig& config) : config_(config), dropout_rng_(0) {
  if (config_.branches.empty()) throw ValueError("model: config needs at least one branch");
  std::set<std::string> names;
  for (const BranchSpec& b : config_.branches) {
    if (b.name.empty()) throw ValueError("model: branch names must be non-empty");
    if (!names.insert(b.name).second) throw ValueError("model: duplicate branch name " + b.name);
  }
  if (config_.head.layers.empty()) throw ValueError("model: head needs at least one layer");
  if (config_.head.output_width == 0) throw ValueError("model: head output width must be >= 1");

  // Canonical execution order: branch name, ascending. The config may list
  // branches in any order without changing the model.
  std::vector<const BranchSpec*> ordered;
  for (const BranchSpec& b : config_.branches) ordered.push_back(&b);
  std::sort(ordered.begin(), ordered.end(),
            [](const BranchSpec* a, const BranchSpec* b) { return a->name < b->name; });

  std::size_t concat_width = 0;
  for (const BranchSpec* spec : ordered) {
    BuildShape shape;
    if (spec->kind == BranchKind::NumericMLP) {
      if (spec->input_features == 0) {
        throw ValueError("branch " + spec->name + ": numeric branch needs input_features >= 1");
      }
      shape = {true, spec->input_features, 0, 0};
    } else {
      if (spec->input_channels == 0 || spec->input_length == 0) {
        throw ValueError("branch " + spec->name +
                         ": sequence branch needs input_channels and input_length >= 1");
      }
      shape = {false, 0, spec->input_channels, spec->input_length};
    }

    BranchNet net;
    net.name = spec->name;
    net.kind = spec->kind;
    for (std::size_t i = 0; i < spec->layers.size(); ++i) {
      net.layers.push_back(
          make_layer(spec->layers[i], shape, "branch " + spec->name + " layer " + std::to_string(i)));
    }
    if (!shape.flat) {
      throw ShapeError("branch " + spec->name +
                       ": output must be a flat feature vector; end with global_avg_pool");
    }
    net.output_width = shape.width;
    layout_.push_back({net.name, concat_width, net.output_width});
    split_widths_.push_back(net.output_width);
    concat_width += net.output_width;
    branches_.push_back(std::move(net));
  }

  BuildShape head_shape{true, concat_width, 0, 0};
  for (std::size_t i = 0; i < config_.head.layers.size(); ++i) {
    if (std::holds_alternative<Conv1dSpec>(config_.head.layers[i]) ||
        std::holds_alternative<MaxPool1dSpec>(config_.head.layers[i]) ||
        std::holds_alternative<GlobalAvgPoolSpec>(config_.head.layers[i])) {
      throw ValueError("head layer " + std::to_string(i) + ": head is a fully connected stack");
    }
    head_.push_back(make_layer(config_.head.layers[i], head_shape, "head layer " + std::to_string(i)));
  }
  if (head_shape.width != config_.head.output_width) {
    throw ShapeError("head produces width " + std::to_string(head_shape.width) +
                     ", config declares " + std::to_string(config_.head.output_width));
  }

  RngStream init_rng(config_.seed);
  for (BranchNet& b : branches_) init_stack(b.layers, init_rng);
  init_stack(head_, init_rng);
  dropout_rng_ = init_rng.fork();
}

std::vector<ParamRef> HybridModel::parameters() {
  std::vector<ParamRef> out;
  for (BranchNet& b : branches_) {
    for (std::size_t i = 0; i < b.layers.size(); ++i) {
      b.layers[i]->collect_params(b.name + "." + std::to_string(i), out);
    }
  }
  for (std::size_t i = 0; i < head_.size(); ++i) {
    head_[i]->collect_params("head." + std::to_string(i), out);
  }
  return out;
}

std::vector<BufferRef> HybridModel::buffers() {
  std::vector<BufferRef> out;
  for (BranchNet& b : branches_) {
    for (std::size_t i = 0; i < b.layers.size(); ++i) {
      b.layers[i]->collect_buffers(b.name + "." + std::to_string(i), out);
    }
  }
  for (std::size_t i = 0; i < head_.size(); ++i) {
    head_[i]->collect_buffers("head." + std::to_string(i), out);
  }
  return out;
}

std::size_t HybridModel::parameter_count() const {
  std::size_t count = 0;
  auto& self = const_cast<HybridModel&>(*this);
  for (const ParamRef& p : self.parameters()) count += p.value->size();
  return count;
}

void HybridModel::zero_grads() {
  for (const ParamRef& p : parameters()) p.grad->fill(0.0);
}

std::size_t HybridModel::head_input_width() const {
  std::size_t total = 0;
  for (std::size_t w : split_widths_) total += w;
  return total;
}

std::vector<std::string> HybridModel::branch_names() const {
  std::vector<std::string> names;
  for (const BranchNet& b : branches_) names.push_back(b.name);
  return names;
}

BranchKind HybridModel::branch_kind(const std::string& name) const {
  for (const BranchNet& b : branches_) {
    if (b.name == name) return b.kind;
  }
  throw ValueError("model: no branch named " + name);
}

double HybridModel::min_kink_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (const BranchNet& b : branches_) {
    for (const auto& layer : b.layers) margin = std::min(margin, layer->kink_margin());
  }
  for (const auto& layer : head_) margin = std::min(margin, layer->kink_margin());
  return margin;
}

Tensor HybridModel::forward(const std::map<std::string, Tensor>& inputs, Mode mode) {
  std::vector<Tensor> features;
  features.reserve(branches_.size());
  std::size_t batch = 0;

  for (BranchNet& b : branches_) {
    auto it = inputs.find(b.name);
    if (it == inputs.end()) throw ValueError("model: missing input for branch " + b.name);
    const Tensor& in = it->second;
    if (b.kind == BranchKind::NumericMLP) {
      if (in.rank() != 2) {
        throw ShapeError("branch " + b.name + ": expected [B x features] input, got " +
                         shape_to_string(in.shape()));
      }
    } else if (in.rank() != 3) {
      throw ShapeError("branch " + b.name + ": expected [B x channels x length] input, got " +
                       shape_to_string(in.shape()));
    }
    if (batch == 0) {
      batch = in.dim(0);
    } else if (in.dim(0) != batch) {
      throw ShapeError("model: branch inputs disagree on batch size");
    }

    Tensor x = in;
    for (auto& layer : b.layers) x = layer->forward(x, mode, &dropout_rng_);
    features.push_back(std::move(x));
  }

  Tensor z = concat_features(features);
  for (auto& layer : head_) z = layer->forward(z, mode, &dropout_rng_);
  has_forward_cache_ = (mode == Mode::Train);
  return z;
}

void HybridModel::backward(const Tensor& d_predictions) {
  if (!has_forward_cache_) {
    throw Error("model: backward requires a preceding Train-mode forward (caches are single-use)");
  }
  has_forward_cache_ = false;

  Tensor g = d_predictions;
  for (auto it = head_.rbegin(); it != head_.rend(); ++it) g = (*it)->backward(g);

  std::vector<Tensor> parts = split_features(g, split_widths_);
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    Tensor bg = std::move(parts[i]);
    auto& layers = branches_[i].layers;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) bg = (*it)->backward(bg);
  }
}

std::vector<Tensor> HybridModel::state_snapshot() const {
  auto& self = const_cast<HybridModel&>(*this);
  std::vector<Tensor> state;
  for (const ParamRef& p : self.parameters()) state.push_back(*p.value);
  for (const BufferRef& b : self.buffers()) state.push_back(*b.value);
  return state;
}

void HybridModel::restore_state(const std::vector<Tensor>& state) {
  std::vector<ParamRef> params = parameters();
  std::vector<BufferRef> bufs = buffers();
  if (state.size() != params.size() + bufs.size()) {
    throw ShapeError("model: state snapshot has " + std::to_string(state.size()) +
                     " tensors, expected " + std::to_string(params.size() + bufs.size()));
  }
  std::size_t i = 0;
  for (ParamRef& p : params) {
    if (!p.value->same_shape(state[i])) throw ShapeError("model: snapshot shape mismatch at " + p.name);
    *p.value = state[i++];
  }
  for (BufferRef& b : bufs) {
    if (!b.value->same_shape(state[i])) throw ShapeError("model: snapshot shape mismatch at " + b.name);
    *b.value = state[i++];
  }
}

void HybridModel::reseed_dropout(std::uint64_t seed) {
  dropout_rng_ = RngStream(seed);
}

}  // namespace hdnn

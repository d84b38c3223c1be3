#include "hdnn/losses.hpp"

#include <cmath>
#include <string>

#include "hdnn/errors.hpp"

namespace hdnn {

LossGrad mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mse_loss: shape mismatch, " + shape_to_string(pred.shape()) + " vs " +
                     shape_to_string(target.shape()));
  }
  if (pred.empty()) throw ValueError("mse_loss: empty input");
  const double inv_m = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  Tensor grad(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    loss += d * d;
    grad[i] = 2.0 * d * inv_m;
  }
  return {loss * inv_m, std::move(grad)};
}

CrossEntropyResult cross_entropy_loss(const Tensor& logits,
                                      const std::vector<std::size_t>& labels) {
  if (logits.rank() != 2) {
    throw ShapeError("cross_entropy_loss: logits must be [M x C], got " +
                     shape_to_string(logits.shape()));
  }
  const std::size_t m = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != m) {
    throw ShapeError("cross_entropy_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(m) + " rows");
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  double loss_sum = 0.0;
  Tensor grad({m, classes});
  for (std::size_t j = 0; j < m; ++j) {
    if (labels[j] >= classes) {
      throw ValueError("cross_entropy_loss: label " + std::to_string(labels[j]) +
                       " out of range for " + std::to_string(classes) + " classes");
    }
    double row_max = logits.at(j, 0);
    for (std::size_t k = 1; k < classes; ++k) row_max = std::max(row_max, logits.at(j, k));
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(logits.at(j, k) - row_max);
    const double log_denom = std::log(denom);
    loss_sum -= (logits.at(j, labels[j]) - row_max) - log_denom;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(logits.at(j, k) - row_max) / denom;
      grad.at(j, k) = (p - (k == labels[j] ? 1.0 : 0.0)) * inv_m;
    }
  }
  return {loss_sum * inv_m, loss_sum, std::move(grad)};
}

double mae(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mae: shape mismatch, " + shape_to_string(pred.shape()) + " vs " +
                     shape_to_string(target.shape()));
  }
  if (pred.empty()) throw ValueError("mae: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

double r_squared(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ShapeError("r_squared: shape mismatch, " + shape_to_string(pred.shape()) + " vs " +
                     shape_to_string(target.shape()));
  }
  const std::size_t m = pred.size();
  if (m < 2) throw ValueError("r_squared requires at least 2 points");
  const double inv_m = 1.0 / static_cast<double>(m);
  double mean_p = 0.0, mean_t = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mean_p += pred[i];
    mean_t += target[i];
  }
  mean_p *= inv_m;
  mean_t *= inv_m;
  double cov = 0.0, var_p = 0.0, var_t = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dp = pred[i] - mean_p;
    const double dt = target[i] - mean_t;
    cov += dp * dt;
    var_p += dp * dp;
    var_t += dt * dt;
  }
  if (var_p == 0.0 || var_t == 0.0) return 0.0;
  const double r = cov / std::sqrt(var_p * var_t);
  return r * r;
}

Metrics compute_metrics(const Tensor& pred, const Tensor& target) {
  Metrics m;
  m.count = pred.size();
  m.mse = mse_loss(pred, target).loss;
  m.mae = mae(pred, target);
  m.r_squared = r_squared(pred, target);
  return m;
}

AdamState::AdamState(AdamConfig config) : config_(config) {
  if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
    throw ValueError("adam: betas must lie in [0, 1)");
  }
  if (config.epsilon <= 0.0) throw ValueError("adam: epsilon must be > 0");
}

void AdamState::restore(std::uint64_t step_count, std::vector<Tensor> first,
                        std::vector<Tensor> second) {
  if (first.size() != second.size()) {
    throw ValueError("adam: moment lists must have equal length");
  }
  step_count_ = step_count;
  first_moment_ = std::move(first);
  second_moment_ = std::move(second);
}

void AdamState::step(const std::vector<ParamRef>& params) {
  if (first_moment_.empty()) {
    first_moment_.reserve(params.size());
    second_moment_.reserve(params.size());
    for (const ParamRef& p : params) {
      first_moment_.emplace_back(p.value->shape());
      second_moment_.emplace_back(p.value->shape());
    }
  }
  if (first_moment_.size() != params.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(first_moment_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }

  ++step_count_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));

  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = *params[p].value;
    const Tensor& grad = *params[p].grad;
    Tensor& m = first_moment_[p];
    Tensor& v = second_moment_[p];
    if (!value.same_shape(grad) || !value.same_shape(m)) {
      throw ShapeError("adam: shape mismatch for parameter " + params[p].name);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= config_.learning_rate * m_hat / std::sqrt(v_hat + config_.epsilon);
    }
  }
}

void adam_step(const std::vector<ParamRef>& params, AdamState& state) {
  state.step(params);
}

}  // namespace hdnn

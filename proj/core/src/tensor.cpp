#include "hdnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "hdnn/errors.hpp"

namespace hdnn {

namespace {

void check_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be >= 1, got shape " + shape_to_string(shape));
  }
}

// Strides of the collapsed view around `axis`: outer blocks, axis extent, inner run.
struct AxisView {
  std::size_t outer, extent, inner;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("reduction axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape));
  }
  AxisView v{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  out.reserve(shape.size() - 1);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

std::size_t shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("shape " + shape_to_string(shape_) + " expects " +
                     std::to_string(shape_product(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValueError("tensor constructed with non-finite value");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape_));
  }
  return shape_[axis];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  return values_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  return values_[i * shape_[1] + j];
}

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
  return values_[(i * shape_[1] + j) * shape_[2] + k];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  return values_[(i * shape_[1] + j) * shape_[2] + k];
}

void Tensor::fill(double v) {
  std::fill(values_.begin(), values_.end(), v);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul requires rank-2 tensors, got " + shape_to_string(a.shape()) +
                     " and " + shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul inner dimensions disagree: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += pa[i * k + t] * pb[t * n + j];
      pc[i * n + j] = acc;
    }
  }
  return c;
}

namespace {

template <typename Fn>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fn fn) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(name) + " shape mismatch: " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  return out;
}

Tensor map(const Tensor& a, const std::function<double(double)>& fn) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return acc;
}

double mean(const Tensor& a) {
  if (a.empty()) throw ValueError("mean of empty tensor");
  return sum(a) / static_cast<double>(a.size());
}

double max_value(const Tensor& a) {
  if (a.empty()) throw ValueError("max of empty tensor");
  double best = a[0];
  for (std::size_t i = 1; i < a.size(); ++i) best = std::max(best, a[i]);
  return best;
}

std::size_t argmax(const Tensor& a) {
  if (a.empty()) throw ValueError("argmax of empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis);
  Tensor out(drop_axis(a.shape(), axis));
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      double acc = 0.0;
      for (std::size_t e = 0; e < v.extent; ++e) acc += a[(o * v.extent + e) * v.inner + in];
      out[o * v.inner + in] = acc;
    }
  }
  return out;
}

Tensor mean_axis(const Tensor& a, std::size_t axis) {
  Tensor out = sum_axis(a, axis);
  const double n = static_cast<double>(a.dim(axis));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= n;
  return out;
}

Tensor max_axis(const Tensor& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis);
  Tensor out(drop_axis(a.shape(), axis));
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      double best = a[(o * v.extent) * v.inner + in];
      for (std::size_t e = 1; e < v.extent; ++e) {
        best = std::max(best, a[(o * v.extent + e) * v.inner + in]);
      }
      out[o * v.inner + in] = best;
    }
  }
  return out;
}

std::vector<std::size_t> argmax_axis(const Tensor& a, std::size_t axis) {
  const AxisView v = axis_view(a.shape(), axis);
  std::vector<std::size_t> out(v.outer * v.inner, 0);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      std::size_t best = 0;
      double best_val = a[(o * v.extent) * v.inner + in];
      for (std::size_t e = 1; e < v.extent; ++e) {
        const double val = a[(o * v.extent + e) * v.inner + in];
        if (val > best_val) {
          best_val = val;
          best = e;
        }
      }
      out[o * v.inner + in] = best;
    }
  }
  return out;
}

}  // namespace hdnn

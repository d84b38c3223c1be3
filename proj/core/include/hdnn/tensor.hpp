#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace hdnn {

using Shape = std::vector<std::size_t>;

/// Dense row-major tensor of 64-bit floats. Value semantics throughout:
/// copies are deep, moves are cheap, and no operation aliases its inputs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, double fill);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Rank-checked element access for 2-d and 3-d tensors.
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double v);

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t shape_product(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// c[i][j] = sum_t a[i][t] * b[t][j], accumulated in increasing t.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise kernels; binary forms require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor map(const Tensor& a, const std::function<double(double)>& fn);

// Full reductions. Ties in argmax resolve to the lowest index.
double sum(const Tensor& a);
double mean(const Tensor& a);
double max_value(const Tensor& a);
std::size_t argmax(const Tensor& a);

// Axis reductions collapse the given axis; the result keeps the other axes.
Tensor sum_axis(const Tensor& a, std::size_t axis);
Tensor mean_axis(const Tensor& a, std::size_t axis);
Tensor max_axis(const Tensor& a, std::size_t axis);
std::vector<std::size_t> argmax_axis(const Tensor& a, std::size_t axis);

}  // namespace hdnn

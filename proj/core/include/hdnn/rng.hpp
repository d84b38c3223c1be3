#pragma once

#include <cstdint>
#include <vector>

#include "hdnn/tensor.hpp"

namespace hdnn {

/// Deterministic counter-based pseudo-random stream (splitmix64). The same
/// seed yields the same u64 sequence on every platform and in every process.
/// A stream is single-owner: never share one across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed), seed_echo_(seed) {}

  std::uint64_t seed() const { return seed_echo_; }
  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 mantissa bits.
  double next_uniform();

  // Box-Muller; always consumes exactly two uniforms per draw.
  double next_normal(double mean, double stddev);

  // Uniform index in [0, n).
  std::size_t next_index(std::size_t n);

  // Uniform in [lo, hi).
  double next_range(double lo, double hi);

  // Independent stream derived from this one; advances this stream once.
  RngStream fork();

  Tensor normal_tensor(const Shape& shape, double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  std::uint64_t seed_echo_;
};

}  // namespace hdnn

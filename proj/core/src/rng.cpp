#include "hdnn/rng.hpp"

#include <cmath>

#include "hdnn/errors.hpp"

namespace hdnn {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal(double mean, double stddev) {
  if (stddev < 0.0) throw ValueError("normal draw requires stddev >= 0");
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  // 1 - u1 lies in (0, 1], keeping the log argument positive.
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return mean + stddev * r * std::cos(kTwoPi * u2);
}

std::size_t RngStream::next_index(std::size_t n) {
  if (n == 0) throw ValueError("next_index requires n >= 1");
  return static_cast<std::size_t>(next_u64() % n);
}

double RngStream::next_range(double lo, double hi) {
  return lo + (hi - lo) * next_uniform();
}

RngStream RngStream::fork() {
  return RngStream(next_u64());
}

Tensor RngStream::normal_tensor(const Shape& shape, double mean, double stddev) {
  if (stddev < 0.0) throw ValueError("normal draw requires stddev >= 0");
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = next_normal(mean, stddev);
  return out;
}

}  // namespace hdnn

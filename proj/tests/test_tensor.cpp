#include <doctest.h>

#include <cmath>

#include "hdnn/errors.hpp"
#include "hdnn/rng.hpp"
#include "hdnn/tensor.hpp"

using namespace hdnn;

TEST_CASE("tensor construction") {
  Tensor t({2, 2}, {1, 2, 3, 4});
  CHECK(t.rank() == 2);
  CHECK(t.at(1, 0) == 3.0);

  CHECK_THROWS_AS(Tensor({3}, {0, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({1}, {std::nan("")}), ValueError);
  CHECK_THROWS_AS(Tensor({2}, {1.0, std::numeric_limits<double>::infinity()}), ValueError);

  Tensor scalar({1}, {96.1});
  CHECK(scalar.size() == 1);
  CHECK(scalar[0] == 96.1);
}

TEST_CASE("matmul hand oracle and algebra") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == 19.0);
  CHECK(c.at(0, 1) == 22.0);
  CHECK(c.at(1, 0) == 43.0);
  CHECK(c.at(1, 1) == 50.0);

  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor ia = matmul(eye, a);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(ia[i] == a[i]);

  Tensor zero({2, 2});
  Tensor za = matmul(zero, a);
  for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == 0.0);

  CHECK_THROWS_AS(matmul(a, Tensor({3, 2})), ShapeError);
}

TEST_CASE("matmul associativity and distributivity on random tensors") {
  RngStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.next_index(4);
    const std::size_t k = 1 + rng.next_index(4);
    const std::size_t n = 1 + rng.next_index(4);
    const std::size_t q = 1 + rng.next_index(4);
    Tensor a = rng.normal_tensor({m, k}, 0.0, 1.0);
    Tensor b = rng.normal_tensor({k, n}, 0.0, 1.0);
    Tensor c = rng.normal_tensor({n, q}, 0.0, 1.0);

    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) {
      CHECK(left[i] == doctest::Approx(right[i]).epsilon(0).scale(1e10));
      CHECK(std::abs(left[i] - right[i]) < 1e-10);
    }

    Tensor b2 = rng.normal_tensor({k, n}, 0.0, 1.0);
    Tensor lhs = matmul(a, add(b, b2));
    Tensor rhs = add(matmul(a, b), matmul(a, b2));
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-10);
  }
}

TEST_CASE("elementwise kernels") {
  Tensor a({2}, {1, 2});
  Tensor b({2}, {3, 4});
  Tensor s = add(a, b);
  CHECK(s[0] == 4.0);
  CHECK(s[1] == 6.0);

  Tensor x({3}, {1.5, -2.0, 7.0});
  Tensor same = scale(x, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(same[i] == x[i]);

  Tensor zero = sub(x, x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(zero[i] == 0.0);

  CHECK_THROWS_AS(add(a, Tensor({3})), ShapeError);
}

TEST_CASE("reductions") {
  CHECK(mean(Tensor({3}, {1, 2, 3})) == 2.0);
  CHECK(max_value(Tensor({4}, 5.0)) == 5.0);
  CHECK(argmax(Tensor({3}, {0, 5, 5})) == 1);  // lowest-index tie break

  // mean over transposed rows equals mean over original columns
  Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor col_means = mean_axis(m, 0);
  Tensor transposed({3, 2}, {1, 4, 2, 5, 3, 6});
  Tensor row_means = mean_axis(transposed, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(col_means[i] == row_means[i]);

  CHECK_THROWS_AS(sum_axis(m, 2), ShapeError);
}

TEST_CASE("rng determinism and bit-identical sequences") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42), d(43);
  CHECK(c.next_u64() != d.next_u64());

  RngStream e(7), f(7);
  Tensor te = e.normal_tensor({16}, 1.0, 2.0);
  Tensor tf = f.normal_tensor({16}, 1.0, 2.0);
  for (std::size_t i = 0; i < te.size(); ++i) CHECK(te[i] == tf[i]);
}

TEST_CASE("rng normal moments") {
  RngStream rng(123);
  const std::size_t n = 100000;
  Tensor samples = rng.normal_tensor({n}, 0.0, 1.0);
  double m = mean(samples);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (samples[i] - m) * (samples[i] - m);
  var /= static_cast<double>(n);
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);

  Tensor constant = rng.normal_tensor({8}, 3.25, 0.0);
  for (std::size_t i = 0; i < constant.size(); ++i) CHECK(constant[i] == 3.25);

  CHECK_THROWS_AS(rng.normal_tensor({2}, 0.0, -1.0), ValueError);
}

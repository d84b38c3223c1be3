#include <doctest.h>

#include <cmath>

#include "hdnn/errors.hpp"
#include "hdnn/losses.hpp"
#include "hdnn/rng.hpp"

using namespace hdnn;

TEST_CASE("mse loss hand oracle") {
  Tensor pred({2}, {1, 2});
  Tensor target({2}, {0, 0});
  LossGrad lg = mse_loss(pred, target);
  CHECK(lg.loss == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(lg.grad[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lg.grad[1] == doctest::Approx(2.0).epsilon(1e-15));

  LossGrad zero = mse_loss(pred, pred);
  CHECK(zero.loss == 0.0);
  CHECK(zero.grad[0] == 0.0);
  CHECK(zero.grad[1] == 0.0);

  CHECK_THROWS_AS(mse_loss(pred, Tensor({3})), ShapeError);
}

TEST_CASE("mse gradient matches central differences") {
  RngStream rng(5);
  Tensor pred = rng.normal_tensor({6}, 0.0, 2.0);
  Tensor target = rng.normal_tensor({6}, 0.0, 2.0);
  LossGrad lg = mse_loss(pred, target);
  const double h = 1e-6;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    Tensor up = pred, down = pred;
    up[i] += h;
    down[i] -= h;
    const double numeric = (mse_loss(up, target).loss - mse_loss(down, target).loss) / (2 * h);
    CHECK(std::abs(numeric - lg.grad[i]) / std::max(1.0, std::abs(numeric)) < 1e-6);
  }
}

TEST_CASE("cross entropy closed forms") {
  // Equal logits over two classes: loss is ln 2 regardless of the true class.
  Tensor logits({1, 2}, {0.3, 0.3});
  CrossEntropyResult r = cross_entropy_loss(logits, {0});
  CHECK(std::abs(r.loss - std::log(2.0)) < 1e-9);
  CHECK(r.grad.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.grad.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  Tensor confident({1, 2}, {30.0, -30.0});
  CHECK(cross_entropy_loss(confident, {0}).loss < 1e-12);

  CHECK_THROWS_AS(cross_entropy_loss(logits, {2}), ValueError);
}

TEST_CASE("cross entropy invariants") {
  RngStream rng(11);
  Tensor logits = rng.normal_tensor({5, 4}, 0.0, 3.0);
  std::vector<std::size_t> labels = {0, 3, 1, 2, 2};
  CrossEntropyResult r = cross_entropy_loss(logits, labels);

  // sum form is exactly M x mean form
  CHECK(r.loss_sum == 5.0 * r.loss);

  // each gradient row sums to zero (softmax row sums to one)
  for (std::size_t j = 0; j < 5; ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < 4; ++k) row += r.grad.at(j, k);
    CHECK(std::abs(row) < 1e-15);
  }

  // shift invariance per row
  Tensor shifted = logits;
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t k = 0; k < 4; ++k) shifted.at(j, k) += 7.25;
  }
  CHECK(std::abs(cross_entropy_loss(shifted, labels).loss - r.loss) < 1e-10);
}

TEST_CASE("adam first steps match hand evaluation") {
  AdamConfig cfg;  // lr 1e-3, betas 0.9/0.999, eps 1e-8
  AdamState state(cfg);
  Tensor w({1}, {0.0});
  Tensor g({1}, {1.0});
  std::vector<ParamRef> params = {{"w", &w, &g}};

  adam_step(params, state);
  CHECK(std::abs(w[0] - (-9.99999995e-4)) < 1e-12);

  adam_step(params, state);
  CHECK(std::abs(w[0] - (-1.99999999e-3)) < 1e-9);
}

TEST_CASE("adam zero gradient and lr zero") {
  AdamState fresh{AdamConfig{}};
  Tensor w({3}, {1.0, -2.0, 0.5});
  Tensor g({3}, 0.0);
  std::vector<ParamRef> params = {{"w", &w, &g}};
  adam_step(params, fresh);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);
  CHECK(w[2] == 0.5);

  AdamConfig frozen;
  frozen.learning_rate = 0.0;
  AdamState state(frozen);
  g = Tensor({3}, {1.0, 2.0, 3.0});
  adam_step(params, state);
  CHECK(w[0] == 1.0);
  CHECK(state.step_count() == 1);
  CHECK(state.first_moments()[0][0] == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("r_squared hand oracles") {
  Tensor up({3}, {1, 2, 3});
  CHECK(r_squared(up, up) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor down({3}, {3, 2, 1});
  CHECK(r_squared(up, down) == doctest::Approx(1.0).epsilon(1e-12));  // sign-blind

  Tensor a({4}, {1, -1, 1, -1});
  Tensor b({4}, {1, 1, -1, -1});
  CHECK(r_squared(a, b) == doctest::Approx(0.0).epsilon(1e-12));

  Tensor flat({3}, 2.0);
  CHECK(r_squared(flat, up) == 0.0);  // zero-variance convention

  CHECK_THROWS_AS(r_squared(Tensor({1}, {1.0}), Tensor({1}, {1.0})), ValueError);
}

TEST_CASE("r_squared affine invariance") {
  RngStream rng(3);
  Tensor pred = rng.normal_tensor({20}, 0.0, 1.0);
  Tensor target = rng.normal_tensor({20}, 0.0, 1.0);
  const double base = r_squared(pred, target);
  for (double a : {2.0, -0.5, 10.0}) {
    Tensor scaled(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i) scaled[i] = a * pred[i] + 3.0;
    CHECK(std::abs(r_squared(scaled, target) - base) < 1e-10);
  }
}

TEST_CASE("mae") {
  Tensor a({2}, {1, 3});
  Tensor b({2}, {0, 0});
  CHECK(mae(a, b) == 2.0);
  CHECK(mae(a, a) == 0.0);
  CHECK(mae(a, b) == mae(b, a));
}

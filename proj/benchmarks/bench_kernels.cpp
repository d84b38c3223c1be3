#include <benchmark/benchmark.h>

#include "hdnn/layers.hpp"
#include "hdnn/losses.hpp"
#include "hdnn/model.hpp"
#include "hdnn/rng.hpp"

using namespace hdnn;

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(1);
  Tensor a = rng.normal_tensor({n, n}, 0.0, 1.0);
  Tensor b = rng.normal_tensor({n, n}, 0.0, 1.0);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

static void BM_Conv1dForward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  RngStream rng(2);
  Conv1d conv(7, 16, 5, 1, 2);
  conv.init_parameters(rng);
  Tensor x = rng.normal_tensor({batch, 7, 64}, 0.0, 1.0);
  for (auto _ : state) {
    Tensor y = conv.forward(x, Mode::Infer);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv1dForward)->Arg(1)->Arg(16);

static void BM_Conv1dBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  RngStream rng(3);
  Conv1d conv(7, 16, 5, 1, 2);
  conv.init_parameters(rng);
  Tensor x = rng.normal_tensor({batch, 7, 64}, 0.0, 1.0);
  Tensor dy = rng.normal_tensor({batch, 16, 64}, 0.0, 1.0);
  for (auto _ : state) {
    conv.forward(x, Mode::Train);
    Tensor dx = conv.backward(dy);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_Conv1dBackward)->Arg(1)->Arg(16);

static void BM_TrainStep(benchmark::State& state) {
  RngStream rng(4);
  HybridModel model(stock_hdnn_config(11, 7, 64, 1));
  AdamState adam{AdamConfig{}};
  const std::size_t batch = 16;
  std::map<std::string, Tensor> inputs = {
      {"num", rng.normal_tensor({batch, 11}, 0.0, 1.0)},
      {"seq", rng.normal_tensor({batch, 7, 64}, 0.0, 1.0)}};
  Tensor target = rng.normal_tensor({batch, 1}, 0.0, 1.0);
  for (auto _ : state) {
    Tensor pred = model.forward(inputs, Mode::Train);
    LossGrad lg = mse_loss(pred, target);
    model.backward(lg.grad);
    adam_step(model.parameters(), adam);
    benchmark::DoNotOptimize(lg.loss);
  }
}
BENCHMARK(BM_TrainStep);

BENCHMARK_MAIN();

#include "hdnn/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "hdnn/errors.hpp"
#include "hdnn/layers.hpp"
#include "hdnn/losses.hpp"
#include "hdnn/model.hpp"
#include "hdnn/rng.hpp"

namespace hdnn {

namespace {

constexpr double kStepSize = 1e-5;
constexpr double kKinkThreshold = 1e-3;
constexpr int kMaxRedraws = 50;

double relative_error(double analytic, double numeric) {
  const double scale = std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / scale;
}

// One finite-difference problem: a scalar loss closure plus the coordinates
// (value slots) to perturb with their analytic gradients.
struct FdProblem {
  std::function<double()> loss;
  std::vector<double*> slots;
  std::vector<double> analytic;
};

double max_fd_error(FdProblem& problem, double tamper_delta) {
  double worst = 0.0;
  for (std::size_t i = 0; i < problem.slots.size(); ++i) {
    double* slot = problem.slots[i];
    const double original = *slot;
    *slot = original + kStepSize;
    const double up = problem.loss();
    *slot = original - kStepSize;
    const double down = problem.loss();
    *slot = original;
    const double numeric = (up - down) / (2.0 * kStepSize);
    worst = std::max(worst, relative_error(problem.analytic[i] + tamper_delta, numeric));
  }
  return worst;
}

void register_tensor(FdProblem& problem, Tensor& values, const Tensor& grads) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    problem.slots.push_back(&values[i]);
    problem.analytic.push_back(grads[i]);
  }
}

// Weighted-sum loss over a layer output makes the check sensitive to every
// output coordinate at once.
double weighted_sum(const Tensor& y, const Tensor& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * w[i];
  return acc;
}

struct Suite {
  RngStream rng;
  double tolerance;
  const GradcheckTamper& tamper;
  GradcheckReport report;

  Suite(std::uint64_t seed, double tolerance, const GradcheckTamper& tamper)
      : rng(seed), tolerance(tolerance), tamper(tamper) {}

  void run_case(const std::string& name, const std::function<FdProblem(RngStream&)>& build) {
    RngStream case_rng = rng.fork();
    FdProblem problem = build(case_rng);
    const double delta = (tamper.case_name == name) ? tamper.delta : 0.0;
    const double err = max_fd_error(problem, delta);
    report.cases.push_back({name, err, err < tolerance});
  }
};

Tensor random_tensor(RngStream& rng, const Shape& shape, double stddev = 1.0) {
  return rng.normal_tensor(shape, 0.0, stddev);
}

// Redraw helper for kinked layers: retry fn() until the layer's last forward
// kept a safe margin from every kink.
template <typename BuildFn>
FdProblem build_away_from_kinks(RngStream& rng, Layer& layer, BuildFn fn) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    FdProblem problem = fn(rng);
    problem.loss();  // prime the layer cache so kink_margin is meaningful
    if (layer.kink_margin() >= kKinkThreshold) return problem;
  }
  throw Error("gradcheck: could not find a kink-free check point");
}

}  // namespace

bool GradcheckReport::all_pass() const {
  for (const GradcheckCase& c : cases) {
    if (!c.pass) return false;
  }
  return !cases.empty();
}

std::string GradcheckReport::to_string() const {
  std::string out;
  char line[160];
  for (const GradcheckCase& c : cases) {
    std::snprintf(line, sizeof(line), "%-18s max_rel_err=%.3e  %s\n", c.name.c_str(),
                  c.max_rel_error, c.pass ? "PASS" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof(line), "gradcheck: %s (tolerance %.1e)\n",
                all_pass() ? "all cases pass" : "FAILURES PRESENT", tolerance);
  out += line;
  return out;
}

GradcheckReport gradcheck_suite(std::uint64_t seed, double tolerance,
                                const GradcheckTamper& tamper) {
  Suite suite(seed, tolerance, tamper);

  suite.run_case("dense", [](RngStream& rng) {
    auto layer = std::make_shared<Dense>(3, 5);
    layer->init_parameters(rng);
    auto x = std::make_shared<Tensor>(random_tensor(rng, {4, 3}));
    auto w = std::make_shared<Tensor>(random_tensor(rng, {4, 5}));

    FdProblem p;
    p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
    p.loss();
    Tensor dx = layer->backward(*w);
    register_tensor(p, *x, dx);
    register_tensor(p, layer->weight, layer->grad_weight);
    register_tensor(p, layer->bias, layer->grad_bias);
    return p;
  });

  auto conv_case = [](std::size_t stride, std::size_t padding, std::size_t length) {
    return [stride, padding, length](RngStream& rng) {
      auto layer = std::make_shared<Conv1d>(3, 4, 3, stride, padding);
      layer->init_parameters(rng);
      auto x = std::make_shared<Tensor>(random_tensor(rng, {2, 3, length}));
      const std::size_t out_len = Conv1d::output_length(length, 3, stride, padding);
      auto w = std::make_shared<Tensor>(random_tensor(rng, {2, 4, out_len}));

      FdProblem p;
      p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
      p.loss();
      Tensor dx = layer->backward(*w);
      register_tensor(p, *x, dx);
      register_tensor(p, layer->kernel, layer->grad_kernel);
      register_tensor(p, layer->bias, layer->grad_bias);
      return p;
    };
  };
  suite.run_case("conv1d", conv_case(1, 1, 8));
  suite.run_case("conv1d_strided", conv_case(2, 0, 9));

  suite.run_case("relu", [](RngStream& rng) {
    auto layer = std::make_shared<Relu>();
    return build_away_from_kinks(rng, *layer, [layer](RngStream& r) {
      auto x = std::make_shared<Tensor>(random_tensor(r, {3, 6}));
      auto w = std::make_shared<Tensor>(random_tensor(r, {3, 6}));
      FdProblem p;
      p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
      p.loss();
      Tensor dx = layer->backward(*w);
      register_tensor(p, *x, dx);
      return p;
    });
  });

  auto bn_case = [](Shape shape) {
    return [shape](RngStream& rng) {
      auto layer = std::make_shared<BatchNorm>(shape[1]);
      Tensor g = random_tensor(rng, {shape[1]}, 0.3);
      for (std::size_t i = 0; i < g.size(); ++i) layer->gamma[i] = 1.0 + g[i];
      layer->beta = random_tensor(rng, {shape[1]}, 0.3);
      auto x = std::make_shared<Tensor>(random_tensor(rng, shape));
      auto w = std::make_shared<Tensor>(random_tensor(rng, shape));

      FdProblem p;
      p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
      p.loss();
      Tensor dx = layer->backward(*w);
      register_tensor(p, *x, dx);
      register_tensor(p, layer->gamma, layer->grad_gamma);
      register_tensor(p, layer->beta, layer->grad_beta);
      return p;
    };
  };
  suite.run_case("batch_norm", bn_case({6, 4}));
  suite.run_case("batch_norm_seq", bn_case({3, 4, 5}));

  suite.run_case("dropout", [](RngStream& rng) {
    auto layer = std::make_shared<Dropout>(0.4);
    auto x = std::make_shared<Tensor>(random_tensor(rng, {4, 6}));
    auto w = std::make_shared<Tensor>(random_tensor(rng, {4, 6}));
    const std::uint64_t mask_seed = rng.next_u64();

    FdProblem p;
    // Re-seeding per evaluation freezes the mask, so the loss is smooth.
    p.loss = [layer, x, w, mask_seed] {
      RngStream mask_rng(mask_seed);
      return weighted_sum(layer->forward(*x, Mode::Train, &mask_rng), *w);
    };
    p.loss();
    Tensor dx = layer->backward(*w);
    register_tensor(p, *x, dx);
    return p;
  });

  suite.run_case("max_pool1d", [](RngStream& rng) {
    auto layer = std::make_shared<MaxPool1d>(3, 2);
    return build_away_from_kinks(rng, *layer, [layer](RngStream& r) {
      auto x = std::make_shared<Tensor>(random_tensor(r, {2, 3, 9}));
      auto w = std::make_shared<Tensor>(
          random_tensor(r, {2, 3, MaxPool1d::output_length(9, 3, 2)}));
      FdProblem p;
      p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
      p.loss();
      Tensor dx = layer->backward(*w);
      register_tensor(p, *x, dx);
      return p;
    });
  });

  suite.run_case("global_avg_pool", [](RngStream& rng) {
    auto layer = std::make_shared<GlobalAvgPool>();
    auto x = std::make_shared<Tensor>(random_tensor(rng, {2, 4, 6}));
    auto w = std::make_shared<Tensor>(random_tensor(rng, {2, 4}));
    FdProblem p;
    p.loss = [layer, x, w] { return weighted_sum(layer->forward(*x, Mode::Train), *w); };
    p.loss();
    Tensor dx = layer->backward(*w);
    register_tensor(p, *x, dx);
    return p;
  });

  suite.run_case("concat_split", [](RngStream& rng) {
    auto a = std::make_shared<Tensor>(random_tensor(rng, {3, 2}));
    auto b = std::make_shared<Tensor>(random_tensor(rng, {3, 4}));
    auto w = std::make_shared<Tensor>(random_tensor(rng, {3, 6}));
    FdProblem p;
    p.loss = [a, b, w] { return weighted_sum(concat_features({*a, *b}), *w); };
    std::vector<Tensor> parts = split_features(*w, {2, 4});
    register_tensor(p, *a, parts[0]);
    register_tensor(p, *b, parts[1]);
    return p;
  });

  suite.run_case("full_model", [](RngStream& rng) {
    // Small two-branch model, every layer family represented, < 500 params.
    ModelConfig config;
    config.seed = rng.next_u64();
    BranchSpec num;
    num.name = "num";
    num.kind = BranchKind::NumericMLP;
    num.input_features = 5;
    num.layers = {DenseSpec{8}, ReluSpec{}};
    BranchSpec seq;
    seq.name = "seq";
    seq.kind = BranchKind::SequenceCNN;
    seq.input_channels = 2;
    seq.input_length = 12;
    seq.layers = {Conv1dSpec{3, 3, 1, std::nullopt}, BatchNormSpec{}, ReluSpec{},
                  MaxPool1dSpec{2, 2}, GlobalAvgPoolSpec{}};
    config.branches = {num, seq};
    config.head.layers = {DenseSpec{6}, ReluSpec{}, DenseSpec{1}};
    config.head.output_width = 1;

    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      config.seed = rng.next_u64();
      auto model = std::make_shared<HybridModel>(config);
      auto num_x = std::make_shared<Tensor>(random_tensor(rng, {6, 5}));
      auto seq_x = std::make_shared<Tensor>(random_tensor(rng, {6, 2, 12}));
      auto target = std::make_shared<Tensor>(random_tensor(rng, {6, 1}));

      FdProblem p;
      p.loss = [model, num_x, seq_x, target] {
        const Tensor pred = model->forward({{"num", *num_x}, {"seq", *seq_x}}, Mode::Train);
        return mse_loss(pred, *target).loss;
      };
      p.loss();
      if (model->min_kink_margin() < kKinkThreshold) continue;

      const Tensor pred = model->forward({{"num", *num_x}, {"seq", *seq_x}}, Mode::Train);
      LossGrad lg = mse_loss(pred, *target);
      model->backward(lg.grad);
      for (const ParamRef& param : model->parameters()) {
        register_tensor(p, *param.value, *param.grad);
      }
      return p;
    }
    throw Error("gradcheck: full_model could not find a kink-free check point");
  });

  suite.report.tolerance = tolerance;
  return suite.report;
}

}  // namespace hdnn

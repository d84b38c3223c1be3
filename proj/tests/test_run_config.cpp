#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hdnn/errors.hpp"
#include "hdnn/run_config.hpp"

using namespace hdnn;

namespace {

std::string write_config(const char* name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path.string();
}

MixedDataset tiny_dataset(std::size_t numeric_width, std::size_t length) {
  MixedDataset ds;
  ds.numeric = Tensor({3, numeric_width}, 1.0);
  ds.curves = Tensor({3, kCurveChannelCount, length}, 0.5);
  ds.keys = {{"W1", "F1"}, {"W1", "F2"}, {"W2", "F1"}};
  return ds;
}

}  // namespace

TEST_CASE("empty config file selects every default") {
  const std::string path = write_config("hdnn_cfg_empty.json", "");
  const RunConfig config = parse_run_config(path);
  CHECK(config.preset == "hdnn");
  CHECK(config.train.epochs == 200);
  CHECK(config.train.batch_size == 16);
  CHECK(config.train.learning_rate == 1e-3);
  CHECK(config.train.validation_fraction == 0.2);
  CHECK(config.train.patience == 30);
  CHECK(config.pipeline.resample_length == 64);
  CHECK(!config.pipeline.append_curve_means);

  const MixedDataset ds = tiny_dataset(4, 64);
  const ModelConfig model = resolve_model_config(config, ds);
  CHECK(model.branches.size() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("mlp preset expects the 11 baseline attributes") {
  const std::string path = write_config("hdnn_cfg_mlp.json", R"({"preset": "mlp"})");
  const RunConfig config = parse_run_config(path);
  CHECK(config.preset == "mlp");
  CHECK(config.pipeline.append_curve_means);

  // 4 base attributes + 7 channel means
  const MixedDataset ds = tiny_dataset(11, 64);
  const ModelConfig model = resolve_model_config(config, ds);
  REQUIRE(model.branches.size() == 1);
  CHECK(model.branches[0].kind == BranchKind::NumericMLP);
  CHECK(model.branches[0].input_features == 11);
  std::filesystem::remove(path);
}

TEST_CASE("cnn preset uses the sequence branch only") {
  const std::string path = write_config("hdnn_cfg_cnn.json", R"({"preset": "cnn"})");
  const RunConfig config = parse_run_config(path);
  const MixedDataset ds = tiny_dataset(4, 48);
  const ModelConfig model = resolve_model_config(config, ds);
  REQUIRE(model.branches.size() == 1);
  CHECK(model.branches[0].kind == BranchKind::SequenceCNN);
  CHECK(model.branches[0].input_length == 48);
  std::filesystem::remove(path);
}

TEST_CASE("unknown keys are rejected by name") {
  const std::string path = write_config("hdnn_cfg_bad.json", R"({"presett": "hdnn"})");
  try {
    parse_run_config(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("presett") != std::string::npos);
  }
  std::filesystem::remove(path);

  const std::string nested =
      write_config("hdnn_cfg_bad2.json", R"({"train": {"epoch": 10}})");
  CHECK_THROWS_AS(parse_run_config(nested), ParseError);
  std::filesystem::remove(nested);
}

TEST_CASE("preset conflicts with an explicit model") {
  const std::string path = write_config("hdnn_cfg_conflict.json", R"({
    "preset": "hdnn",
    "branches": [],
    "head": {"layers": [], "output_width": 1}
  })");
  CHECK_THROWS_AS(parse_run_config(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("explicit model config parses") {
  const std::string path = write_config("hdnn_cfg_explicit.json", R"({
    "branches": [
      {"name": "num", "kind": "numeric_mlp", "input_features": 4,
       "layers": [{"type": "dense", "units": 8}, {"type": "relu"}]}
    ],
    "head": {"task": "regression", "output_width": 1,
             "layers": [{"type": "dense", "units": 1}]},
    "train": {"epochs": 12, "batch_size": 4, "learning_rate": 0.01, "patience": null},
    "resample_length": 32,
    "seed": 5
  })");
  const RunConfig config = parse_run_config(path);
  CHECK(config.preset.empty());
  REQUIRE(config.explicit_model.has_value());
  CHECK(config.explicit_model->branches.size() == 1);
  CHECK(config.train.epochs == 12);
  CHECK(!config.train.patience.has_value());
  CHECK(config.pipeline.resample_length == 32);
  CHECK(config.model_seed == 5);

  const MixedDataset ds = tiny_dataset(4, 32);
  const ModelConfig model = resolve_model_config(config, ds);
  CHECK(model.seed == 5);
  CHECK(model.branches[0].input_features == 4);
  std::filesystem::remove(path);
}

TEST_CASE("invalid values are rejected") {
  const std::string bad_preset = write_config("hdnn_cfg_preset.json", R"({"preset": "vgg"})");
  CHECK_THROWS_AS(parse_run_config(bad_preset), ParseError);
  std::filesystem::remove(bad_preset);

  const std::string bad_len = write_config("hdnn_cfg_len.json", R"({"resample_length": 1})");
  CHECK_THROWS_AS(parse_run_config(bad_len), ParseError);
  std::filesystem::remove(bad_len);

  const std::string bad_frac =
      write_config("hdnn_cfg_frac.json", R"({"train": {"validation_fraction": 1.0}})");
  CHECK_THROWS_AS(parse_run_config(bad_frac), ParseError);
  std::filesystem::remove(bad_frac);

  CHECK_THROWS_AS(parse_run_config("/nonexistent/config.json"), IoError);
}

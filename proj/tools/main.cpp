// Command-line front end: synthetic data generation, training, evaluation,
// prediction, and the gradient-check suite.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hdnn/checkpoint.hpp"
#include "hdnn/data.hpp"
#include "hdnn/errors.hpp"
#include "hdnn/gradcheck.hpp"
#include "hdnn/model.hpp"
#include "hdnn/run_config.hpp"
#include "hdnn/synth.hpp"
#include "hdnn/trainer.hpp"

namespace {

// The dataset is assembled with the pipeline options the model was trained
// with; the mlp preset folds curve means into the numeric block.
hdnn::MixedDataset load_and_build(const std::string& data_dir, const hdnn::DatasetOptions& opts) {
  const hdnn::RawWellData raw = hdnn::load_dataset(data_dir);
  return hdnn::build_dataset(raw, opts);
}

hdnn::DatasetOptions options_for_model(const hdnn::LoadedCheckpoint& loaded) {
  if (loaded.dataset_options.has_value()) return *loaded.dataset_options;
  hdnn::DatasetOptions opts;
  for (const auto& branch : loaded.model.config().branches) {
    if (branch.kind == hdnn::BranchKind::SequenceCNN) {
      opts.resample_length = branch.input_length;
    }
  }
  return opts;
}

int run_synth(std::size_t wells, std::uint64_t seed, const std::string& out_dir, bool unlabeled) {
  std::filesystem::create_directories(out_dir);
  hdnn::SynthConfig config;
  config.wells = wells;
  config.seed = seed;
  config.emit_labels = !unlabeled;
  hdnn::synth_generate(config, out_dir);
  std::cout << "wrote " << out_dir << "/attributes.csv and " << out_dir << "/curves.csv\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> epochs, std::optional<std::size_t> batch,
              std::optional<double> lr) {
  hdnn::RunConfig config = hdnn::parse_run_config(config_path);
  if (seed) {
    config.model_seed = *seed;
    config.train.seed = *seed;
  }
  if (epochs) config.train.epochs = *epochs;
  if (batch) config.train.batch_size = *batch;
  if (lr) config.train.learning_rate = *lr;

  const hdnn::MixedDataset dataset = load_and_build(data_dir, config.pipeline);
  hdnn::HybridModel model(hdnn::resolve_model_config(config, dataset));
  hdnn::TrainResult result = hdnn::train(model, dataset, config.train);

  hdnn::save_checkpoint(out_path, model, &result.optimizer, &config.pipeline);
  const std::filesystem::path history_path =
      std::filesystem::path(out_path).parent_path() / "history.csv";
  hdnn::write_history_csv(history_path.string(), result.history);

  std::cout << "trained " << result.history.records.size() << " epochs, wrote " << out_path
            << " and " << history_path.string() << "\n";
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& data_dir) {
  hdnn::LoadedCheckpoint loaded = hdnn::load_checkpoint(model_path);
  const hdnn::MixedDataset dataset = load_and_build(data_dir, options_for_model(loaded));
  const hdnn::Metrics metrics = hdnn::evaluate(loaded.model, dataset);
  std::printf("mse=%.8e mae=%.8e r2=%.8e n=%zu\n", metrics.mse, metrics.mae, metrics.r_squared,
              metrics.count);
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_dir,
                const std::string& out_path) {
  hdnn::LoadedCheckpoint loaded = hdnn::load_checkpoint(model_path);
  const hdnn::MixedDataset dataset = load_and_build(data_dir, options_for_model(loaded));
  const hdnn::PredictionSet predictions = hdnn::predict(loaded.model, dataset);
  hdnn::write_predictions_csv(out_path, predictions);
  std::cout << "wrote " << predictions.rows.size() << " predictions to " << out_path << "\n";
  return 0;
}

int run_gradcheck(std::uint64_t seed) {
  const hdnn::GradcheckReport report = hdnn::gradcheck_suite(seed);
  std::cout << report.to_string();
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid mixed-input deep network for reservoir production prediction"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic well block");
  std::size_t wells = 180;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  bool unlabeled = false;
  synth->add_option("--wells", wells, "Number of wells");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_flag("--unlabeled", unlabeled, "Omit the production column (prediction set)");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a data directory");
  std::string train_config, train_data, train_out;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::size_t> train_epochs, train_batch;
  std::optional<double> train_lr;
  train->add_option("--config", train_config, "Run-config JSON file")->required();
  train->add_option("--data", train_data, "Directory with attributes.csv and curves.csv")
      ->required();
  train->add_option("--out", train_out, "Checkpoint output path")->required();
  train->add_option("--seed", train_seed, "Override model and training seed");
  train->add_option("--epochs", train_epochs, "Override epoch count");
  train->add_option("--batch", train_batch, "Override batch size");
  train->add_option("--lr", train_lr, "Override learning rate");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on labeled data");
  std::string eval_model, eval_data;
  evaluate->add_option("--model", eval_model, "Checkpoint path")->required();
  evaluate->add_option("--data", eval_data, "Directory with labeled data")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Write per-instance predictions");
  std::string pred_model, pred_data, pred_out;
  predict->add_option("--model", pred_model, "Checkpoint path")->required();
  predict->add_option("--data", pred_data, "Directory with prediction data")->required();
  predict->add_option("--out", pred_out, "Predictions CSV output path")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference gradient checks");
  std::uint64_t gradcheck_seed = 0;
  gradcheck->add_option("--seed", gradcheck_seed, "Check seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return run_synth(wells, synth_seed, synth_out, unlabeled);
    if (*train) {
      return run_train(train_config, train_data, train_out, train_seed, train_epochs, train_batch,
                       train_lr);
    }
    if (*evaluate) return run_evaluate(eval_model, eval_data);
    if (*predict) return run_predict(pred_model, pred_data, pred_out);
    if (*gradcheck) return run_gradcheck(gradcheck_seed);
  } catch (const hdnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

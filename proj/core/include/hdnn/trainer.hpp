#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdnn/data.hpp"
#include "hdnn/losses.hpp"
#include "hdnn/model.hpp"

namespace hdnn {

struct TrainSpec {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double validation_fraction = 0.2;          // carved out of the given dataset
  std::optional<std::size_t> patience = 30;  // early stopping on validation loss
  std::uint64_t seed = 0;
};

struct EpochRecord {
  double train_loss = 0.0;  // mean over the epoch's mini-batches, normalized label space
  double val_loss = 0.0;    // NaN when no validation split exists
  double val_mae = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
};

struct TrainResult {
  TrainHistory history;
  AdamState optimizer;
};

/// Mini-batch Adam/MSE training. Fits the normalizer on the non-validation
/// portion and attaches it to the model, reshuffles every epoch from the
/// seeded stream, uses the final partial batch (a trailing singleton is
/// merged into the previous batch), and - when early stopping is enabled and
/// a validation split exists - restores the best-validation-loss parameters
/// at the end. Identical seeds and data give bit-identical results.
TrainResult train(HybridModel& model, const MixedDataset& dataset, const TrainSpec& spec);

/// Infer-mode metrics in label units (predictions are inverse-transformed
/// through the model's normalizer before scoring).
Metrics evaluate(HybridModel& model, const MixedDataset& dataset);

struct PredictionRow {
  std::string well_id;
  std::string formation_id;
  double predicted_t_per_d = 0.0;
  std::optional<double> measured_t_per_d;
};

struct PredictionSet {
  std::vector<PredictionRow> rows;
};

/// One prediction per instance in input order, in label units. Deterministic:
/// Infer mode, dropout inactive.
PredictionSet predict(HybridModel& model, const MixedDataset& dataset);

/// CSV round trip for prediction sets. Numbers are written in shortest
/// round-trip form, so read(write(p)) reproduces every value bit-exactly.
void write_predictions_csv(const std::string& path, const PredictionSet& predictions);
PredictionSet read_predictions_csv(const std::string& path);

void write_history_csv(const std::string& path, const TrainHistory& history);

}  // namespace hdnn

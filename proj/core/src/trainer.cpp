#include "hdnn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hdnn/errors.hpp"
#include "hdnn/rng.hpp"

namespace hdnn {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Per-branch input map for the given instances (already normalized).
std::map<std::string, Tensor> assemble_inputs(HybridModel& model, const MixedDataset& dataset,
                                              const std::vector<std::size_t>& rows) {
  std::map<std::string, Tensor> inputs;
  for (const std::string& name : model.branch_names()) {
    if (model.branch_kind(name) == BranchKind::NumericMLP) {
      const std::size_t d = dataset.numeric_width();
      Tensor x({rows.size(), d});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < d; ++i) x.at(r, i) = dataset.numeric.at(rows[r], i);
      }
      inputs.emplace(name, std::move(x));
    } else {
      const std::size_t channels = dataset.curves.dim(1);
      const std::size_t length = dataset.curve_length();
      Tensor x({rows.size(), channels, length});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t t = 0; t < length; ++t) x.at(r, c, t) = dataset.curves.at(rows[r], c, t);
        }
      }
      inputs.emplace(name, std::move(x));
    }
  }
  return inputs;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

// Normalized-space predictions for a raw (unnormalized) dataset.
Tensor infer_normalized(HybridModel& model, const MixedDataset& dataset) {
  if (!model.normalizer.has_value()) {
    throw Error("model has no fitted normalizer; train it or load a trained checkpoint");
  }
  MixedDataset inputs_only = dataset;
  inputs_only.has_labels = false;  // normalize inputs, leave labels untouched
  inputs_only.labels.clear();
  const MixedDataset normalized = apply_normalizer(*model.normalizer, inputs_only);
  return model.forward(assemble_inputs(model, normalized, all_rows(normalized.size())),
                       Mode::Infer);
}

}  // namespace

TrainResult train(HybridModel& model, const MixedDataset& dataset, const TrainSpec& spec) {
  if (!dataset.has_labels) throw ValueError("train: dataset has no labels");
  if (spec.batch_size == 0) throw ValueError("train: batch size must be >= 1");
  if (spec.validation_fraction < 0.0 || spec.validation_fraction >= 1.0) {
    throw ValueError("train: validation fraction must lie in [0, 1)");
  }

  RngStream seeder(spec.seed);
  const std::uint64_t split_seed = seeder.next_u64();
  const std::uint64_t dropout_seed = seeder.next_u64();
  const std::uint64_t shuffle_seed = seeder.next_u64();

  MixedDataset train_part = dataset;
  MixedDataset val_part;
  if (spec.validation_fraction > 0.0) {
    auto [tr, va] = split_dataset(dataset, 1.0 - spec.validation_fraction, split_seed);
    train_part = std::move(tr);
    val_part = std::move(va);
  }
  if (train_part.size() == 0) throw ValueError("train: empty training split");

  const Normalizer normalizer = fit_normalizer(train_part);
  model.normalizer = normalizer;
  const MixedDataset train_norm = apply_normalizer(normalizer, train_part);
  const MixedDataset val_norm =
      val_part.size() > 0 ? apply_normalizer(normalizer, val_part) : MixedDataset{};

  model.reseed_dropout(dropout_seed);
  RngStream shuffle_rng(shuffle_seed);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = spec.learning_rate;
  TrainResult result{TrainHistory{}, AdamState(adam_cfg)};

  const bool early_stopping = spec.patience.has_value() && val_norm.size() > 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_state;
  std::size_t epochs_since_best = 0;

  const std::size_t m = train_norm.size();
  Tensor train_labels({std::max<std::size_t>(m, 1), 1});
  for (std::size_t i = 0; i < m; ++i) train_labels.at(i, 0) = train_norm.labels[i];

  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::vector<std::size_t> order = all_rows(m);
    shuffle_rng.shuffle(order);

    // Chunk into batches; a trailing singleton joins the previous batch so
    // batch normalization always sees at least two samples.
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < m; start += spec.batch_size) {
      const std::size_t end = std::min(start + spec.batch_size, m);
      batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
      batches[batches.size() - 2].push_back(batches.back().front());
      batches.pop_back();
    }

    double epoch_loss = 0.0;
    for (const auto& batch : batches) {
      Tensor pred = model.forward(assemble_inputs(model, train_norm, batch), Mode::Train);
      Tensor target({batch.size(), 1});
      for (std::size_t i = 0; i < batch.size(); ++i) {
        target.at(i, 0) = train_norm.labels[batch[i]];
      }
      LossGrad lg = mse_loss(pred, target);
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      model.backward(lg.grad);
      adam_step(model.parameters(), result.optimizer);
    }
    epoch_loss /= static_cast<double>(m);

    EpochRecord record;
    record.train_loss = epoch_loss;
    if (val_norm.size() > 0) {
      Tensor val_pred =
          model.forward(assemble_inputs(model, val_norm, all_rows(val_norm.size())), Mode::Infer);
      Tensor val_target({val_norm.size(), 1});
      for (std::size_t i = 0; i < val_norm.size(); ++i) val_target.at(i, 0) = val_norm.labels[i];
      record.val_loss = mse_loss(val_pred, val_target).loss;
      record.val_mae = mae(val_pred, val_target);
    } else {
      record.val_loss = std::numeric_limits<double>::quiet_NaN();
      record.val_mae = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.records.push_back(record);

    if (early_stopping) {
      if (record.val_loss < best_val) {
        best_val = record.val_loss;
        best_state = model.state_snapshot();
        epochs_since_best = 0;
      } else if (++epochs_since_best > *spec.patience) {
        break;
      }
    }
  }

  if (early_stopping && !best_state.empty()) {
    model.restore_state(best_state);
  }
  return result;
}

Metrics evaluate(HybridModel& model, const MixedDataset& dataset) {
  if (!dataset.has_labels) throw ValueError("evaluate: dataset has no labels");
  const Tensor pred_norm = infer_normalized(model, dataset);
  std::vector<double> pred(pred_norm.size());
  for (std::size_t i = 0; i < pred_norm.size(); ++i) pred[i] = pred_norm[i];
  const std::vector<double> pred_units = inverse_labels(*model.normalizer, pred);

  Tensor p({dataset.size()});
  Tensor t({dataset.size()});
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    p[i] = pred_units[i];
    t[i] = dataset.labels[i];
  }
  return compute_metrics(p, t);
}

PredictionSet predict(HybridModel& model, const MixedDataset& dataset) {
  const Tensor pred_norm = infer_normalized(model, dataset);
  std::vector<double> pred(pred_norm.size());
  for (std::size_t i = 0; i < pred_norm.size(); ++i) pred[i] = pred_norm[i];
  const std::vector<double> pred_units = inverse_labels(*model.normalizer, pred);

  PredictionSet out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    PredictionRow row;
    row.well_id = dataset.keys[i].well_id;
    row.formation_id = dataset.keys[i].formation_id;
    row.predicted_t_per_d = pred_units[i];
    if (dataset.has_labels) row.measured_t_per_d = dataset.labels[i];
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_predictions_csv(const std::string& path, const PredictionSet& predictions) {
  const bool with_measured =
      !predictions.rows.empty() && predictions.rows.front().measured_t_per_d.has_value();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write predictions: " + path);
  out << "well_id,formation_id,predicted_production_t_per_d";
  if (with_measured) out << ",measured_production_t_per_d";
  out << "\n";
  for (const PredictionRow& row : predictions.rows) {
    out << row.well_id << ',' << row.formation_id << ',' << format_double(row.predicted_t_per_d);
    if (with_measured) out << ',' << format_double(*row.measured_t_per_d);
    out << "\n";
  }
  if (!out) throw IoError("prediction write failed: " + path);
}

PredictionSet read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool with_measured;
  if (line == "well_id,formation_id,predicted_production_t_per_d") {
    with_measured = false;
  } else if (line ==
             "well_id,formation_id,predicted_production_t_per_d,measured_production_t_per_d") {
    with_measured = true;
  } else {
    throw ParseError(path, 1, "unexpected header");
  }

  PredictionSet out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string well, formation, pred, measured;
    std::getline(is, well, ',');
    std::getline(is, formation, ',');
    std::getline(is, pred, ',');
    if (with_measured) std::getline(is, measured, ',');
    PredictionRow row;
    row.well_id = well;
    row.formation_id = formation;
    try {
      row.predicted_t_per_d = std::stod(pred);
      if (with_measured) row.measured_t_per_d = std::stod(measured);
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "expected numeric prediction fields");
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write history: " + path);
  out << "epoch,train_loss,val_loss,val_mae\n";
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    const EpochRecord& r = history.records[i];
    out << (i + 1) << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
        << format_double(r.val_mae) << "\n";
  }
  if (!out) throw IoError("history write failed: " + path);
}

}  // namespace hdnn

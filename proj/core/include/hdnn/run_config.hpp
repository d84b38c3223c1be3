#pragma once

#include <optional>
#include <string>

#include "hdnn/data.hpp"
#include "hdnn/model.hpp"
#include "hdnn/trainer.hpp"

namespace hdnn {

/// Declarative run configuration (JSON file). Three stock presets are
/// selectable by name: "hdnn" (numeric + sequence branches), "cnn" (sequence
/// branch only), and "mlp" (numeric branch fed the 4 base attributes plus the
/// 7 per-channel curve means). An explicit branches/head section replaces the
/// preset; giving both is an error. An empty file means all defaults (preset
/// "hdnn"). Unknown keys anywhere are rejected.
struct RunConfig {
  std::string preset = "hdnn";
  std::optional<ModelConfig> explicit_model;
  TrainSpec train;
  DatasetOptions pipeline;
  std::uint64_t model_seed = 0;
};

RunConfig parse_run_config(const std::string& path);

/// Binds a run configuration to a concrete dataset: presets get their input
/// widths from the data (numeric width, channel count, curve length);
/// explicit models are validated against it.
ModelConfig resolve_model_config(const RunConfig& config, const MixedDataset& dataset);

}  // namespace hdnn

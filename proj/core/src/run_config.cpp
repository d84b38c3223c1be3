#include "hdnn/run_config.hpp"

#include <fstream>
#include <sstream>

#include "config_json.hpp"
#include "hdnn/errors.hpp"

namespace hdnn {

namespace {

using detail::check_keys;
using detail::json;

TrainSpec train_spec_from_json(const json& j, const std::string& where) {
  check_keys(j,
             {"epochs", "batch_size", "learning_rate", "validation_fraction", "patience", "seed"},
             where);
  TrainSpec spec;
  if (j.contains("epochs")) spec.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("batch_size")) spec.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("learning_rate")) spec.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("validation_fraction")) {
    spec.validation_fraction = j["validation_fraction"].get<double>();
  }
  if (j.contains("patience")) {
    if (j["patience"].is_null()) {
      spec.patience = std::nullopt;
    } else {
      spec.patience = j["patience"].get<std::size_t>();
    }
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (spec.batch_size == 0) throw ParseError(where + ": batch_size must be >= 1");
  if (spec.validation_fraction < 0.0 || spec.validation_fraction >= 1.0) {
    throw ParseError(where + ": validation_fraction must lie in [0, 1)");
  }
  return spec;
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  RunConfig config;

  // An empty (or whitespace-only) file selects every default.
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return config;

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
  check_keys(j, {"preset", "branches", "head", "train", "resample_length", "seed"}, path);

  const bool has_explicit = j.contains("branches") || j.contains("head");
  if (j.contains("preset")) {
    if (has_explicit) {
      throw ParseError(path + ": \"preset\" conflicts with an explicit branches/head section");
    }
    config.preset = j["preset"].get<std::string>();
    if (config.preset != "hdnn" && config.preset != "cnn" && config.preset != "mlp") {
      throw ParseError(path + ": unknown preset \"" + config.preset +
                       "\" (expected hdnn, cnn, or mlp)");
    }
  }
  if (has_explicit) {
    if (!j.contains("branches") || !j.contains("head")) {
      throw ParseError(path + ": explicit models need both \"branches\" and \"head\"");
    }
    json model_json;
    model_json["branches"] = j["branches"];
    model_json["head"] = j["head"];
    config.explicit_model = detail::model_config_from_json(model_json, path);
    config.preset.clear();
  }
  if (j.contains("train")) {
    if (!j["train"].is_object()) throw ParseError(path + ": \"train\" must be an object");
    config.train = train_spec_from_json(j["train"], path + ": train");
  }
  if (j.contains("resample_length")) {
    config.pipeline.resample_length = j["resample_length"].get<std::size_t>();
    if (config.pipeline.resample_length < 2) {
      throw ParseError(path + ": resample_length must be >= 2");
    }
  }
  if (j.contains("seed")) config.model_seed = j["seed"].get<std::uint64_t>();

  config.pipeline.append_curve_means = (config.preset == "mlp");
  return config;
}

ModelConfig resolve_model_config(const RunConfig& config, const MixedDataset& dataset) {
  if (config.explicit_model.has_value()) {
    ModelConfig model = *config.explicit_model;
    model.seed = config.model_seed;
    return model;
  }
  const std::size_t numeric = dataset.numeric_width();
  const std::size_t channels = dataset.curves.rank() == 3 ? dataset.curves.dim(1) : 0;
  const std::size_t length = dataset.curve_length();
  if (config.preset == "hdnn") {
    return stock_hdnn_config(numeric, channels, length, config.model_seed);
  }
  if (config.preset == "cnn") {
    return stock_cnn_config(channels, length, config.model_seed);
  }
  if (config.preset == "mlp") {
    return stock_mlp_config(numeric, config.model_seed);
  }
  throw ValueError("unknown preset \"" + config.preset + "\"");
}

}  // namespace hdnn

#include "config_json.hpp"

#include <set>

namespace hdnn::detail {

void check_keys(const json& obj, const std::initializer_list<const char*>& allowed,
                const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ParseError(where + ": unknown key \"" + it.key() + "\"");
    }
  }
}

json layer_to_json(const LayerSpec& spec) {
  json j;
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    j["type"] = "dense";
    j["units"] = d->units;
  } else if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
    j["type"] = "conv1d";
    j["filters"] = c->filters;
    j["kernel"] = c->kernel;
    j["stride"] = c->stride;
    if (c->padding.has_value()) {
      j["padding"] = *c->padding;
    } else {
      j["padding"] = "same";
    }
  } else if (std::holds_alternative<ReluSpec>(spec)) {
    j["type"] = "relu";
  } else if (std::holds_alternative<BatchNormSpec>(spec)) {
    j["type"] = "batch_norm";
  } else if (const auto* d2 = std::get_if<DropoutSpec>(&spec)) {
    j["type"] = "dropout";
    j["rate"] = d2->rate;
  } else if (const auto* p = std::get_if<MaxPool1dSpec>(&spec)) {
    j["type"] = "max_pool1d";
    j["window"] = p->window;
    j["stride"] = p->stride;
  } else {
    j["type"] = "global_avg_pool";
  }
  return j;
}

LayerSpec layer_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ParseError(where + ": layer entries need a \"type\" string");
  }
  const std::string type = j["type"].get<std::string>();
  if (type == "dense") {
    check_keys(j, {"type", "units"}, where);
    DenseSpec d;
    if (!j.contains("units")) throw ParseError(where + ": dense layer needs \"units\"");
    d.units = j["units"].get<std::size_t>();
    return d;
  }
  if (type == "conv1d") {
    check_keys(j, {"type", "filters", "kernel", "stride", "padding"}, where);
    Conv1dSpec c;
    if (!j.contains("filters") || !j.contains("kernel")) {
      throw ParseError(where + ": conv1d layer needs \"filters\" and \"kernel\"");
    }
    c.filters = j["filters"].get<std::size_t>();
    c.kernel = j["kernel"].get<std::size_t>();
    if (j.contains("stride")) c.stride = j["stride"].get<std::size_t>();
    if (j.contains("padding") && !(j["padding"].is_string() && j["padding"] == "same")) {
      c.padding = j["padding"].get<std::size_t>();
    }
    return c;
  }
  if (type == "relu") {
    check_keys(j, {"type"}, where);
    return ReluSpec{};
  }
  if (type == "batch_norm") {
    check_keys(j, {"type"}, where);
    return BatchNormSpec{};
  }
  if (type == "dropout") {
    check_keys(j, {"type", "rate"}, where);
    DropoutSpec d;
    if (j.contains("rate")) d.rate = j["rate"].get<double>();
    return d;
  }
  if (type == "max_pool1d") {
    check_keys(j, {"type", "window", "stride"}, where);
    MaxPool1dSpec p;
    if (j.contains("window")) p.window = j["window"].get<std::size_t>();
    if (j.contains("stride")) p.stride = j["stride"].get<std::size_t>();
    return p;
  }
  if (type == "global_avg_pool") {
    check_keys(j, {"type"}, where);
    return GlobalAvgPoolSpec{};
  }
  throw ParseError(where + ": unknown layer type \"" + type + "\"");
}

namespace {

json branch_to_json(const BranchSpec& b) {
  json j;
  j["name"] = b.name;
  j["kind"] = b.kind == BranchKind::NumericMLP ? "numeric_mlp" : "sequence_cnn";
  if (b.kind == BranchKind::NumericMLP) {
    j["input_features"] = b.input_features;
  } else {
    j["input_channels"] = b.input_channels;
    j["input_length"] = b.input_length;
  }
  j["layers"] = json::array();
  for (const LayerSpec& l : b.layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

BranchSpec branch_from_json(const json& j, const std::string& where) {
  check_keys(j, {"name", "kind", "input_features", "input_channels", "input_length", "layers"},
             where);
  BranchSpec b;
  if (!j.contains("name") || !j.contains("kind")) {
    throw ParseError(where + ": branches need \"name\" and \"kind\"");
  }
  b.name = j["name"].get<std::string>();
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "numeric_mlp") {
    b.kind = BranchKind::NumericMLP;
  } else if (kind == "sequence_cnn") {
    b.kind = BranchKind::SequenceCNN;
  } else {
    throw ParseError(where + ": unknown branch kind \"" + kind + "\"");
  }
  if (j.contains("input_features")) b.input_features = j["input_features"].get<std::size_t>();
  if (j.contains("input_channels")) b.input_channels = j["input_channels"].get<std::size_t>();
  if (j.contains("input_length")) b.input_length = j["input_length"].get<std::size_t>();
  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw ParseError(where + ": branches need a \"layers\" array");
  }
  std::size_t i = 0;
  for (const json& lj : j["layers"]) {
    b.layers.push_back(layer_from_json(lj, where + " layer " + std::to_string(i++)));
  }
  return b;
}

}  // namespace

json model_config_to_json(const ModelConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["branches"] = json::array();
  for (const BranchSpec& b : config.branches) j["branches"].push_back(branch_to_json(b));
  json h;
  h["task"] = config.head.task == TaskKind::Regression ? "regression" : "classification";
  h["output_width"] = config.head.output_width;
  h["layers"] = json::array();
  for (const LayerSpec& l : config.head.layers) h["layers"].push_back(layer_to_json(l));
  j["head"] = h;
  return j;
}

ModelConfig model_config_from_json(const json& j, const std::string& where) {
  check_keys(j, {"seed", "branches", "head"}, where);
  ModelConfig config;
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (!j.contains("branches") || !j["branches"].is_array()) {
    throw ParseError(where + ": model config needs a \"branches\" array");
  }
  std::size_t i = 0;
  for (const json& bj : j["branches"]) {
    config.branches.push_back(branch_from_json(bj, where + " branch " + std::to_string(i++)));
  }
  if (!j.contains("head") || !j["head"].is_object()) {
    throw ParseError(where + ": model config needs a \"head\" object");
  }
  const json& h = j["head"];
  check_keys(h, {"task", "output_width", "layers"}, where + " head");
  if (h.contains("task")) {
    const std::string task = h["task"].get<std::string>();
    if (task == "regression") {
      config.head.task = TaskKind::Regression;
    } else if (task == "classification") {
      config.head.task = TaskKind::Classification;
    } else {
      throw ParseError(where + " head: unknown task \"" + task + "\"");
    }
  }
  if (h.contains("output_width")) config.head.output_width = h["output_width"].get<std::size_t>();
  if (!h.contains("layers") || !h["layers"].is_array()) {
    throw ParseError(where + " head: needs a \"layers\" array");
  }
  i = 0;
  for (const json& lj : h["layers"]) {
    config.head.layers.push_back(layer_from_json(lj, where + " head layer " + std::to_string(i++)));
  }
  return config;
}

std::string model_config_to_text(const ModelConfig& config) {
  return model_config_to_json(config).dump();
}

ModelConfig model_config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  return model_config_from_json(j, "model config");
}

}  // namespace hdnn::detail

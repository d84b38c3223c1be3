// Internal ModelConfig <-> JSON mapping shared by the checkpoint writer and
// the run-config parser. Not installed; public headers stay vendor-free.
#pragma once

#include <string>

#include <json.hpp>

#include "hdnn/errors.hpp"
#include "hdnn/model.hpp"

namespace hdnn::detail {

using nlohmann::json;

// Rejects keys outside `allowed`; `where` names the object in errors.
void check_keys(const json& obj, const std::initializer_list<const char*>& allowed,
                const std::string& where);

json layer_to_json(const LayerSpec& spec);
LayerSpec layer_from_json(const json& j, const std::string& where);

json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const json& j, const std::string& where);

// Canonical text form stored in checkpoints: nlohmann dump with sorted keys.
std::string model_config_to_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);

}  // namespace hdnn::detail

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hdnn/data.hpp"
#include "hdnn/losses.hpp"
#include "hdnn/model.hpp"

namespace hdnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary model bundle, little-endian throughout:
///
///   magic "HDNN" | version u32 | config text (u64 length + bytes) |
///   record count u64 | records | checksum u64 (FNV-1a of all prior bytes)
///
/// Each record is a named tensor: name (u64 length + bytes), rank u32, dims
/// (u64 each), then raw IEEE-754 doubles. Records carry the parameters,
/// batch-norm running statistics, fitted normalizer statistics, the dataset
/// assembly options the model was trained with, and, when given, the
/// optimizer moments. Loading a file whose version exceeds kCheckpointVersion
/// fails; truncation and corruption are caught by the length and checksum.
void save_checkpoint(const std::string& path, const HybridModel& model,
                     const AdamState* optimizer = nullptr,
                     const DatasetOptions* dataset_options = nullptr);

struct LoadedCheckpoint {
  HybridModel model;
  std::optional<AdamState> optimizer;
  std::optional<DatasetOptions> dataset_options;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace hdnn

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdnn/normalizer.hpp"
#include "hdnn/tensor.hpp"

namespace hdnn {

// Channel order used everywhere: caliper, acoustic time, gamma ray, deep and
// shallow lateral resistivity, spontaneous potential, shale content.
extern const std::array<const char*, kCurveChannelCount> kCurveChannelNames;

struct AttributeRow {
  std::string well_id;
  std::string formation_id;
  double formation_top_m = 0.0;
  double formation_base_m = 0.0;
  double perforation_thickness_m = 0.0;
  long perforation_count = 0;
  std::vector<std::string> categories;  // aligned with RawWellData::category_names
  std::optional<double> production_t_per_d;
};

struct CurveSample {
  double depth_m = 0.0;
  std::array<double, kCurveChannelCount> channels{};
};

/// Parsed attributes.csv + curves.csv, validated but otherwise untouched:
/// attribute row order preserved, curve samples grouped by well in depth
/// order.
struct RawWellData {
  std::vector<std::string> category_names;  // from cat:<name> header columns
  bool has_production_column = false;
  std::vector<AttributeRow> attributes;
  std::map<std::string, std::vector<CurveSample>> curves;
};

/// Reads attributes.csv and curves.csv from `directory`. Validates headers,
/// field syntax (errors carry file, line, and column), per-well depth
/// monotonicity, base > top, and key uniqueness.
RawWellData load_dataset(const std::string& directory);

/// One formation's curve window: depths inside [top, base] with all channels.
struct CurveSegment {
  std::vector<double> depths;
  std::array<std::vector<double>, kCurveChannelCount> channels;
  std::size_t sample_count() const { return depths.size(); }
};

/// All samples with top_m <= depth <= base_m, in depth order. Fewer than two
/// in-range samples is an error.
CurveSegment extract_formation_curves(const std::vector<CurveSample>& well_curves, double top_m,
                                      double base_m);

/// Linear resample of every channel onto `length` equally spaced depths from
/// the segment's first to last depth, endpoints included and preserved
/// exactly.
Tensor resample_segment(const CurveSegment& segment, std::size_t length);

/// Unit basis vector over the vocabulary; unknown tokens are an error.
Tensor one_hot_encode(const std::string& token, const std::vector<std::string>& vocabulary);

/// Per-channel arithmetic mean of a [C x L] curve tensor.
Tensor curve_averages(const Tensor& curves);

struct InstanceKey {
  std::string well_id;
  std::string formation_id;
  bool operator==(const InstanceKey&) const = default;
  bool operator<(const InstanceKey& o) const {
    return well_id != o.well_id ? well_id < o.well_id : formation_id < o.formation_id;
  }
};

/// Model-ready instances: numeric feature matrix, fixed-length curve tensor,
/// and optional labels, aligned on the first dimension.
struct MixedDataset {
  std::vector<InstanceKey> keys;
  std::vector<std::string> numeric_feature_names;
  Tensor numeric;  // [M x d_num]
  Tensor curves;   // [M x channels x L]
  std::vector<double> labels;
  bool has_labels = false;

  std::size_t size() const { return keys.size(); }
  std::size_t numeric_width() const { return numeric.rank() == 2 ? numeric.dim(1) : 0; }
  std::size_t curve_length() const { return curves.rank() == 3 ? curves.dim(2) : 0; }

  MixedDataset subset(const std::vector<std::size_t>& indices) const;
};

struct DatasetOptions {
  std::size_t resample_length = 64;
  // Appends the per-channel curve means as extra numeric columns (the
  // attributes-only baseline input: 4 base features + 7 means = 11).
  bool append_curve_means = false;
};

/// Assembles model-ready instances: derives thickness = base - top and median
/// depth = (top + base) / 2, one-hot expands categorical columns (vocabulary:
/// sorted unique tokens per column), extracts and resamples each formation's
/// curve window, and carries labels when the production column is filled.
MixedDataset build_dataset(const RawWellData& raw, const DatasetOptions& options);

/// Population z-score statistics from a training split.
Normalizer fit_normalizer(const MixedDataset& train);

/// Normalizes numeric features, curves, and labels (when present).
MixedDataset apply_normalizer(const Normalizer& normalizer, const MixedDataset& dataset);

/// Maps normalized predictions back into label units.
std::vector<double> inverse_labels(const Normalizer& normalizer, const std::vector<double>& values);

/// Deterministic key-shuffled split: instances ordered by key, shuffled with
/// the seeded stream, and cut at round(train_fraction * M). Partitions depend
/// only on the key set and the seed, not on input row order.
std::pair<MixedDataset, MixedDataset> split_dataset(const MixedDataset& dataset,
                                                    double train_fraction, std::uint64_t seed);

}  // namespace hdnn

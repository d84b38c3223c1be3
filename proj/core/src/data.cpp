#include "hdnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hdnn/errors.hpp"
#include "hdnn/rng.hpp"

namespace hdnn {

const std::array<const char*, kCurveChannelCount> kCurveChannelNames = {
    "CAL", "AC", "GR", "LLD", "LLS", "SP", "VSH"};

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, const std::string& file, std::size_t line,
                    std::size_t column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError(file, line, column, "expected a number, got \"" + text + "\"");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw ParseError(file, line, column, "expected a number, got \"" + text + "\"");
  }
  return value;
}

long parse_long(const std::string& text, const std::string& file, std::size_t line,
                std::size_t column) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ParseError(file, line, column, "expected an integer, got \"" + text + "\"");
  }
  if (used != text.size()) {
    throw ParseError(file, line, column, "expected an integer, got \"" + text + "\"");
  }
  return value;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

RawWellData load_dataset(const std::string& directory) {
  const std::string attr_path = directory + "/attributes.csv";
  const std::string curve_path = directory + "/curves.csv";
  RawWellData raw;

  // attributes.csv
  {
    const std::vector<std::string> lines = read_lines(attr_path);
    if (lines.empty()) throw ParseError(attr_path, 1, "empty file");
    std::vector<std::string> header = split_csv_line(lines[0]);
    const std::vector<std::string> fixed = {"well_id",
                                            "formation_id",
                                            "formation_top_m",
                                            "formation_base_m",
                                            "perforation_thickness_m",
                                            "perforation_count"};
    if (header.size() < fixed.size() ||
        !std::equal(fixed.begin(), fixed.end(), header.begin())) {
      throw ParseError(attr_path, 1, "unexpected header; expected it to start with "
                                     "well_id,formation_id,formation_top_m,formation_base_m,"
                                     "perforation_thickness_m,perforation_count");
    }
    std::size_t col = fixed.size();
    while (col < header.size() && header[col].rfind("cat:", 0) == 0) {
      raw.category_names.push_back(header[col].substr(4));
      ++col;
    }
    if (col < header.size()) {
      if (header[col] != "production_t_per_d") {
        throw ParseError(attr_path, 1, col + 1, "unexpected column \"" + header[col] + "\"");
      }
      raw.has_production_column = true;
      ++col;
    }
    if (col != header.size()) {
      throw ParseError(attr_path, 1, col + 1, "unexpected trailing columns");
    }

    const std::size_t expected = fixed.size() + raw.category_names.size() +
                                 (raw.has_production_column ? 1 : 0);
    std::set<InstanceKey> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const std::vector<std::string> f = split_csv_line(lines[li]);
      if (f.size() != expected) {
        throw ParseError(attr_path, li + 1, "expected " + std::to_string(expected) +
                                                " fields, got " + std::to_string(f.size()));
      }
      AttributeRow row;
      row.well_id = f[0];
      row.formation_id = f[1];
      row.formation_top_m = parse_double(f[2], attr_path, li + 1, 3);
      row.formation_base_m = parse_double(f[3], attr_path, li + 1, 4);
      row.perforation_thickness_m = parse_double(f[4], attr_path, li + 1, 5);
      row.perforation_count = parse_long(f[5], attr_path, li + 1, 6);
      if (row.formation_base_m <= row.formation_top_m) {
        throw ParseError(attr_path, li + 1,
                         "formation_base_m must exceed formation_top_m for well " + row.well_id);
      }
      for (std::size_t c = 0; c < raw.category_names.size(); ++c) {
        row.categories.push_back(f[6 + c]);
      }
      if (raw.has_production_column) {
        const std::string& prod = f.back();
        if (!prod.empty()) {
          row.production_t_per_d = parse_double(prod, attr_path, li + 1, expected);
        }
      }
      if (!seen.insert({row.well_id, row.formation_id}).second) {
        throw ParseError(attr_path, li + 1,
                         "duplicate instance key " + row.well_id + "/" + row.formation_id);
      }
      raw.attributes.push_back(std::move(row));
    }
  }

  // curves.csv
  {
    const std::vector<std::string> lines = read_lines(curve_path);
    if (lines.empty()) throw ParseError(curve_path, 1, "empty file");
    std::string expected_header = "well_id,depth_m";
    for (const char* name : kCurveChannelNames) expected_header += std::string(",") + name;
    if (lines[0] != expected_header) {
      throw ParseError(curve_path, 1, "unexpected header; expected " + expected_header);
    }
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      const std::vector<std::string> f = split_csv_line(lines[li]);
      if (f.size() != 2 + kCurveChannelCount) {
        throw ParseError(curve_path, li + 1, "expected " + std::to_string(2 + kCurveChannelCount) +
                                                 " fields, got " + std::to_string(f.size()));
      }
      CurveSample sample;
      sample.depth_m = parse_double(f[1], curve_path, li + 1, 2);
      for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
        sample.channels[c] = parse_double(f[2 + c], curve_path, li + 1, 3 + c);
      }
      auto& well = raw.curves[f[0]];
      if (!well.empty() && sample.depth_m <= well.back().depth_m) {
        throw ParseError(curve_path, li + 1,
                         "depths must be strictly increasing within well " + f[0]);
      }
      well.push_back(sample);
    }
  }

  return raw;
}

CurveSegment extract_formation_curves(const std::vector<CurveSample>& well_curves, double top_m,
                                      double base_m) {
  CurveSegment segment;
  for (const CurveSample& s : well_curves) {
    if (s.depth_m < top_m || s.depth_m > base_m) continue;
    segment.depths.push_back(s.depth_m);
    for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
      segment.channels[c].push_back(s.channels[c]);
    }
  }
  if (segment.sample_count() < 2) {
    throw ValueError("formation [" + std::to_string(top_m) + ", " + std::to_string(base_m) +
                     "] covers " + std::to_string(segment.sample_count()) +
                     " curve samples; need at least 2");
  }
  return segment;
}

Tensor resample_segment(const CurveSegment& segment, std::size_t length) {
  if (length < 2) throw ValueError("resample length must be >= 2");
  const std::size_t n = segment.sample_count();
  if (n < 2) throw ValueError("resample needs a segment with at least 2 samples");

  const double first = segment.depths.front();
  const double last = segment.depths.back();
  const double step = (last - first) / static_cast<double>(length - 1);

  Tensor out({kCurveChannelCount, length});
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < length; ++i) {
    // Endpoints are copied, not interpolated, so they are preserved exactly.
    if (i == 0) {
      for (std::size_t c = 0; c < kCurveChannelCount; ++c) out.at(c, 0) = segment.channels[c].front();
      continue;
    }
    if (i == length - 1) {
      for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
        out.at(c, length - 1) = segment.channels[c].back();
      }
      continue;
    }
    const double depth = first + static_cast<double>(i) * step;
    while (cursor + 2 < n && segment.depths[cursor + 1] <= depth) ++cursor;
    const double d0 = segment.depths[cursor], d1 = segment.depths[cursor + 1];
    const double w = (depth - d0) / (d1 - d0);
    for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
      const double v0 = segment.channels[c][cursor], v1 = segment.channels[c][cursor + 1];
      out.at(c, i) = v0 + w * (v1 - v0);
    }
  }
  return out;
}

Tensor one_hot_encode(const std::string& token, const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) throw ValueError("one_hot_encode: empty vocabulary");
  Tensor out({vocabulary.size()});
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == token) {
      out[i] = 1.0;
      return out;
    }
  }
  std::string vocab_list;
  for (const std::string& v : vocabulary) {
    if (!vocab_list.empty()) vocab_list += ", ";
    vocab_list += v;
  }
  throw ValueError("one_hot_encode: token \"" + token + "\" not in vocabulary {" + vocab_list +
                   "}");
}

Tensor curve_averages(const Tensor& curves) {
  if (curves.rank() != 2) {
    throw ShapeError("curve_averages expects [channels x length], got " +
                     shape_to_string(curves.shape()));
  }
  return mean_axis(curves, 1);
}

MixedDataset MixedDataset::subset(const std::vector<std::size_t>& indices) const {
  MixedDataset out;
  out.numeric_feature_names = numeric_feature_names;
  out.has_labels = has_labels;
  if (indices.empty()) return out;

  const std::size_t d = numeric_width();
  const std::size_t channels = curves.dim(1);
  const std::size_t length = curve_length();
  out.numeric = Tensor({indices.size(), d});
  out.curves = Tensor({indices.size(), channels, length});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    out.keys.push_back(keys[src]);
    for (std::size_t i = 0; i < d; ++i) out.numeric.at(r, i) = numeric.at(src, i);
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < length; ++t) out.curves.at(r, c, t) = curves.at(src, c, t);
    }
    if (has_labels) out.labels.push_back(labels[src]);
  }
  return out;
}

MixedDataset build_dataset(const RawWellData& raw, const DatasetOptions& options) {
  if (raw.attributes.empty()) throw ValueError("build_dataset: no attribute rows");
  const std::size_t m = raw.attributes.size();

  // Column vocabularies: sorted unique tokens.
  std::vector<std::vector<std::string>> vocabularies(raw.category_names.size());
  for (std::size_t c = 0; c < raw.category_names.size(); ++c) {
    std::set<std::string> tokens;
    for (const AttributeRow& row : raw.attributes) tokens.insert(row.categories[c]);
    vocabularies[c].assign(tokens.begin(), tokens.end());
  }

  MixedDataset ds;
  ds.numeric_feature_names = {"formation_thickness_m", "formation_median_depth_m",
                              "perforation_thickness_m", "perforation_count"};
  for (std::size_t c = 0; c < raw.category_names.size(); ++c) {
    for (const std::string& token : vocabularies[c]) {
      ds.numeric_feature_names.push_back("cat:" + raw.category_names[c] + "=" + token);
    }
  }
  if (options.append_curve_means) {
    for (const char* name : kCurveChannelNames) {
      ds.numeric_feature_names.push_back(std::string("mean_") + name);
    }
  }

  const std::size_t d = ds.numeric_feature_names.size();
  ds.numeric = Tensor({m, d});
  ds.curves = Tensor({m, kCurveChannelCount, options.resample_length});

  std::size_t labeled = 0;
  for (const AttributeRow& row : raw.attributes) {
    if (row.production_t_per_d.has_value()) ++labeled;
  }
  if (labeled != 0 && labeled != m) {
    throw ValueError("build_dataset: production is set on " + std::to_string(labeled) + " of " +
                     std::to_string(m) + " rows; it must be all or none");
  }
  ds.has_labels = labeled == m;

  for (std::size_t r = 0; r < m; ++r) {
    const AttributeRow& row = raw.attributes[r];
    ds.keys.push_back({row.well_id, row.formation_id});

    auto well = raw.curves.find(row.well_id);
    if (well == raw.curves.end()) {
      throw ValueError("build_dataset: no curves for well " + row.well_id);
    }
    const CurveSegment segment =
        extract_formation_curves(well->second, row.formation_top_m, row.formation_base_m);
    const Tensor resampled = resample_segment(segment, options.resample_length);
    for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
      for (std::size_t t = 0; t < options.resample_length; ++t) {
        ds.curves.at(r, c, t) = resampled.at(c, t);
      }
    }

    std::size_t col = 0;
    ds.numeric.at(r, col++) = row.formation_base_m - row.formation_top_m;
    ds.numeric.at(r, col++) = (row.formation_top_m + row.formation_base_m) / 2.0;
    ds.numeric.at(r, col++) = row.perforation_thickness_m;
    ds.numeric.at(r, col++) = static_cast<double>(row.perforation_count);
    for (std::size_t c = 0; c < vocabularies.size(); ++c) {
      const Tensor one_hot = one_hot_encode(row.categories[c], vocabularies[c]);
      for (std::size_t i = 0; i < one_hot.size(); ++i) ds.numeric.at(r, col++) = one_hot[i];
    }
    if (options.append_curve_means) {
      const Tensor means = curve_averages(resampled);
      for (std::size_t c = 0; c < kCurveChannelCount; ++c) ds.numeric.at(r, col++) = means[c];
    }

    if (ds.has_labels) ds.labels.push_back(*row.production_t_per_d);
  }
  return ds;
}

namespace {

void mean_std(const std::vector<double>& values, double& mean_out, double& std_out) {
  const double inv_n = 1.0 / static_cast<double>(values.size());
  double m = 0.0;
  for (double v : values) m += v;
  m *= inv_n;
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  var *= inv_n;  // population variance
  mean_out = m;
  std_out = std::max(std::sqrt(var), Normalizer::kStdFloor);
}

}  // namespace

Normalizer fit_normalizer(const MixedDataset& train) {
  if (train.size() < 2) throw ValueError("fit_normalizer needs at least 2 training instances");
  Normalizer n;
  const std::size_t m = train.size();
  const std::size_t d = train.numeric_width();

  n.numeric_mean.resize(d);
  n.numeric_std.resize(d);
  std::vector<double> column(m);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t r = 0; r < m; ++r) column[r] = train.numeric.at(r, i);
    mean_std(column, n.numeric_mean[i], n.numeric_std[i]);
  }

  const std::size_t length = train.curve_length();
  std::vector<double> pooled(m * length);
  for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t t = 0; t < length; ++t) pooled[r * length + t] = train.curves.at(r, c, t);
    }
    mean_std(pooled, n.channel_mean[c], n.channel_std[c]);
  }

  if (train.has_labels) {
    mean_std(train.labels, n.label_mean, n.label_std);
  }
  return n;
}

MixedDataset apply_normalizer(const Normalizer& normalizer, const MixedDataset& dataset) {
  const std::size_t d = dataset.numeric_width();
  if (normalizer.numeric_mean.size() != d) {
    throw ShapeError("normalizer was fitted on " + std::to_string(normalizer.numeric_mean.size()) +
                     " numeric features, dataset has " + std::to_string(d));
  }
  MixedDataset out = dataset;
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      out.numeric.at(r, i) = (out.numeric.at(r, i) - normalizer.numeric_mean[i]) /
                             normalizer.numeric_std[i];
    }
    for (std::size_t c = 0; c < kCurveChannelCount; ++c) {
      for (std::size_t t = 0; t < out.curve_length(); ++t) {
        out.curves.at(r, c, t) = (out.curves.at(r, c, t) - normalizer.channel_mean[c]) /
                                 normalizer.channel_std[c];
      }
    }
  }
  if (out.has_labels) {
    for (double& label : out.labels) label = normalizer.normalize_label(label);
  }
  return out;
}

std::vector<double> inverse_labels(const Normalizer& normalizer,
                                   const std::vector<double>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(normalizer.denormalize_label(v));
  return out;
}

std::pair<MixedDataset, MixedDataset> split_dataset(const MixedDataset& dataset,
                                                    double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || train_fraction > 1.0) {
    throw ValueError("split_dataset: train_fraction must lie in (0, 1]");
  }
  const std::size_t m = dataset.size();

  // Deterministic in the key set: order by key before shuffling so the input
  // row order cannot influence the partition.
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.keys[a] < dataset.keys[b];
  });
  RngStream rng(seed);
  rng.shuffle(order);

  const auto train_count = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(m)));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_count);
  std::vector<std::size_t> test_idx(order.begin() + train_count, order.end());
  return {dataset.subset(train_idx), dataset.subset(test_idx)};
}

}  // namespace hdnn

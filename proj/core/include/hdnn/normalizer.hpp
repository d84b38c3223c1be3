#pragma once

#include <array>
#include <vector>

namespace hdnn {

inline constexpr std::size_t kCurveChannelCount = 7;

/// Fitted z-score statistics for every model input and for the label.
/// Numeric features normalize per column, curves per channel with statistics
/// pooled over instances and length, labels as a single scalar pair.
/// Standard deviations are floored so constant features map to zero.
struct Normalizer {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> numeric_mean;
  std::vector<double> numeric_std;
  std::array<double, kCurveChannelCount> channel_mean{};
  std::array<double, kCurveChannelCount> channel_std{};
  double label_mean = 0.0;
  double label_std = 1.0;

  double normalize_label(double value) const { return (value - label_mean) / label_std; }
  double denormalize_label(double value) const { return value * label_std + label_mean; }
};

}  // namespace hdnn

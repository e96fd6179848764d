#pragma once

// Sliding-window supervised datasets built from a bin series.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cellflow/features.hpp"
#include "cellflow/matrix.hpp"

namespace cellflow {

/// [uplink_count, downlink_count, uplink_bytes, downlink_bytes, ud_ratio]
const std::vector<std::string>& default_window_features();

struct WindowConfig {
  double bin_size = 1.0;
  std::size_t history_len = 1;
  std::vector<std::string> feature_names = default_window_features();
  std::string target_name = "uplink_count";

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct Window {
  Matrix history;  ///< history_len x feature count, oldest row first
  double target = 0.0;  ///< regression value, or class index for labeled windows
  std::int64_t target_bin_index = 0;
};

struct WindowedDataset {
  std::vector<Window> windows;
  WindowConfig config;

  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
  std::size_t feature_count() const noexcept { return config.feature_names.size(); }
};

/// Non-fatal conditions reported by dataset transforms.
struct Diagnostics {
  std::vector<std::string> warnings;
};

/// Window i covers rows [i, i + history_len) and targets row i + history_len.
/// Bins must be strictly index-ascending; they need not be contiguous.
WindowedDataset make_windows(std::span<const BinnedSample> bins, const WindowConfig& config);

/// Windows labeled with a class index instead of a bin feature.
WindowedDataset make_labeled_windows(std::span<const BinnedSample> bins, const WindowConfig& config,
                                     int label);

/// Keeps windows whose target is non-zero; histories are left untouched.
WindowedDataset filter_nonzero_targets(const WindowedDataset& ds, Diagnostics* diagnostics = nullptr);

/// Chronological split: the first floor(n * train_fraction) windows train.
std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, double train_fraction);

std::vector<double> targets(const WindowedDataset& ds);

enum class TargetScaling { MinMax, Identity };

/// Min-max scaling to [0, 1] per feature column and for the target.
/// A constant column maps to 0.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> feature_min, std::vector<double> feature_max, double target_min,
         double target_max);

  bool fitted() const noexcept { return fitted_; }
  std::span<const double> feature_min() const noexcept { return feature_min_; }
  std::span<const double> feature_max() const noexcept { return feature_max_; }
  double target_min() const noexcept { return target_min_; }
  double target_max() const noexcept { return target_max_; }

  double scale_feature(std::size_t column, double value) const;
  double scale_target(double value) const;
  double invert_target(double scaled) const;

  /// Scaled copy of the dataset (histories and targets).
  WindowedDataset apply(const WindowedDataset& ds) const;
  /// Scales histories only; targets are copied unchanged.
  WindowedDataset apply_features(const WindowedDataset& ds) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  void require_fitted() const;

  bool fitted_ = false;
  std::vector<double> feature_min_;
  std::vector<double> feature_max_;
  double target_min_ = 0.0;
  double target_max_ = 1.0;
};

/// Fits on training windows only. With TargetScaling::Identity the target
/// range is fixed to [0, 1] so targets pass through unchanged.
Scaler fit_scaler(const WindowedDataset& train, TargetScaling target_scaling = TargetScaling::MinMax);

/// Named (bin size, history, padding) configuration.
struct WindowPreset {
  std::string name;
  double bin_size;
  std::size_t history_len;
  PaddingMode padding;
  std::size_t max_run;
};

const std::vector<WindowPreset>& window_presets();

/// Throws Error listing the valid names when `name` is unknown.
const WindowPreset& find_window_preset(std::string_view name);

/// Debug dump: one `window,<i>,<target_bin_index>,<target>` line followed
/// by `history_len` comma-separated feature rows per window.
void write_windows(std::ostream& out, const WindowedDataset& ds);

}  // namespace cellflow

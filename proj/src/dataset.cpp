#include "cellflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cellflow/error.hpp"
#include "cellflow/textio.hpp"

namespace cellflow {
namespace {

WindowedDataset windows_over(std::span<const BinnedSample> bins, const WindowConfig& config,
                             const auto& target_of) {
  if (config.history_len == 0) throw Error("history length must be at least 1");
  if (config.feature_names.empty()) throw Error("window feature list is empty");
  if (bins.size() <= config.history_len) {
    throw Error("need more than " + std::to_string(config.history_len) + " bins for history " +
                std::to_string(config.history_len) + ", got " + std::to_string(bins.size()));
  }
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (bins[i].bin_index <= bins[i - 1].bin_index) {
      throw Error("bins must be strictly index-ascending (position " + std::to_string(i) + ")");
    }
  }

  const std::size_t width = config.feature_names.size();
  Matrix rows(bins.size(), width);
  for (std::size_t r = 0; r < bins.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) rows(r, c) = feature_value(bins[r], config.feature_names[c]);
  }

  WindowedDataset ds;
  ds.config = config;
  const std::size_t count = bins.size() - config.history_len;
  ds.windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Window w;
    w.history = Matrix(config.history_len, width);
    for (std::size_t r = 0; r < config.history_len; ++r) {
      std::ranges::copy(rows.row(i + r), w.history.row(r).begin());
    }
    const BinnedSample& next = bins[i + config.history_len];
    w.target = target_of(next);
    w.target_bin_index = next.bin_index;
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

}  // namespace

const std::vector<std::string>& default_window_features() {
  static const std::vector<std::string> names{"uplink_count", "downlink_count", "uplink_bytes",
                                              "downlink_bytes", "ud_ratio"};
  return names;
}

WindowedDataset make_windows(std::span<const BinnedSample> bins, const WindowConfig& config) {
  feature_value(BinnedSample{}, config.target_name);  // validates the name
  return windows_over(bins, config, [&](const BinnedSample& b) {
    return feature_value(b, config.target_name);
  });
}

WindowedDataset make_labeled_windows(std::span<const BinnedSample> bins, const WindowConfig& config,
                                     int label) {
  return windows_over(bins, config, [&](const BinnedSample&) { return static_cast<double>(label); });
}

WindowedDataset filter_nonzero_targets(const WindowedDataset& ds, Diagnostics* diagnostics) {
  WindowedDataset out;
  out.config = ds.config;
  for (const Window& w : ds.windows) {
    if (w.target != 0.0) out.windows.push_back(w);
  }
  if (out.empty() && diagnostics) {
    diagnostics->warnings.push_back("every target is zero; the filtered dataset is empty");
  }
  return out;
}

std::pair<WindowedDataset, WindowedDataset> split(const WindowedDataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie strictly between 0 and 1");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(ds.size()) * train_fraction));
  if (n_train == 0 || n_train >= ds.size()) {
    throw Error("split of " + std::to_string(ds.size()) + " windows at fraction " +
                textio::format_double(train_fraction) + " leaves one side empty");
  }
  WindowedDataset train{{ds.windows.begin(), ds.windows.begin() + static_cast<std::ptrdiff_t>(n_train)},
                        ds.config};
  WindowedDataset test{{ds.windows.begin() + static_cast<std::ptrdiff_t>(n_train), ds.windows.end()},
                       ds.config};
  return {std::move(train), std::move(test)};
}

std::vector<double> targets(const WindowedDataset& ds) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const Window& w : ds.windows) out.push_back(w.target);
  return out;
}

Scaler::Scaler(std::vector<double> feature_min, std::vector<double> feature_max, double target_min,
               double target_max)
    : fitted_(true),
      feature_min_(std::move(feature_min)),
      feature_max_(std::move(feature_max)),
      target_min_(target_min),
      target_max_(target_max) {
  if (feature_min_.size() != feature_max_.size()) throw ShapeError("scaler range size mismatch");
  for (std::size_t i = 0; i < feature_min_.size(); ++i) {
    if (!(feature_max_[i] >= feature_min_[i])) throw Error("scaler feature max below min");
  }
  if (!(target_max_ >= target_min_)) throw Error("scaler target max below min");
}

void Scaler::require_fitted() const {
  if (!fitted_) throw Error("scaler used before it was fitted");
}

double Scaler::scale_feature(std::size_t column, double value) const {
  require_fitted();
  const double span = feature_max_.at(column) - feature_min_[column];
  return span > 0.0 ? (value - feature_min_[column]) / span : 0.0;
}

double Scaler::scale_target(double value) const {
  require_fitted();
  const double span = target_max_ - target_min_;
  return span > 0.0 ? (value - target_min_) / span : 0.0;
}

double Scaler::invert_target(double scaled) const {
  require_fitted();
  return scaled * (target_max_ - target_min_) + target_min_;
}

WindowedDataset Scaler::apply_features(const WindowedDataset& ds) const {
  require_fitted();
  if (ds.feature_count() != feature_min_.size()) {
    throw ShapeError("dataset has " + std::to_string(ds.feature_count()) +
                     " features but the scaler was fitted on " +
                     std::to_string(feature_min_.size()));
  }
  WindowedDataset out = ds;
  for (Window& w : out.windows) {
    for (std::size_t r = 0; r < w.history.rows(); ++r) {
      for (std::size_t c = 0; c < w.history.cols(); ++c) {
        w.history(r, c) = scale_feature(c, w.history(r, c));
      }
    }
  }
  return out;
}

WindowedDataset Scaler::apply(const WindowedDataset& ds) const {
  WindowedDataset out = apply_features(ds);
  for (Window& w : out.windows) w.target = scale_target(w.target);
  return out;
}

Scaler fit_scaler(const WindowedDataset& train, TargetScaling target_scaling) {
  if (train.empty()) throw Error("cannot fit a scaler on an empty dataset");
  const std::size_t width = train.feature_count();
  std::vector<double> lo(width, std::numeric_limits<double>::infinity());
  std::vector<double> hi(width, -std::numeric_limits<double>::infinity());
  double tlo = std::numeric_limits<double>::infinity();
  double thi = -std::numeric_limits<double>::infinity();
  for (const Window& w : train.windows) {
    if (w.history.cols() != width) throw ShapeError("window width differs from feature count");
    for (std::size_t r = 0; r < w.history.rows(); ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        lo[c] = std::min(lo[c], w.history(r, c));
        hi[c] = std::max(hi[c], w.history(r, c));
      }
    }
    tlo = std::min(tlo, w.target);
    thi = std::max(thi, w.target);
  }
  if (target_scaling == TargetScaling::Identity) {
    tlo = 0.0;
    thi = 1.0;
  }
  return Scaler(std::move(lo), std::move(hi), tlo, thi);
}

const std::vector<WindowPreset>& window_presets() {
  static const std::vector<WindowPreset> presets{
      {"cfg-1x60", 1.0, 60, PaddingMode::Zero, 2},
      {"cfg-3x20", 3.0, 20, PaddingMode::Zero, 2},
      {"cfg-60x1", 60.0, 1, PaddingMode::Zero, 2},
      {"cfg-1x10", 1.0, 10, PaddingMode::Pro, 2},
  };
  return presets;
}

const WindowPreset& find_window_preset(std::string_view name) {
  std::vector<std::string> names;
  for (const WindowPreset& p : window_presets()) {
    if (p.name == name) return p;
    names.push_back(p.name);
  }
  throw Error("unknown preset '" + std::string(name) + "' (valid: " + textio::join(names, ", ") + ")");
}

void write_windows(std::ostream& out, const WindowedDataset& ds) {
  out << "# features=" << textio::join(ds.config.feature_names, ";")
      << " target=" << ds.config.target_name << " history=" << ds.config.history_len
      << " bin_size=" << textio::format_double(ds.config.bin_size) << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Window& w = ds.windows[i];
    out << "window," << i << ',' << w.target_bin_index << ',' << textio::format_double(w.target)
        << '\n';
    for (std::size_t r = 0; r < w.history.rows(); ++r) {
      for (std::size_t c = 0; c < w.history.cols(); ++c) {
        if (c) out << ',';
        out << textio::format_double(w.history(r, c));
      }
      out << '\n';
    }
  }
}

}  // namespace cellflow
